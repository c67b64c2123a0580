#pragma once

#include "rem/error.hpp"
#include "rem/local_model.hpp"
#include "rem/network.hpp"
#include "rem/parameters.hpp"
#include "rem/observation.hpp"
#include "rem/marginal.hpp"
#include "rem/enumeration.hpp"
#include "rem/inference.hpp"
#include "rem/score_info.hpp"
#include "rem/priors.hpp"
#include "rem/check.hpp"
#include "rem/io.hpp"
