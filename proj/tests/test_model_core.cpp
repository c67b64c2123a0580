#include <gtest/gtest.h>

#include "support.hpp"

using namespace rem;
using rem::testing::six_node;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

LocalModel affine_model() {
  Eigen::MatrixXd t(3, 1);
  t << 1, 2, 3;
  return LocalModel::affine(t);
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no rem::Error thrown";
  return ErrorKind::ParseError;
}

}  // namespace

// ---------------------------------------------------------------- network

TEST(BuildNetwork, ExampleGraphHasFiveClasses) {
  const Network net = six_node();
  ASSERT_EQ(net.size(), 6u);
  ASSERT_EQ(net.classes().size(), 5u);
  std::vector<std::string> ids;
  for (const auto& c : net.classes()) ids.push_back(c.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"X1", "X2", "X3", "X5", "X6"}));
  const std::size_t x3 = net.variable_index("X3"), x4 = net.variable_index("X4");
  EXPECT_EQ(net.class_of(x3), net.class_of(x4));
  EXPECT_EQ(net.tying_class(net.class_of(x3)).members, (std::vector<std::size_t>{x3, x4}));
  EXPECT_EQ(net.tying_class(net.class_of(x3)).config_count, 2u);
  // 1 + 1 + 2 + 4 + 2*3
  EXPECT_EQ(net.dimension(), 14u);
  EXPECT_EQ(net.family(net.variable_index("X5")), (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_EQ(net.configuration_count(), 128u);
}

TEST(BuildNetwork, SingleNode) {
  const Network net = build_network({{"A", {"x", "y"}, {}}}, {}, {});
  EXPECT_EQ(net.size(), 1u);
  EXPECT_EQ(net.classes().size(), 1u);
  EXPECT_EQ(net.config_key(0, 0), "_");
  EXPECT_EQ(net.dimension(), 1u);
}

TEST(BuildNetwork, SingletonTyingEqualsUntied) {
  std::vector<Variable> vars{{"A", {"0", "1"}, {}}, {"B", {"0", "1", "2"}, {}}};
  const Network a = build_network(vars, {{"B", {"A"}}}, {{"A"}, {"B"}});
  const Network b = build_network(vars, {{"B", {"A"}}}, {});
  ASSERT_EQ(a.classes().size(), b.classes().size());
  std::mt19937_64 rng(3);
  const ParameterSet p = rem::testing::random_parameters(a, rng);
  for (std::size_t x0 = 0; x0 < 2; ++x0)
    for (std::size_t x1 = 0; x1 < 3; ++x1) EXPECT_EQ(joint_prob(a, p, {x0, x1}), joint_prob(b, p, {x0, x1}));
}

TEST(BuildNetwork, TyingShapeMismatchOnLevels) {
  std::vector<Variable> vars{{"X1", {"a", "b"}, {}},
                             {"X2", {"a", "b"}, {}},
                             {"X3", {"a", "b", "c"}, {}},
                             {"X4", {"a", "b", "c", "d"}, {}}};
  EXPECT_EQ(kind_of([&] { build_network(vars, {{"X3", {"X1"}}, {"X4", {"X2"}}}, {{"X3", "X4"}}); }),
            ErrorKind::TyingShapeMismatch);
}

TEST(BuildNetwork, TyingShapeMismatchOnParents) {
  std::vector<Variable> vars{{"P", {"a", "b"}, {}},
                             {"Q", {"a", "b", "c"}, {}},
                             {"X", {"a", "b"}, {}},
                             {"Y", {"a", "b"}, {}}};
  EXPECT_EQ(kind_of([&] { build_network(vars, {{"X", {"P"}}, {"Y", {"Q"}}}, {{"X", "Y"}}); }),
            ErrorKind::TyingShapeMismatch);
  EXPECT_EQ(kind_of([&] { build_network(vars, {{"X", {"P"}}}, {{"X", "Y"}}); }), ErrorKind::TyingShapeMismatch);
}

TEST(BuildNetwork, CycleIsNamed) {
  std::vector<Variable> vars{{"a", {"0", "1"}, {}}, {"b", {"0", "1"}, {}}, {"c", {"0", "1"}, {}}};
  try {
    build_network(vars, {{"b", {"a"}}, {"c", {"b"}}, {"a", {"c"}}}, {});
    FAIL() << "expected a cycle error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CycleDetected);
    EXPECT_NE(std::string(e.what()).find("a -> b -> c -> a"), std::string::npos) << e.what();
  }
}

TEST(BuildNetwork, UnknownNames) {
  std::vector<Variable> vars{{"a", {"0", "1"}, {}}};
  EXPECT_EQ(kind_of([&] { build_network(vars, {{"a", {"zz"}}}, {}); }), ErrorKind::UnknownVariable);
  EXPECT_EQ(kind_of([&] { build_network(vars, {{"zz", {"a"}}}, {}); }), ErrorKind::UnknownVariable);
  EXPECT_EQ(kind_of([&] { build_network(vars, {}, {{"a", "zz"}}); }), ErrorKind::UnknownVariable);
}

TEST(BuildNetwork, RejectsMalformedVariables) {
  EXPECT_EQ(kind_of([] { build_network({{"a", {"0"}, {}}}, {}, {}); }), ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of([] { build_network({{"a", {"0", "0"}, {}}}, {}, {}); }), ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of([] { build_network({{"a", {"0", "1"}, {}}, {"a", {"0", "1"}, {}}}, {}, {}); }),
            ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of([] { build_network({{"a", {"0", "1"}, {1.0}}}, {}, {}); }), ErrorKind::InvalidModel);
}

TEST(BuildNetwork, LocalModelChecks) {
  std::vector<Variable> vars{{"a", {"0", "1", "2"}, {}}, {"b", {"0", "1", "2"}, {}}};
  // Keyed by a tied member that is not the class id.
  EXPECT_EQ(kind_of([&] { build_network(vars, {}, {{"a", "b"}}, {{"b", LocalModel::saturated(3)}}); }),
            ErrorKind::InvalidModel);
  // Level count disagrees.
  EXPECT_EQ(kind_of([&] { build_network(vars, {}, {}, {{"a", LocalModel::saturated(4)}}); }),
            ErrorKind::DimensionMismatch);
}

TEST(BuildNetwork, ConfigKeysRoundTrip) {
  const Network net = six_node();
  const std::size_t c5 = net.class_of(net.variable_index("X5"));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(net.parse_config_key(c5, net.config_key(c5, k)), k);
  EXPECT_EQ(net.config_key(c5, 1), "a|b");
  EXPECT_EQ(kind_of([&] { net.parse_config_key(c5, "a"); }), ErrorKind::UnknownLevel);
  EXPECT_EQ(kind_of([&] { net.parse_config_key(c5, "a|z"); }), ErrorKind::UnknownLevel);
}

TEST(BuildNetwork, TopologicalOrderRespectsEdges) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Network net = rem::testing::random_network(rng);
    std::vector<std::size_t> pos(net.size());
    for (std::size_t k = 0; k < net.size(); ++k) pos[net.topological_order()[k]] = k;
    for (std::size_t v = 0; v < net.size(); ++v)
      for (std::size_t p : net.parents(v)) EXPECT_LT(pos[p], pos[v]);
  }
}

// ---------------------------------------------------------------- local models

TEST(LocalDistribution, SaturatedLogits) {
  const auto m = LocalModel::saturated(4);
  const auto p = local_distribution(m, vec({std::log(2.0), std::log(5.0), std::log(12.0)}));
  const auto expected = vec({0.05, 0.10, 0.25, 0.60});
  EXPECT_LT((p - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LocalDistribution, ZeroThetaIsUniform) {
  for (std::size_t k = 2; k <= 5; ++k) {
    const auto p = local_distribution(LocalModel::saturated(k), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k - 1)));
    for (double x : p) EXPECT_DOUBLE_EQ(x, 1.0 / static_cast<double>(k));
  }
  const auto p = local_distribution(affine_model(), vec({0.0}));
  for (double x : p) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(LocalDistribution, AffineFittedValues) {
  const auto p = local_distribution(affine_model(), vec({0.86148}));
  const auto expected = vec({0.04500, 0.10649, 0.25203, 0.59648});
  EXPECT_LT((p - expected).cwiseAbs().maxCoeff(), 5e-6);
}

TEST(LocalDistribution, Errors) {
  EXPECT_EQ(kind_of([] { local_distribution(LocalModel::saturated(3), vec({0.0})); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([] { local_distribution(LocalModel::saturated(2), vec({std::nan("")})); }), ErrorKind::NonFinite);
  // Large but finite parameters are handled by the max shift.
  const auto p = local_distribution(LocalModel::saturated(3), vec({800.0, 799.0}));
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

TEST(LocalDistribution, CarrierWeights) {
  const auto m = LocalModel::saturated(3, vec({1.0, 2.0, 3.0}));
  const auto p = local_distribution(m, vec({0.0, 0.0}));
  EXPECT_LT((p - vec({1.0 / 6, 2.0 / 6, 3.0 / 6})).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(kind_of([] { LocalModel::saturated(2, vec({1.0, 0.0})); }), ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of([] { LocalModel::saturated(2, vec({1.0})); }), ErrorKind::DimensionMismatch);
}

TEST(LocalModelDesign, RankAndShape) {
  Eigen::MatrixXd rank_deficient(3, 2);
  rank_deficient << 1, 2, 2, 4, 3, 6;
  EXPECT_EQ(kind_of([&] { LocalModel::affine(rank_deficient); }), ErrorKind::InvalidModel);
  Eigen::MatrixXd too_wide(2, 3);
  too_wide.setRandom();
  EXPECT_EQ(kind_of([&] { LocalModel::affine(too_wide); }), ErrorKind::InvalidModel);
  const std::vector<double> values{0, 1, 2, 3};
  EXPECT_EQ(LocalModel::affine_from_values(values), affine_model());
}

TEST(StatMean, Examples) {
  const auto m = LocalModel::saturated(4);
  const auto p = vec({0.1, 0.2, 0.3, 0.4});
  EXPECT_LT((stat_mean(m, theta_from_probs(p)) - vec({0.2, 0.3, 0.4})).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_DOUBLE_EQ(stat_mean(LocalModel::saturated(2), vec({0.0}))(0), 0.5);
  // tau at log 2 is the gradient of KL (-0.13334) plus 2.4.
  EXPECT_NEAR(stat_mean(affine_model(), vec({std::log(2.0)}))(0), 34.0 / 15.0, 1e-14);
  EXPECT_NEAR(stat_mean(affine_model(), vec({std::log(2.0)}))(0) - 2.4, -0.13334, 1e-5);
}

TEST(StatCov, Examples) {
  const auto m = LocalModel::saturated(4);
  const auto p = vec({0.1, 0.2, 0.3, 0.4});
  const auto nu = stat_cov(m, theta_from_probs(p));
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(nu(r, s), (r == s ? p(r + 1) : 0.0) - p(r + 1) * p(s + 1), 1e-15);
  // The printed table value is 0.86228; the exact variance is 0.862222.
  EXPECT_NEAR(stat_cov(affine_model(), vec({std::log(2.0)}))(0, 0), 0.86228, 1e-4);
  EXPECT_NEAR(stat_cov(affine_model(), vec({std::log(2.0)}))(0, 0), 6.0 - (34.0 / 15) * (34.0 / 15), 1e-14);
  EXPECT_EQ(stat_cov_from_probs(m, vec({0, 0, 1, 0})), Eigen::MatrixXd::Zero(3, 3));
  EXPECT_EQ(stat_cov_from_probs(affine_model(), vec({1, 0, 0, 0})), Eigen::MatrixXd::Zero(1, 1));
}

TEST(ThetaFromProbs, Examples) {
  const auto theta = theta_from_probs(vec({0.05, 0.10, 0.25, 0.60}));
  EXPECT_LT((theta - vec({std::log(2.0), std::log(5.0), std::log(12.0)})).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(theta_from_probs(vec({0.25, 0.25, 0.25, 0.25})), Eigen::VectorXd::Zero(3));
  EXPECT_EQ(kind_of([] { theta_from_probs(vec({0.0, 0.5, 0.5})); }), ErrorKind::ZeroProbability);
}

TEST(ThetaFromProbs, RoundTripOnRandomSimplexPoints) {
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> g(1.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto k = std::uniform_int_distribution<Eigen::Index>(2, 6)(rng);
    Eigen::VectorXd p(k);
    for (auto& x : p) x = g(rng) + 1e-3;
    p /= p.sum();
    EXPECT_LT((probs_from_theta(theta_from_probs(p)) - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

// ---------------------------------------------------------------- properties

TEST(LocalModelProperties, NormalizationSymmetryAndPsd) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const auto k = std::uniform_int_distribution<Eigen::Index>(2, 6)(rng);
    const auto d = std::uniform_int_distribution<Eigen::Index>(1, k - 1)(rng);
    Eigen::MatrixXd design = rem::testing::uniform_matrix(rng, k - 1, d, -1.0, 1.0);
    const LocalModel m = rep % 2 ? LocalModel::saturated(static_cast<std::size_t>(k)) : LocalModel::affine(design);
    const Eigen::VectorXd theta = rem::testing::normal_vector(rng, m.dim(), 2.0);
    const auto mom = local_moments(m, theta);
    EXPECT_NEAR(mom.probs.sum(), 1.0, 1e-12);
    EXPECT_TRUE((mom.probs.array() > 0).all());
    EXPECT_LT((mom.cov - mom.cov.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mom.cov);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * std::max(1.0, mom.cov.norm()));
  }
}

TEST(LocalModelProperties, MomentsMatchDerivativesOfPhi) {
  std::mt19937_64 rng(8);
  const double h = 1e-5;
  for (int rep = 0; rep < 40; ++rep) {
    const auto k = std::uniform_int_distribution<Eigen::Index>(2, 5)(rng);
    const auto d = std::uniform_int_distribution<Eigen::Index>(1, k - 1)(rng);
    Eigen::VectorXd carrier = rem::testing::uniform_matrix(rng, k, 1, 0.5, 2.5);
    const LocalModel m = rep % 2 ? LocalModel::saturated(static_cast<std::size_t>(k), carrier)
                                 : LocalModel::affine(rem::testing::uniform_matrix(rng, k - 1, d, -1.0, 1.0), carrier);
    const Eigen::VectorXd theta = rem::testing::normal_vector(rng, m.dim());
    const auto tau = stat_mean(m, theta);
    const auto nu = stat_cov(m, theta);
    auto phi = [&](const Eigen::VectorXd& t) { return log_normalizer(m, t); };
    const auto n = static_cast<Eigen::Index>(m.dim());
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(i) = h;
      const double g = (phi(theta + e) - phi(theta - e)) / (2 * h);
      EXPECT_LE(std::abs(g - tau(i)), 1e-6 * std::max(1.0, std::abs(tau(i))));
      for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
        f(j) = h;
        const double hess = (phi(theta + e + f) - phi(theta + e - f) - phi(theta - e + f) + phi(theta - e - f)) /
                            (4 * h * h);
        EXPECT_NEAR(hess, nu(i, j), 1e-4);
      }
    }
  }
}

TEST(LocalModelProperties, AffineEqualsSaturatedAtTheta) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const auto k = std::uniform_int_distribution<Eigen::Index>(2, 6)(rng);
    const auto d = std::uniform_int_distribution<Eigen::Index>(1, k - 1)(rng);
    Eigen::MatrixXd design = rem::testing::uniform_matrix(rng, k - 1, d, -1.0, 1.0);
    Eigen::VectorXd carrier = rem::testing::uniform_matrix(rng, k, 1, 0.5, 2.5);
    const auto affine = LocalModel::affine(design, carrier);
    const auto sat = LocalModel::saturated(static_cast<std::size_t>(k), carrier);
    const Eigen::VectorXd theta = rem::testing::normal_vector(rng, static_cast<std::size_t>(d));
    EXPECT_EQ(local_distribution(affine, theta), local_distribution(sat, Eigen::VectorXd(design * theta)));
  }
}

// ---------------------------------------------------------------- joint probability

TEST(JointProb, ExampleFactorization) {
  const Network net = six_node();
  std::mt19937_64 rng(10);
  const ParameterSet params = rem::testing::random_parameters(net, rng);
  auto local = [&](const char* cls, std::size_t config, std::size_t level) {
    const std::size_t c = *net.find_class(cls);
    return local_distribution(net.tying_class(c).model, params.block({c, config}))(static_cast<Eigen::Index>(level));
  };
  const Config x{1, 0, 1, 0, 1, 2};
  // X3 | X1 = b and X4 | X2 = a both read the tied X3 table.
  const double expected = local("X1", 0, 1) * local("X2", 0, 0) * local("X3", 1, 1) * local("X3", 0, 0) *
                          local("X5", 2, 1) * local("X6", 1, 2);
  EXPECT_NEAR(joint_prob(net, params, x), expected, 1e-15);
  EXPECT_EQ(kind_of([&] { joint_prob(net, params, Config{0, 0, 0, 0, 0, 4}); }), ErrorKind::UnknownLevel);
}

TEST(JointProb, SingleUniformBinary) {
  const Network net = build_network({{"A", {"x", "y"}, {}}}, {}, {});
  EXPECT_DOUBLE_EQ(joint_prob(net, ParameterSet::zeros(net), {1}), 0.5);
}

TEST(JointProb, SumsToOneOverAllConfigurations) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    const Network net = rep == 0 ? six_node() : rem::testing::random_network(rng);
    const ParameterSet params = rem::testing::random_parameters(net, rng);
    CompensatedSum total;
    for (const Config& x : completions(Observation::missing(net))) total.add(joint_prob(net, params, x));
    EXPECT_NEAR(total.value(), 1.0, 1e-10);
  }
}

TEST(JointProb, InvariantUnderMemberRelabeling) {
  // Same graph with X4 declared before X3: the class is now keyed by X4.
  std::vector<Variable> vars;
  for (const char* name : {"X1", "X2", "X4", "X3", "X5"}) vars.push_back({name, {"a", "b"}, {}});
  vars.push_back({"X6", {"i0", "i1", "i2", "i3"}, {}});
  const Network swapped = build_network(
      vars, {{"X3", {"X1"}}, {"X4", {"X2"}}, {"X5", {"X3", "X4"}}, {"X6", {"X5"}}}, {{"X3", "X4"}});
  const Network net = six_node();
  EXPECT_EQ(swapped.classes()[2].id, "X4");
  std::mt19937_64 rng(13);
  const ParameterSet params = rem::testing::random_parameters(net, rng);
  for (const Config& x : completions(Observation::missing(net))) {
    Config y = x;
    std::swap(y[2], y[3]);
    EXPECT_DOUBLE_EQ(joint_prob(net, params, x), joint_prob(swapped, params, y));
  }
}

// ---------------------------------------------------------------- parameters

TEST(ParameterSet, FlatRoundTripAndChecks) {
  const Network net = six_node();
  std::mt19937_64 rng(14);
  const Eigen::VectorXd flat = rem::testing::normal_vector(rng, net.dimension());
  const ParameterSet p = ParameterSet::from_flat(net, flat);
  EXPECT_EQ(p.flat(), flat);
  const BlockLayout layout(net);
  EXPECT_EQ(layout.total(), 14u);
  EXPECT_EQ(layout.blocks().size(), 10u);
  ParameterSet q = p;
  EXPECT_EQ(kind_of([&] { q.set({0, 0}, vec({1.0, 2.0})); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { q.set({0, 0}, vec({INFINITY})); }), ErrorKind::NonFinite);
  EXPECT_EQ(kind_of([&] { ParameterSet::from_flat(net, Eigen::VectorXd::Zero(3)); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(block_key(net, {4, 1}), "X6|b");
}
