#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ual/analysis.hpp"
#include "ual/bpr.hpp"
#include "ual/rng.hpp"

using namespace ual;

namespace {

Eigen::VectorXd random_inputs(int n, Rng& r) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = r.uniform(-2, 2);
  return x;
}

Eigen::MatrixXd random_spd(int n, Rng& r, double floor = 0.3) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 0.5 * r.normal();
  return a * a.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

TargetFamily random_family(int l, double s2, Rng& r) {
  TargetFamily f;
  f.order = l;
  f.mean = Eigen::VectorXd::NullaryExpr(l + 1, [&] { return 0.5 * r.normal(); });
  f.covariance = random_spd(l + 1, r);
  f.noise_variance = s2;
  return f;
}

BprPrior prior_from_family(const TargetFamily& f) { return BprPrior{f.order, f.mean, f.covariance, f.noise_variance}; }

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

TEST(ClosedFormMse, MatchedEmptyDataByHand) {
  const auto fam = TargetFamily::isotropic(1);
  const auto prior = BprPrior::isotropic(1);
  EXPECT_NEAR(closed_form_mse(1.0, fam, prior, Eigen::VectorXd(0)), 4.0, 1e-14);
}

TEST(ClosedFormMse, MatchedEqualsTwiceVariance) {
  Rng r(101);
  for (int trial = 0; trial < 20; ++trial) {
    const int l = 3;
    const auto fam = random_family(l, 0.5 + r.uniform(), r);
    const auto prior = prior_from_family(fam);
    const int ns[] = {0, 5, 20, 100};
    const auto xs = random_inputs(ns[trial % 4], r);
    const auto post = posterior_update(prior, xs, Eigen::VectorXd::Zero(xs.size()));
    for (int g = 0; g < 50; ++g) {
      const double x = -2.0 + 4.0 * g / 49.0;
      const double cf = closed_form_mse(x, fam, prior, xs);
      EXPECT_LT(rel(cf, matched_mse(x, post)), 1e-8);
      EXPECT_LT(rel(cf, 2.0 * (post.predict(x).variance - prior.noise_variance)), 1e-8);
    }
  }
}

TEST(MatchedMse, ByHandAndIdentity) {
  const auto post = posterior_update(BprPrior::isotropic(1), Eigen::VectorXd(0), Eigen::VectorXd(0));
  EXPECT_EQ(matched_mse(0.0, post), 2.0);
  Rng r(5);
  for (int p = 0; p <= 5; ++p) {
    const auto xs = random_inputs(12, r);
    const auto ps = posterior_update(BprPrior::isotropic(p, 2.0, 0.7), xs, random_inputs(12, r));
    for (double x : {-2.0, -0.3, 0.0, 1.7})
      EXPECT_NEAR(matched_mse(x, ps), 2.0 * (ps.predict(x).variance - 0.7), 1e-12 * (1 + matched_mse(x, ps)));
  }
}

TEST(ClosedFormMse, AgreesWithMonteCarlo) {
  Rng r(77);
  struct Case {
    int p, n;
  };
  const Case cases[] = {{1, 5}, {2, 20}, {5, 0}, {4, 5}};
  std::uint64_t seed = 1;
  for (const auto& c : cases) {
    const auto fam = random_family(3, 1.0, r);
    BprPrior prior;
    prior.degree = c.p;
    prior.mean = Eigen::VectorXd::NullaryExpr(c.p + 1, [&] { return 0.3 * r.normal(); });
    prior.covariance = random_spd(c.p + 1, r);
    prior.noise_variance = 1.0;
    const auto xs = random_inputs(c.n, r);
    const double x = r.uniform(-2, 2);
    const double cf = closed_form_mse(x, fam, prior, xs);
    const auto mc = oracle::mse_monte_carlo(x, fam.mean, fam.covariance, prior.mean, prior.covariance, 1.0, xs,
                                            seed++);
    EXPECT_LT(std::abs(cf - mc.mean), 3.0 * mc.stderr_) << "p=" << c.p << " n=" << c.n << " cf=" << cf
                                                         << " mc=" << mc.mean << " se=" << mc.stderr_;
  }
}

TEST(ClosedFormMse, RejectsShapeAndNoiseMismatch) {
  const auto fam = TargetFamily::isotropic(3);
  const auto prior = BprPrior::isotropic(2);
  const Eigen::VectorXd xs = Eigen::Vector2d(0.1, 0.5);
  EXPECT_THROW(closed_form_mse(0.0, fam, prior, design_matrix(xs, 2), design_matrix(xs, 2)), InvalidArgument);
  EXPECT_THROW(closed_form_mse(0.0, fam, prior, design_matrix(xs, 3), design_matrix(xs.head(1), 2)), InvalidArgument);
  EXPECT_THROW(closed_form_mse(0.0, fam, BprPrior::isotropic(2, 1.0, 2.0), xs), InvalidArgument);
}

TEST(Partition, ReassemblesExactly) {
  Rng r(3);
  const auto fam = random_family(4, 1.0, r);
  const auto xs = random_inputs(7, r);
  for (int p = 0; p <= 4; ++p) {
    const auto part = partition_family(fam, xs, p);
    EXPECT_EQ(part.complement_design.cols(), 4 - p);
    EXPECT_EQ(part.model_design.cols(), p + 1);
    const auto whole = part.reassemble(0.7);
    EXPECT_EQ(whole.design, design_matrix(xs, 4));
    EXPECT_EQ(whole.mean, fam.mean);
    EXPECT_EQ(whole.covariance, fam.covariance);
    EXPECT_EQ(whole.features, feature_map(0.7, 4));
  }
}

TEST(LowerOrderMse, EqualsClosedForm) {
  Rng r(202);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 1 + trial % 2;
    const auto fam = random_family(3, 0.5 + r.uniform(), r);
    const auto xs = random_inputs(static_cast<int>(r.index(30)), r);
    const auto part = partition_family(fam, xs, p);
    const BprPrior prior{p, part.model_mean, part.model_cov, fam.noise_variance};
    for (int g = 0; g < 50; ++g) {
      const double x = -2.0 + 4.0 * g / 49.0;
      const auto lo = lower_order_mse(x, part, prior, fam.noise_variance);
      EXPECT_LT(rel(lo.total, closed_form_mse(x, fam, prior, xs)), 1e-8);
      EXPECT_NEAR(lo.total, lo.p_term + 2.0 * lo.var_term, 1e-12 * (1 + std::abs(lo.total)));
    }
  }
}

TEST(LowerOrderMse, DegenerateCollapsesToTwiceVariance) {
  Rng r(4);
  const auto fam = random_family(3, 1.0, r);
  const auto xs = random_inputs(9, r);
  const auto part = partition_family(fam, xs, 3);
  const auto prior = prior_from_family(fam);
  for (double x : {-1.5, 0.0, 0.9}) {
    const auto lo = lower_order_mse(x, part, prior, 1.0);
    EXPECT_EQ(lo.p_term, 0.0);
    EXPECT_EQ(lo.total, 2.0 * lo.var_term);
  }
}

TEST(LowerOrderMse, RejectsViolatedAssumption) {
  Rng r(4);
  const auto fam = random_family(3, 1.0, r);
  const auto part = partition_family(fam, random_inputs(5, r), 1);
  BprPrior prior{1, part.model_mean, part.model_cov, 1.0};
  prior.mean(0) += 1e-6;
  EXPECT_THROW(lower_order_mse(0.0, part, prior, 1.0), InvalidArgument);
  prior = BprPrior{1, part.model_mean, part.model_cov, 1.0};
  EXPECT_THROW(lower_order_mse(0.0, part, prior, 2.0), InvalidArgument);
  EXPECT_THROW(lower_order_mse(0.0, part, BprPrior::isotropic(2), 1.0), InvalidArgument);
}

TEST(LowerOrderMse, PolynomialOrderOfTerms) {
  Rng r(8);
  const int l = 3;
  for (int p = 1; p <= 2; ++p) {
    const auto fam = random_family(l, 1.0, r);
    const auto part = partition_family(fam, random_inputs(10, r), p);
    const BprPrior prior{p, part.model_mean, part.model_cov, 1.0};
    const int m = 2 * l + 5;
    Eigen::VectorXd xs(m), var(m), rest(m);
    for (int i = 0; i < m; ++i) {
      xs(i) = -2.0 + 4.0 * i / (m - 1);
      const auto lo = lower_order_mse(xs(i), part, prior, 1.0);
      var(i) = lo.var_term;
      rest(i) = lo.total - 2.0 * lo.var_term;
    }
    EXPECT_LT(oracle::poly_fit_residual(xs, var, 2 * p), 1e-9);
    EXPECT_GT(oracle::poly_fit_residual(xs, var, 2 * p - 1), 1e-6);
    EXPECT_LT(oracle::poly_fit_residual(xs, rest, 2 * l), 1e-9);
  }
}

TEST(McBiasVariance, EmptyDataMatchesPrior) {
  Rng r(12);
  const auto fam = TargetFamily::isotropic(3);
  const auto prior = BprPrior::isotropic(3);
  const double x = 0.8;
  const auto rep = mc_bias_variance(x, fam, prior, 0, 20000, r);
  const double phi_s_phi = feature_map(x, 3).squaredNorm();
  EXPECT_NEAR(rep.variance, phi_s_phi, 1e-12);
  EXPECT_NEAR(rep.bias, phi_s_phi, 4.0 * rep.bias_stderr);
  EXPECT_EQ(rep.mse, rep.bias + rep.variance);
  EXPECT_EQ(rep.method, DecompositionMethod::monte_carlo);
  EXPECT_EQ(rep.sample_count, 20000u);
  EXPECT_THROW(mc_bias_variance(x, fam, prior, 0, 999, r), InvalidArgument);
}

TEST(McBiasVariance, LargeSampleBiasIsSmall) {
  Rng r(13);
  const auto fam = TargetFamily::isotropic(3);
  for (int p : {3, 4}) {
    const auto rep = mc_bias_variance(0.0, fam, BprPrior::isotropic(p), 200, 1000, r);
    EXPECT_GE(rep.bias, 0.0);
    EXPECT_LT(rep.bias, 0.05 * rep.variance) << "p=" << p;
  }
}

TEST(VarianceIdentityGap, MatchedIsZeroLowerIsPositive) {
  Rng r(21);
  const auto fam = TargetFamily::isotropic(3);
  const auto xs = random_inputs(15, r);
  for (double x : {-2.0, -0.6, 0.0, 1.2, 2.0}) {
    EXPECT_LT(variance_identity_gap(x, fam, BprPrior::isotropic(3), xs), 1e-8);
    EXPECT_GT(variance_identity_gap(x, fam, BprPrior::isotropic(1), xs), 1e-3);
  }
}

TEST(VarianceIdentityGap, AtZeroMatchesDirectEvaluation) {
  Rng r(22);
  const auto fam = TargetFamily::isotropic(3);
  const auto xs = random_inputs(10, r);
  for (int p : {1, 2}) {
    const auto prior = BprPrior::isotropic(p);
    // Direct: closed form minus 2 phi' S_p phi with S_p from an LU inverse.
    const Eigen::MatrixXd ph = oracle::monomials(xs, p);
    const Eigen::MatrixXd sp = (Eigen::MatrixXd::Identity(p + 1, p + 1) + ph.transpose() * ph).fullPivLu().inverse();
    const Eigen::VectorXd f0 = oracle::phi(0.0, p);
    const double direct = std::abs(closed_form_mse(0.0, fam, prior, xs) - 2.0 * f0.dot(sp * f0));
    EXPECT_NEAR(variance_identity_gap(0.0, fam, prior, xs), direct, 1e-12);
  }
}

TEST(BiasBound, IdenticalDensities) {
  const auto rep = bias_bound_check({0.3, 1.2}, {0.3, 1.2}, 8.0);
  EXPECT_EQ(rep.epsilon, 0.0);
  EXPECT_EQ(rep.bias_sq, 0.0);
  EXPECT_TRUE(rep.holds);
}

TEST(BiasBound, ShiftedMeanExample) {
  const auto rep = bias_bound_check({0.1, 1.0}, {0.0, 1.0}, 8.0);
  EXPECT_NEAR(rep.c, std::sqrt(2.0 / std::numbers::pi), 1e-15);
  EXPECT_NEAR(rep.bias_sq, 0.01, 1e-15);
  // log ratio is 0.1 y - 0.005, largest at y = 8
  EXPECT_NEAR(rep.epsilon, std::exp(0.8 - 0.005) - 1.0, 1e-12);
  EXPECT_TRUE(rep.holds);
}

TEST(BiasBound, TruncationGuard) {
  EXPECT_THROW(bias_bound_check({0.0, 1.0}, {0.0, 2.0}, 1.0), InvalidArgument);
  EXPECT_NO_THROW(bias_bound_check({0.0, 1.0}, {0.0, 2.0}, 12.0));
}

TEST(BiasBound, FoldedNormalMean) {
  // E|Y| by quadrature
  for (auto g : {GaussianDensity{0.0, 1.0}, GaussianDensity{1.5, 0.3}, GaussianDensity{-2.0, 4.0}}) {
    double acc = 0.0;
    const double h = 1e-3;
    for (double y = -40; y <= 40; y += h) acc += std::abs(y) * std::exp(g.log_pdf(y)) * h;
    EXPECT_NEAR(g.mean_abs(), acc, 1e-6);
  }
}

TEST(Concentration, MatchedDegreeConcentrates) {
  Rng r(31);
  const auto rep = posterior_concentration(3, 10, 200, 100, 1.0, r);
  EXPECT_EQ(rep.trials, 100u);
  EXPECT_GE(rep.improved, 95u);
  EXPECT_LT(rep.mean_error_large, rep.mean_error_small);
}
