#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "ual/bpr.hpp"
#include "ual/gpr.hpp"
#include "ual/rng.hpp"

using namespace ual;

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

Eigen::MatrixXd column(const std::vector<double>& xs) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = xs[i];
  return m;
}

// Posterior via an explicit LU inverse of (K + s2 I).
Prediction lu_oracle(const KernelSpec& k, double m0, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double s2,
                     const Eigen::VectorXd& q) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd kk(n, n);
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ks(i) = kernel_eval(k, x.row(i).transpose(), q);
    for (Eigen::Index j = 0; j < n; ++j) kk(i, j) = kernel_eval(k, x.row(i).transpose(), x.row(j).transpose());
  }
  const Eigen::MatrixXd inv = (kk + s2 * Eigen::MatrixXd::Identity(n, n)).fullPivLu().inverse();
  Prediction p;
  p.mean = m0 + ks.dot(inv * (y.array() - m0).matrix());
  p.variance = kernel_eval(k, q, q) - ks.dot(inv * ks);
  return p;
}

}  // namespace

TEST(Kernel, HandValues) {
  EXPECT_EQ(kernel_eval(KernelSpec::rbf(2.5, 0.7), v1(0.3), v1(0.3)), 2.5);
  EXPECT_NEAR(kernel_eval(KernelSpec::rbf(1, 1), v1(0), v1(1)), 0.6065306597126334, 1e-15);
  EXPECT_EQ(kernel_eval(KernelSpec::linear(1, 1), v1(2), v1(3)), 7.0);
  // Matern 5/2 at r = l: (1 + sqrt5 + 5/3) exp(-sqrt5)
  const double s5 = std::sqrt(5.0);
  EXPECT_NEAR(kernel_eval(KernelSpec::matern52(1, 1), v1(0), v1(1)), (1 + s5 + 5.0 / 3.0) * std::exp(-s5), 1e-15);
  EXPECT_EQ(kernel_eval(KernelSpec::matern52(3, 2), v1(1), v1(1)), 3.0);
  EXPECT_THROW(kernel_eval(KernelSpec::rbf(), Eigen::VectorXd::Zero(2), v1(0)), InvalidArgument);
}

TEST(Kernel, ValidateRejectsNonPositive) {
  EXPECT_THROW(KernelSpec::rbf(0.0, 1.0).validate(), InvalidArgument);
  EXPECT_THROW(KernelSpec::matern52(1.0, -1.0).validate(), InvalidArgument);
  EXPECT_THROW(KernelSpec::linear(-1.0, 1.0).validate(), InvalidArgument);
  EXPECT_THROW(KernelSpec::linear(1.0, 0.0).validate(), InvalidArgument);
  EXPECT_NO_THROW(KernelSpec::linear(0.0, 1.0).validate());
}

TEST(GpFit, EmptyDataIsPrior) {
  const auto m = gp_fit(KernelSpec::rbf(), MeanFunction::zero(), Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), 1.0);
  for (double x : {-3.0, 0.0, 2.2}) {
    const auto p = gp_predict(m, v1(x), false);
    EXPECT_EQ(p.mean, 0.0);
    EXPECT_EQ(p.variance, 1.0);
  }
  const auto c = gp_fit(KernelSpec::rbf(), MeanFunction::constant(4.0), Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), 1.0);
  EXPECT_EQ(c.posterior_mean(v1(1.0)), 4.0);
}

TEST(GpFit, SingleObservationByHand) {
  const auto m = gp_fit(KernelSpec::rbf(1, 1), MeanFunction::zero(), column({0.0}), Eigen::VectorXd::Constant(1, 2.0),
                        1.0);
  ASSERT_EQ(m.weights().size(), 1);
  EXPECT_NEAR(m.weights()(0), 1.0, 1e-15);
  const auto p = gp_predict(m, v1(0.0), false);
  EXPECT_NEAR(p.mean, 1.0, 1e-15);
  EXPECT_NEAR(p.variance, 0.5, 1e-15);
  EXPECT_NEAR(gp_predict(m, v1(0.0)).variance, 1.5, 1e-15);
}

TEST(GpFit, DuplicateInputsWithNoise) {
  EXPECT_NO_THROW(
      gp_fit(KernelSpec::rbf(), MeanFunction::zero(), column({0.5, 0.5, 0.5}), Eigen::Vector3d(1, 2, 3), 0.1));
}

TEST(GpFit, MatchesLuOracle) {
  Rng r(31);
  const KernelSpec kernels[] = {KernelSpec::rbf(1.3, 0.6), KernelSpec::matern52(0.8, 1.4), KernelSpec::linear(0.5, 2)};
  for (const auto& k : kernels) {
    for (int trial = 0; trial < 10; ++trial) {
      const int n = static_cast<int>(r.index(25)) + 1;
      const int d = static_cast<int>(r.index(3)) + 1;
      Eigen::MatrixXd x(n, d);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = r.uniform(-2, 2);
        y(i) = r.normal();
      }
      const double m0 = r.normal();
      const auto model = gp_fit(k, MeanFunction::constant(m0), x, y, 0.4);
      for (int q = 0; q < 5; ++q) {
        Eigen::VectorXd xq(d);
        for (int j = 0; j < d; ++j) xq(j) = r.uniform(-2.5, 2.5);
        const auto got = gp_predict(model, xq, false);
        const auto want = lu_oracle(k, m0, x, y, 0.4, xq);
        EXPECT_NEAR(got.mean, want.mean, 1e-9);
        EXPECT_NEAR(got.variance, std::max(0.0, want.variance), 1e-9);
      }
    }
  }
}

TEST(GpModel, LatentVarianceBounds) {
  Rng r(4);
  for (const auto& k : {KernelSpec::rbf(1, 0.5), KernelSpec::matern52(2, 1)}) {
    std::vector<double> xs;
    for (int i = 0; i < 30; ++i) xs.push_back(r.uniform(-2, 2));
    const auto m = gp_fit(k, MeanFunction::zero(), column(xs), Eigen::VectorXd::Zero(30), 0.01);
    for (int i = 0; i <= 100; ++i) {
      const double x = -3.0 + 6.0 * i / 100.0;
      const double v = m.latent_variance(v1(x));
      EXPECT_GE(v, -1e-8);
      EXPECT_LE(v, kernel_eval(k, v1(x), v1(x)) + 1e-8);
    }
  }
}

TEST(GpModel, InterpolatesWithTinyNoise) {
  const std::vector<double> xs = {-1.5, -0.4, 0.3, 1.1, 1.9};
  const Eigen::VectorXd y = (Eigen::VectorXd(5) << 0.2, -1.0, 0.7, 2.0, -0.3).finished();
  const auto m = gp_fit(KernelSpec::rbf(1, 0.5), MeanFunction::zero(), column(xs), y, 1e-10);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(m.posterior_mean(v1(xs[static_cast<std::size_t>(i)])), y(i), 1e-4);
}

TEST(GpModel, VarianceShrinksWithData) {
  Rng r(9);
  std::vector<double> xs;
  for (int n = 0; n < 25; ++n) {
    const auto before = gp_fit(KernelSpec::matern52(), MeanFunction::zero(), column(xs),
                               Eigen::VectorXd::Zero(static_cast<Eigen::Index>(xs.size())), 0.5);
    xs.push_back(r.uniform(-2, 2));
    const auto after = gp_fit(KernelSpec::matern52(), MeanFunction::zero(), column(xs),
                              Eigen::VectorXd::Zero(static_cast<Eigen::Index>(xs.size())), 0.5);
    for (double q : {-2.0, -0.5, 0.0, 0.8, 2.0})
      EXPECT_LE(after.latent_variance(v1(q)), before.latent_variance(v1(q)) + 1e-9);
  }
}

TEST(GpModel, LinearKernelEqualsDegreeOneBpr) {
  Rng r(123);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(r.index(51));
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = r.uniform(-2, 2);
      y(i) = r.normal(0, 3);
    }
    const auto gp = gp_fit(KernelSpec::linear(1, 1), MeanFunction::zero(), x, y, 1.0);
    const auto bpr = BprRegressor{BprPrior::isotropic(1)}.fit(x, y);
    for (double q : {-2.0, -1.1, 0.0, 0.4, 2.0}) {
      const auto a = gp.predict(v1(q));
      const auto b = bpr.predict(q);
      EXPECT_NEAR(a.mean, b.mean, 1e-8);
      EXPECT_NEAR(a.variance, b.variance, 1e-8);
    }
  }
}

TEST(GpModel, LogMarginalLikelihoodOneDim) {
  // n = 1: y ~ N(0, k + s2)
  const auto m = gp_fit(KernelSpec::rbf(2, 1), MeanFunction::zero(), column({0.3}), Eigen::VectorXd::Constant(1, 1.5),
                        0.5);
  const double v = 2.5;
  EXPECT_NEAR(m.log_marginal_likelihood(), -0.5 * 1.5 * 1.5 / v - 0.5 * std::log(2 * std::numbers::pi * v), 1e-12);
}

TEST(SelectLengthscale, PrefersDataScale) {
  Rng r(2);
  std::vector<double> xs;
  Eigen::VectorXd y(80);
  for (int i = 0; i < 80; ++i) {
    xs.push_back(-2.0 + 4.0 * i / 79.0);
    y(i) = std::sin(3.0 * xs.back()) + 0.05 * r.normal();
  }
  const std::vector<double> grid = {0.1, 0.3, 1, 3, 10};
  const auto k = select_lengthscale(KernelSpec::rbf(), MeanFunction::zero(), column(xs), y, 0.01, grid);
  EXPECT_EQ(k.lengthscale, 0.3);
  const auto lin = select_lengthscale(KernelSpec::linear(), MeanFunction::zero(), column(xs), y, 0.01, grid);
  EXPECT_EQ(lin.kind, KernelKind::linear);
}
