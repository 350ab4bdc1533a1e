#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "ual/bpr.hpp"
#include "ual/linalg.hpp"
#include "ual/rng.hpp"

using namespace ual;

namespace {

// Information-form update done the long way: explicit inverses, no factor reuse.
struct DirectPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

DirectPosterior direct_update(const Eigen::VectorXd& mu0, const Eigen::MatrixXd& s0, double s2,
                              const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, int p) {
  Eigen::MatrixXd phi(xs.size(), p + 1);
  for (int i = 0; i < xs.size(); ++i)
    for (int j = 0; j <= p; ++j) phi(i, j) = std::pow(xs(i), j);
  const Eigen::MatrixXd s0inv = s0.inverse();
  DirectPosterior d;
  d.cov = (s0inv + phi.transpose() * phi / s2).inverse();
  d.mean = d.cov * (s0inv * mu0 + phi.transpose() * ys / s2);
  return d;
}

Eigen::MatrixXd random_spd(int n, Rng& r) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = r.normal();
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(FeatureMap, Definition) {
  EXPECT_EQ(feature_map(2.0, 3), Eigen::Vector4d(1, 2, 4, 8));
  EXPECT_EQ(feature_map(0.0, 2), Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(feature_map(-1.0, 2), Eigen::Vector3d(1, -1, 1));
  EXPECT_THROW(feature_map(1.0, -1), InvalidArgument);
}

TEST(PosteriorUpdate, EmptyDataReturnsPrior) {
  Rng r(1);
  BprPrior prior;
  prior.degree = 2;
  prior.mean = Eigen::Vector3d(0.1, -0.2, 0.3);
  prior.covariance = random_spd(3, r);
  prior.noise_variance = 0.7;
  const auto post = posterior_update(prior, Eigen::VectorXd(0), Eigen::VectorXd(0));
  EXPECT_EQ(post.mean, prior.mean);
  EXPECT_EQ(post.covariance, prior.covariance);
}

TEST(PosteriorUpdate, SingleObservationByHand) {
  const auto prior = BprPrior::isotropic(1);
  const auto post = posterior_update(prior, Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 2.0));
  EXPECT_NEAR(post.covariance(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(post.covariance(1, 1), 1.0, 1e-14);
  EXPECT_NEAR(post.covariance(0, 1), 0.0, 1e-14);
  EXPECT_NEAR(post.mean(0), 1.0, 1e-14);
  EXPECT_NEAR(post.mean(1), 0.0, 1e-14);
}

TEST(PosteriorUpdate, SameObservationTwiceByHand) {
  const auto prior = BprPrior::isotropic(1);
  const auto post = posterior_update(prior, Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 2));
  EXPECT_NEAR(post.covariance(0, 0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(post.covariance(1, 1), 1.0, 1e-14);
  EXPECT_NEAR(post.mean(0), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(post.mean(1), 0.0, 1e-14);
}

TEST(PosteriorUpdate, MatchesDirectInverseOracle) {
  Rng r(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const int p = static_cast<int>(r.index(5)) + 1;
    const int n = static_cast<int>(r.index(30)) + 1;
    BprPrior prior;
    prior.degree = p;
    prior.mean = Eigen::VectorXd::NullaryExpr(p + 1, [&] { return r.normal(); });
    prior.covariance = random_spd(p + 1, r);
    prior.noise_variance = 0.3 + r.uniform();
    Eigen::VectorXd xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
      xs(i) = r.uniform(-2, 2);
      ys(i) = r.normal(0, 2);
    }
    const auto post = posterior_update(prior, xs, ys);
    const auto d = direct_update(prior.mean, prior.covariance, prior.noise_variance, xs, ys, p);
    EXPECT_LT(rel_err(post.covariance, d.cov), 1e-8) << "trial " << trial;
    EXPECT_LT(rel_err(post.mean, d.mean), 1e-8) << "trial " << trial;
    EXPECT_EQ(post.covariance, post.covariance.transpose());
  }
}

TEST(PosteriorUpdate, BatchEqualsSequential) {
  Rng r(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = static_cast<int>(r.index(4)) + 1;
    const auto prior = BprPrior::isotropic(p, 1.0, 0.5);
    const Eigen::Vector2d xs(r.uniform(-2, 2), r.uniform(-2, 2));
    const Eigen::Vector2d ys(r.normal(), r.normal());
    const auto batch = posterior_update(prior, xs, ys);
    const auto first = posterior_update(prior, xs.head(1), ys.head(1));
    BprPrior step{p, first.mean, first.covariance, prior.noise_variance};
    const auto seq = posterior_update(step, xs.tail(1), ys.tail(1));
    EXPECT_LT(rel_err(batch.mean, seq.mean), 1e-9);
    EXPECT_LT(rel_err(batch.covariance, seq.covariance), 1e-9);
  }
}

TEST(PosteriorUpdate, InformationOnlyGrows) {
  Rng r(6);
  const auto prior = BprPrior::isotropic(3);
  Eigen::VectorXd xs(15), ys(15);
  for (int i = 0; i < 15; ++i) {
    xs(i) = r.uniform(-2, 2);
    ys(i) = r.normal();
  }
  const auto post = posterior_update(prior, xs, ys);
  const Eigen::MatrixXd gain = post.covariance.inverse() - prior.covariance.inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gain + gain.transpose()));
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
}

TEST(PosteriorUpdate, RejectsLengthMismatch) {
  EXPECT_THROW(posterior_update(BprPrior::isotropic(1), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)),
               InvalidArgument);
}

TEST(Predictive, PriorPredictive) {
  const auto post = posterior_update(BprPrior::isotropic(1), Eigen::VectorXd(0), Eigen::VectorXd(0));
  const auto p = predictive(post, 1.0);
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.variance, 3.0);
}

TEST(Predictive, AfterSingleObservation) {
  const auto post =
      posterior_update(BprPrior::isotropic(1), Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 2.0));
  const auto p = predictive(post, 0.0);
  EXPECT_NEAR(p.mean, 1.0, 1e-14);
  EXPECT_NEAR(p.variance, 1.5, 1e-14);
}

TEST(Predictive, VarianceAtLeastNoiseAndMonotone) {
  Rng r(7);
  for (int p = 0; p <= 5; ++p) {
    const auto prior = BprPrior::isotropic(p, 1.0, 0.8);
    Eigen::VectorXd xs(0), ys(0);
    auto post = posterior_update(prior, xs, ys);
    for (int n = 1; n <= 40; ++n) {
      xs.conservativeResize(n);
      ys.conservativeResize(n);
      xs(n - 1) = r.uniform(-2, 2);
      ys(n - 1) = r.normal();
      const auto next = posterior_update(prior, xs, ys);
      for (double x : {-2.0, -0.7, 0.0, 1.3, 2.0}) {
        EXPECT_GE(next.predict(x).variance, 0.8 - 1e-10);
        EXPECT_LE(next.predict(x).latent_variance(), post.predict(x).latent_variance() + 1e-10);
      }
      post = next;
    }
  }
}

TEST(Prior, ValidateChecksShapes) {
  BprPrior p = BprPrior::isotropic(2);
  p.mean = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = BprPrior::isotropic(2);
  p.noise_variance = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Jitter, EscalatesThenFails) {
  // Rank-deficient PSD matrix: needs jitter.
  Eigen::MatrixXd a(2, 2);
  a << 1, 1, 1, 1;
  const auto f = factor_spd(a);
  EXPECT_GT(f.jitter, 0.0);
  EXPECT_LE(f.jitter, 1e-6 * a.trace() / 2 * (1 + 1e-9));
  Eigen::MatrixXd b(2, 2);
  b << 1, 0, 0, -1;
  EXPECT_THROW(factor_spd(b), NumericalError);
}

TEST(Regressor, FitsOneDimensionalInputs) {
  BprRegressor reg{BprPrior::isotropic(2)};
  Eigen::MatrixXd x(3, 1);
  x << -1, 0, 1;
  const auto post = reg.fit(x, Eigen::Vector3d(1, 0, 1));
  const auto d = direct_update(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), 1.0, x.col(0),
                               Eigen::Vector3d(1, 0, 1), 2);
  EXPECT_LT(rel_err(post.mean, d.mean), 1e-12);
  EXPECT_THROW(reg.fit(Eigen::MatrixXd::Zero(2, 2), Eigen::Vector2d(0, 0)), InvalidArgument);
}
