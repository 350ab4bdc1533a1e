#ifndef UAL_MODEL_HPP
#define UAL_MODEL_HPP

#include <concepts>

#include <Eigen/Core>

namespace ual {

/// Gaussian predictive distribution at one input. `variance` is the
/// predictive variance including observation noise; `noise_variance` is the
/// sigma^2 part of it, so `variance - noise_variance` is the parameter
/// (latent) uncertainty.
struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  double noise_variance = 0.0;

  double latent_variance() const { return variance - noise_variance; }
};

/// A fitted regressor usable by the acquisition strategies and the AL loop.
template <class M>
concept PredictiveModel = requires(const M& m, const Eigen::VectorXd& x) {
  { m.predict(x) } -> std::same_as<Prediction>;
};

/// Something that fits a PredictiveModel from scratch on (X, y).
template <class F>
concept ModelFactory = requires(const F& f, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  { f.fit(x, y) } -> PredictiveModel;
};

}  // namespace ual

#endif  // UAL_MODEL_HPP
