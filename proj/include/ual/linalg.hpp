#ifndef UAL_LINALG_HPP
#define UAL_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ual/error.hpp"

namespace ual {

/// Cholesky factor of a symmetric positive definite matrix, together with the
/// diagonal jitter that had to be added for the factorization to succeed.
struct SpdFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  Eigen::Index dim() const { return llt.matrixLLT().rows(); }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt.solve(b); }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt.solve(b); }

  /// Symmetrized inverse of the factored matrix.
  Eigen::MatrixXd inverse() const {
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
    return 0.5 * (inv + inv.transpose());
  }
};

namespace detail {
inline bool llt_ok(const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index n) {
  if (llt.info() != Eigen::Success) return false;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return false;
  return true;
}
}  // namespace detail

/// Factor `a` (assumed symmetric). On failure, retry with jitter
/// 1e-10 * mean(diag) * I, growing by x10 up to 1e-6 * mean(diag).
inline SpdFactor factor_spd(const Eigen::MatrixXd& a, const char* what = "matrix") {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw InvalidArgument(std::string(what) + ": not square");
  SpdFactor f;
  if (n == 0) {
    f.llt.compute(a);
    return f;
  }
  f.llt.compute(a);
  if (detail::llt_ok(f.llt, n)) return f;

  const double scale = std::max(a.trace() / static_cast<double>(n), 1e-300);
  for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += rel * scale;
    f.llt.compute(shifted);
    if (detail::llt_ok(f.llt, n)) {
      f.jitter = rel * scale;
      return f;
    }
  }
  throw NumericalError(std::string("Cholesky factorization of ") + what +
                       " failed after jitter escalation");
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace ual

#endif  // UAL_LINALG_HPP
