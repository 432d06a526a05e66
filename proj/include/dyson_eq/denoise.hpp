#ifndef DYSON_EQ_DENOISE_HPP
#define DYSON_EQ_DENOISE_HPP

#include <algorithm>
#include <optional>
#include <string>

#include "dyson_eq/dyson.hpp"
#include "dyson_eq/equalizer.hpp"
#include "dyson_eq/errors.hpp"
#include "dyson_eq/linalg.hpp"
#include "dyson_eq/spectrum.hpp"

namespace dyson_eq {

enum class DenoiseMethod { EqualizedSvt, RawSvt, OracleSvt, OracleShrinkage };

inline const char* to_string(DenoiseMethod m) {
  switch (m) {
    case DenoiseMethod::EqualizedSvt: return "EqualizedSvt";
    case DenoiseMethod::RawSvt: return "RawSvt";
    case DenoiseMethod::OracleSvt: return "OracleSvt";
    case DenoiseMethod::OracleShrinkage: return "OracleShrinkage";
  }
  return "unknown";
}

struct DenoiseResult {
  DenseMatrix x_bar{1, 1};
  long r_used = 0;
  DenoiseMethod method = DenoiseMethod::RawSvt;
};

namespace detail {

// SVD of either orientation, returned so that a = u diag(sigma) v^T with k = min(m, n) columns.
inline SvdFactors any_svd(const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdFactors{svd.matrixU(), svd.matrixV(), svd.singularValues()};
}

inline Eigen::MatrixXd leading_components(const SvdFactors& f, Index r) {
  return f.u.leftCols(r) * f.sigma.head(r).asDiagonal() * f.v.leftCols(r).transpose();
}

inline void check_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch(std::string(what) + ": shape mismatch");
}

}  // namespace detail

// Best rank-r approximation in Frobenius norm.
inline Eigen::MatrixXd truncate_svd(const Eigen::MatrixXd& a, Index r) {
  const Index k = std::min(a.rows(), a.cols());
  if (r < 0 || r > k) throw RankOutOfRange("truncate_svd: rank must lie in [0, min(m, n)]");
  if (r == 0) return Eigen::MatrixXd::Zero(a.rows(), a.cols());
  if (r == k) return a;
  return detail::leading_components(detail::any_svd(a), r);
}

inline DenseMatrix truncate_svd(const DenseMatrix& a, Index r) { return DenseMatrix(truncate_svd(a.values(), r)); }

// Equalize, pick the rank (caller's or the MP-edge count on Y-hat), truncate, unscale.
inline DenoiseResult denoise_equalized(const DenseMatrix& y, const EtaPolicy& policy = EtaPolicy::quantile(),
                                       std::optional<Index> rank = std::nullopt, double epsilon = 0.0) {
  const EqualizeResult eq = equalize(y, policy);
  const Index k = std::min(y.rows(), y.cols());
  if (rank && (*rank < 0 || *rank > k)) throw RankOutOfRange("denoise_equalized: rank must lie in [0, min(m, n)]");

  DenoiseResult out;
  out.method = DenoiseMethod::EqualizedSvt;
  Eigen::MatrixXd low;
  if (rank) {
    out.r_used = *rank;
    low = truncate_svd(eq.y_hat.values(), *rank);
  } else {
    const SvdFactors f = detail::any_svd(eq.y_hat.values());
    out.r_used = estimate_rank_from_singular_values(f.sigma, y.rows(), y.cols(), epsilon).r_hat;
    low = out.r_used == 0 ? Eigen::MatrixXd::Zero(y.rows(), y.cols()) : detail::leading_components(f, out.r_used);
  }
  out.x_bar = DenseMatrix(unscale_rows_cols(low, eq.factors.x, eq.factors.y));
  return out;
}

// Rank-r truncation of Y with r chosen to minimize |T_r(Y) - X|_F; smallest r on ties.
inline DenoiseResult oracle_svt(const DenseMatrix& y, const DenseMatrix& x_true) {
  detail::check_same_shape(y, x_true, "oracle_svt");
  const SvdFactors f = detail::any_svd(y.values());
  const Index k = f.sigma.size();
  // |T_r Y - X|^2 = |X|^2 + sum_{i<=r} (sigma_i^2 - 2 sigma_i u_i^T X v_i)
  const Eigen::MatrixXd ux = f.u.transpose() * x_true.values();
  const Eigen::VectorXd proj = ux.cwiseProduct(f.v.transpose()).rowwise().sum();
  double err = 0.0;
  double best = 0.0;
  Index best_r = 0;
  for (Index r = 1; r <= k; ++r) {
    err += f.sigma(r - 1) * (f.sigma(r - 1) - 2.0 * proj(r - 1));
    if (err < best) {
      best = err;
      best_r = r;
    }
  }
  DenoiseResult out;
  out.method = DenoiseMethod::OracleSvt;
  out.r_used = best_r;
  out.x_bar = best_r == 0 ? DenseMatrix(y.rows(), y.cols()) : DenseMatrix(detail::leading_components(f, best_r));
  return out;
}

// Per-component least-squares coefficients theta_i = max(0, u_i^T X v_i), i <= r.
inline DenoiseResult oracle_shrinkage(const DenseMatrix& y, const DenseMatrix& x_true, Index r) {
  detail::check_same_shape(y, x_true, "oracle_shrinkage");
  const Index k = std::min(y.rows(), y.cols());
  if (r < 0 || r > k) throw RankOutOfRange("oracle_shrinkage: rank must lie in [0, min(m, n)]");
  DenoiseResult out;
  out.method = DenoiseMethod::OracleShrinkage;
  out.r_used = r;
  if (r == 0) {
    out.x_bar = DenseMatrix(y.rows(), y.cols());
    return out;
  }
  SvdFactors f = detail::any_svd(y.values());
  const Eigen::MatrixXd ux = f.u.leftCols(r).transpose() * x_true.values();
  const Eigen::VectorXd theta = ux.cwiseProduct(f.v.leftCols(r).transpose()).rowwise().sum().cwiseMax(0.0);
  out.x_bar = DenseMatrix(Eigen::MatrixXd(f.u.leftCols(r) * theta.asDiagonal() * f.v.leftCols(r).transpose()));
  return out;
}

// sum_ij (theta_ij - y_ij)^2 / s_ij
inline double weighted_loss(const DenseMatrix& theta, const DenseMatrix& y, const VarianceMatrix& s) {
  detail::check_same_shape(theta, y, "weighted_loss");
  if (s.rows() != y.rows() || s.cols() != y.cols()) throw ShapeMismatch("weighted_loss: shape mismatch");
  return ((theta.values() - y.values()).array().square() / s.values().array()).sum();
}

inline double relative_mse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  return (estimate - truth).squaredNorm() / truth.squaredNorm();
}

}  // namespace dyson_eq

#endif  // DYSON_EQ_DENOISE_HPP
