#ifndef DYSON_EQ_EQUALIZER_HPP
#define DYSON_EQ_EQUALIZER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "dyson_eq/errors.hpp"
#include "dyson_eq/linalg.hpp"

namespace dyson_eq {

// How eta is chosen from the singular values of Y.
class EtaPolicy {
 public:
  enum class Mode { Quantile, Fixed };

  EtaPolicy() = default;

  static EtaPolicy quantile(double q = 0.5) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidInput("eta quantile must lie strictly inside (0, 1)");
    return EtaPolicy(Mode::Quantile, q);
  }

  static EtaPolicy fixed(double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("fixed eta must be positive and finite");
    return EtaPolicy(Mode::Fixed, eta);
  }

  Mode mode() const { return mode_; }
  double value() const { return value_; }

  double select(const Eigen::VectorXd& sigma) const;

 private:
  EtaPolicy(Mode mode, double value) : mode_(mode), value_(value) {}

  Mode mode_ = Mode::Quantile;
  double value_ = 0.5;
};

// q-quantile of a set of singular values, linear interpolation at position q*(k-1) of
// the ascending order. q = 0.5 gives the usual median (mean of the middle pair for even k).
inline double singular_value_quantile(const Eigen::VectorXd& sigma, double q) {
  if (sigma.size() == 0) throw EmptyInput("no singular values");
  std::vector<double> s(sigma.data(), sigma.data() + sigma.size());
  std::sort(s.begin(), s.end());
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= s.size()) return s.back();
  return s[lo] + frac * (s[lo + 1] - s[lo]);
}

inline double EtaPolicy::select(const Eigen::VectorXd& sigma) const {
  return mode_ == Mode::Fixed ? value_ : singular_value_quantile(sigma, value_);
}

// Imaginary part of the resolvent diagonal of the symmetrized data at i*eta, split into
// the row block g1 (length m) and the column block g2 (length n).
struct ResolventDiagonal {
  Eigen::VectorXd g1;
  Eigen::VectorXd g2;
  double eta = 0.0;
};

enum class FactorConvention { EstimatedAlphaOne, SinkhornGeoMean, DysonNormalized };

inline const char* to_string(FactorConvention c) {
  switch (c) {
    case FactorConvention::EstimatedAlphaOne: return "EstimatedAlphaOne";
    case FactorConvention::SinkhornGeoMean: return "SinkhornGeoMean";
    case FactorConvention::DysonNormalized: return "DysonNormalized";
  }
  return "unknown";
}

struct ScalingFactors {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  FactorConvention convention = FactorConvention::EstimatedAlphaOne;
};

struct EqualizeResult {
  DenseMatrix y_hat{1, 1};
  ScalingFactors factors;
  ResolventDiagonal gdiag;
  double eta = 0.0;
  double denom1 = 0.0;  // m - eta * |g1|_1
  double denom2 = 0.0;  // n - eta * |g2|_1
  bool transposed = false;
  Eigen::VectorXd sigma;  // singular values of Y, descending
};

// SVD closed form of the resolvent diagonal; svd must come from an m x n matrix, m <= n.
inline ResolventDiagonal resolvent_diagonal(const SvdFactors& svd, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("resolvent_diagonal: eta must be positive");
  const Eigen::ArrayXd weights = eta / (svd.sigma.array().square() + eta * eta);
  const Eigen::MatrixXd u2 = svd.u.array().square().matrix();
  const Eigen::MatrixXd v2 = svd.v.array().square().matrix();

  ResolventDiagonal out;
  out.eta = eta;
  out.g1 = u2 * weights.matrix();
  // Columns of Y outside the row space only see the free -1/(i*eta) term.
  const Eigen::VectorXd leverage = v2.rowwise().sum();
  out.g2 = ((1.0 - leverage.array()) / eta).matrix() + v2 * weights.matrix();
  return out;
}

namespace detail {

inline Eigen::VectorXd factor_from_block(const Eigen::VectorXd& g, double eta, double denom) {
  Eigen::VectorXd f = ((1.0 / g.array()) - eta).max(0.0).matrix();
  return f / std::sqrt(denom);
}

inline double tol_denom(Index m, Index n) { return 1e-12 * static_cast<double>(std::max(m, n)); }

}  // namespace detail

inline double denominator(const Eigen::VectorXd& g, double eta) {
  return static_cast<double>(g.size()) - eta * g.sum();
}

// Row/column factor estimates from the resolvent diagonal, alpha fixed to one.
inline ScalingFactors estimate_factors(const ResolventDiagonal& gdiag, Index m, Index n) {
  if (gdiag.g1.size() != m || gdiag.g2.size() != n) throw ShapeMismatch("estimate_factors: dimension mismatch");
  const double d1 = denominator(gdiag.g1, gdiag.eta);
  const double d2 = denominator(gdiag.g2, gdiag.eta);
  const double tol = detail::tol_denom(m, n);
  if (d1 <= tol || d2 <= tol) throw DegenerateMatrix("estimate_factors: vanishing denominator (Y is numerically zero)");
  return ScalingFactors{detail::factor_from_block(gdiag.g1, gdiag.eta, d1),
                        detail::factor_from_block(gdiag.g2, gdiag.eta, d2),
                        FactorConvention::EstimatedAlphaOne};
}

// diag(x)^{-1/2} Y diag(y)^{-1/2}
inline Eigen::MatrixXd scale_rows_cols(const Eigen::MatrixXd& y, const Eigen::VectorXd& x_factor,
                                       const Eigen::VectorXd& y_factor) {
  const Eigen::VectorXd rs = x_factor.array().rsqrt().matrix();
  const Eigen::VectorXd cs = y_factor.array().rsqrt().matrix();
  return rs.asDiagonal() * y * cs.asDiagonal();
}

// diag(x)^{1/2} A diag(y)^{1/2}
inline Eigen::MatrixXd unscale_rows_cols(const Eigen::MatrixXd& a, const Eigen::VectorXd& x_factor,
                                         const Eigen::VectorXd& y_factor) {
  const Eigen::VectorXd rs = x_factor.array().sqrt().matrix();
  const Eigen::VectorXd cs = y_factor.array().sqrt().matrix();
  return rs.asDiagonal() * a * cs.asDiagonal();
}

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> zero_rows_cols(const Eigen::MatrixXd& y) {
  std::vector<std::size_t> rows, cols;
  for (Index i = 0; i < y.rows(); ++i)
    if ((y.row(i).array() == 0.0).all()) rows.push_back(static_cast<std::size_t>(i));
  for (Index j = 0; j < y.cols(); ++j)
    if ((y.col(j).array() == 0.0).all()) cols.push_back(static_cast<std::size_t>(j));
  return {std::move(rows), std::move(cols)};
}

// Full equalization pipeline. Inputs with m > n are transposed internally; every
// returned quantity is reported in the orientation of the input.
inline EqualizeResult equalize(const DenseMatrix& y, const EtaPolicy& policy = EtaPolicy::quantile()) {
  auto [zero_rows, zero_cols] = zero_rows_cols(y.values());
  if (!zero_rows.empty() || !zero_cols.empty()) throw ZeroRowOrColumn(std::move(zero_rows), std::move(zero_cols));

  const bool transposed = y.rows() > y.cols();
  const DenseMatrix work = transposed ? y.transposed() : y;
  const Index m = work.rows();
  const Index n = work.cols();

  const SvdFactors svd = thin_svd(work);
  const double eta = policy.select(svd.sigma);
  // A quantile landing on a numerically zero singular value is as degenerate as an exact zero.
  const double rank_tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * svd.sigma.maxCoeff();
  if (!(eta > 0.0) || (policy.mode() == EtaPolicy::Mode::Quantile && eta <= rank_tol))
    throw DegenerateMatrix("equalize: selected eta is zero (Y is rank deficient)");

  EqualizeResult out;
  out.gdiag = resolvent_diagonal(svd, eta);
  out.factors = estimate_factors(out.gdiag, m, n);
  out.eta = eta;
  out.denom1 = denominator(out.gdiag.g1, eta);
  out.denom2 = denominator(out.gdiag.g2, eta);
  out.sigma = svd.sigma;
  out.transposed = transposed;

  Eigen::MatrixXd scaled = scale_rows_cols(work.values(), out.factors.x, out.factors.y);
  if (transposed) {
    out.y_hat = DenseMatrix(Eigen::MatrixXd(scaled.transpose()));
    std::swap(out.factors.x, out.factors.y);
    std::swap(out.gdiag.g1, out.gdiag.g2);
    std::swap(out.denom1, out.denom2);
  } else {
    out.y_hat = DenseMatrix(std::move(scaled));
  }
  return out;
}

}  // namespace dyson_eq

#endif  // DYSON_EQ_EQUALIZER_HPP
