#ifndef DYSON_EQ_DYSON_HPP
#define DYSON_EQ_DYSON_HPP

// Deterministic counterparts of the data-driven estimators: the quadratic Dyson
// equation on the imaginary axis, its rank-one surrogate, Sinkhorn scaling of the
// variance matrix, and a brute-force resolvent used to cross-check the SVD formulas.

#include <algorithm>
#include <cmath>
#include <complex>

#include "dyson_eq/equalizer.hpp"
#include "dyson_eq/errors.hpp"
#include "dyson_eq/linalg.hpp"

namespace dyson_eq {

// Entrywise noise variances, S_ij = E[E_ij^2] > 0.
class VarianceMatrix {
 public:
  explicit VarianceMatrix(DenseMatrix s) : s_(std::move(s)) {
    if (!(s_.values().array() > 0.0).all()) throw InvalidInput("variance matrix must be strictly positive");
  }
  explicit VarianceMatrix(Eigen::MatrixXd s) : VarianceMatrix(DenseMatrix(std::move(s))) {}

  Index rows() const { return s_.rows(); }
  Index cols() const { return s_.cols(); }
  const Eigen::MatrixXd& values() const { return s_.values(); }
  const DenseMatrix& matrix() const { return s_; }

 private:
  DenseMatrix s_;
};

struct DysonSolution {
  Eigen::VectorXd g1;
  Eigen::VectorXd g2;
  double eta = 0.0;
  double residual = 0.0;  // |1/g - eta - S g|_inf
  long iterations = 0;
};

// Residual of eta + S g2 = 1/g1, eta + S^T g1 = 1/g2 in the infinity norm.
inline double dyson_residual(const Eigen::MatrixXd& s, const Eigen::VectorXd& g1, const Eigen::VectorXd& g2,
                             double eta) {
  const Eigen::VectorXd r1 = (1.0 / g1.array()).matrix() - (s * g2).array().matrix() -
                             Eigen::VectorXd::Constant(g1.size(), eta);
  const Eigen::VectorXd r2 = (1.0 / g2.array()).matrix() - (s.transpose() * g1) -
                             Eigen::VectorXd::Constant(g2.size(), eta);
  return std::max(r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>());
}

// Damped fixed point g <- (1 - b) g + b / (eta + S g), b = 1/2, started from 1/(2 eta).
// Iterates stay inside (0, 1/eta); stops on the equation residual.
inline DysonSolution solve_dyson(const VarianceMatrix& s, double eta, double tol = 1e-12,
                                 long max_iter = 100000) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("solve_dyson: eta must be positive");
  constexpr double damping = 0.5;
  const Eigen::MatrixXd& sv = s.values();
  Eigen::VectorXd g1 = Eigen::VectorXd::Constant(s.rows(), 0.5 / eta);
  Eigen::VectorXd g2 = Eigen::VectorXd::Constant(s.cols(), 0.5 / eta);

  double residual = 0.0;
  for (long it = 0; it <= max_iter; ++it) {
    const Eigen::ArrayXd denom1 = eta + (sv * g2).array();
    const Eigen::ArrayXd denom2 = eta + (sv.transpose() * g1).array();
    residual = std::max(((1.0 / g1.array()) - denom1).abs().maxCoeff(),
                        ((1.0 / g2.array()) - denom2).abs().maxCoeff());
    if (residual <= tol) return DysonSolution{std::move(g1), std::move(g2), eta, residual, it};
    if (it == max_iter) break;
    g1 = ((1.0 - damping) * g1.array() + damping / denom1).matrix();
    g2 = ((1.0 - damping) * g2.array() + damping / denom2).matrix();
  }
  throw NoConvergence("solve_dyson", max_iter, residual);
}

// Rank-one case S = x y^T. With p = y^T h2 and q = x^T h1 the system collapses to
// h1 = 1/(eta + x p), h2 = 1/(eta + y q); p is bracketed in [0, sum(y)/eta] and found
// by bisection on p - F(G(p)).
inline DysonSolution solve_dyson_rank_one(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double eta,
                                          double tol = 1e-12, long max_iter = 100000) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("solve_dyson_rank_one: eta must be positive");
  if (x.size() == 0 || y.size() == 0) throw EmptyInput("solve_dyson_rank_one: empty factor");
  if (!(x.array() > 0.0).all() || !(y.array() > 0.0).all() || !x.allFinite() || !y.allFinite())
    throw InvalidInput("solve_dyson_rank_one: factors must be positive and finite");

  auto q_of_p = [&](double p) { return (x.array() / (eta + x.array() * p)).sum(); };
  auto p_of_q = [&](double q) { return (y.array() / (eta + y.array() * q)).sum(); };
  auto phi = [&](double p) { return p - p_of_q(q_of_p(p)); };

  double lo = 0.0;
  double hi = y.sum() / eta;
  long it = 0;
  for (; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (phi(mid) < 0.0 ? lo : hi) = mid;
  }
  const double p = (std::abs(phi(lo)) <= std::abs(phi(hi))) ? lo : hi;
  const double q = q_of_p(p);

  DysonSolution sol;
  sol.eta = eta;
  sol.g1 = (1.0 / (eta + x.array() * p)).matrix();
  sol.g2 = (1.0 / (eta + y.array() * q)).matrix();
  sol.iterations = it;
  const double a2 = y.dot(sol.g2);
  const double a1 = x.dot(sol.g1);
  const Eigen::ArrayXd r1 = (1.0 / sol.g1.array()) - eta - x.array() * a2;
  const Eigen::ArrayXd r2 = (1.0 / sol.g2.array()) - eta - y.array() * a1;
  sol.residual = std::max(r1.abs().maxCoeff(), r2.abs().maxCoeff());
  if (!(sol.residual <= 10.0 * tol * std::max(1.0, 1.0 / sol.g1.minCoeff())))
    throw NoConvergence("solve_dyson_rank_one", it, sol.residual);
  return sol;
}

// S = diag(x0) S_tilde diag(y0) with S_tilde doubly regular.
struct DoublyRegularScaling {
  Eigen::VectorXd x0;
  Eigen::VectorXd y0;
  DenseMatrix s_tilde{1, 1};
  double dr_residual = 0.0;
  long iterations = 0;
};

// Max deviation of the row and column means of a from one.
inline double doubly_regular_residual(const Eigen::MatrixXd& a) {
  const double row = (a.rowwise().mean().array() - 1.0).abs().maxCoeff();
  const double col = (a.colwise().mean().array() - 1.0).abs().maxCoeff();
  return std::max(row, col);
}

// Sinkhorn-Knopp on row/column means. The scalar ambiguity is fixed by making the
// geometric means of x0 and y0 equal.
inline DoublyRegularScaling sinkhorn(const VarianceMatrix& s, double tol = 1e-12, long max_iter = 10000) {
  const Eigen::MatrixXd& sv = s.values();
  const double m = static_cast<double>(s.rows());
  const double n = static_cast<double>(s.cols());
  Eigen::VectorXd x0 = Eigen::VectorXd::Ones(s.rows());
  Eigen::VectorXd y0 = Eigen::VectorXd::Ones(s.cols());

  double residual = 0.0;
  long it = 0;
  for (;; ++it) {
    const Eigen::VectorXd row_sums = sv * (1.0 / y0.array()).matrix() / n;
    const Eigen::VectorXd col_sums = sv.transpose() * (1.0 / x0.array()).matrix() / m;
    residual = std::max((row_sums.array() / x0.array() - 1.0).abs().maxCoeff(),
                        (col_sums.array() / y0.array() - 1.0).abs().maxCoeff());
    if (residual <= tol) break;
    if (it == max_iter) throw NoConvergence("sinkhorn", max_iter, residual);
    x0 = row_sums;
    y0 = sv.transpose() * (1.0 / x0.array()).matrix() / m;
  }

  const double shift = 0.5 * (y0.array().log().mean() - x0.array().log().mean());
  x0 *= std::exp(shift);
  y0 *= std::exp(-shift);

  DoublyRegularScaling out;
  Eigen::MatrixXd s_tilde = (1.0 / x0.array()).matrix().asDiagonal() * sv * (1.0 / y0.array()).matrix().asDiagonal();
  out.dr_residual = doubly_regular_residual(s_tilde);
  out.s_tilde = DenseMatrix(std::move(s_tilde));
  out.x0 = std::move(x0);
  out.y0 = std::move(y0);
  out.iterations = it;
  return out;
}

// Rescales (x0, y0) -> (x0/alpha, alpha*y0) so that x^T h1 = y^T h2, with h the
// rank-one Dyson solution (which does not depend on the split).
inline ScalingFactors normalize_factor_pair(const Eigen::VectorXd& x0, const Eigen::VectorXd& y0, double eta) {
  const DysonSolution h = solve_dyson_rank_one(x0, y0, eta);
  const double alpha = std::sqrt(x0.dot(h.g1) / y0.dot(h.g2));
  return ScalingFactors{x0 / alpha, alpha * y0, FactorConvention::DysonNormalized};
}

// Closed-form factor recovery from a Dyson solution (alpha = 1).
inline ScalingFactors factors_from_g(const DysonSolution& sol, Index m, Index n) {
  if (sol.g1.size() != m || sol.g2.size() != n) throw ShapeMismatch("factors_from_g: dimension mismatch");
  const double d1 = denominator(sol.g1, sol.eta);
  const double d2 = denominator(sol.g2, sol.eta);
  const double tol = detail::tol_denom(m, n);
  if (d1 <= tol || d2 <= tol) throw DegenerateMatrix("factors_from_g: vanishing denominator");
  return ScalingFactors{detail::factor_from_block(sol.g1, sol.eta, d1),
                        detail::factor_from_block(sol.g2, sol.eta, d2), FactorConvention::DysonNormalized};
}

// Im diag((Ysym - i eta I)^{-1}) by dense complex LU of the (m+n) symmetrization.
inline ResolventDiagonal naive_resolvent_diagonal(const DenseMatrix& y, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("naive_resolvent_diagonal: eta must be positive");
  const Index m = y.rows();
  const Index n = y.cols();
  if (m + n > 2000) throw TooLarge("naive_resolvent_diagonal: m + n exceeds 2000");

  using C = std::complex<double>;
  Eigen::MatrixXcd shifted = Eigen::MatrixXcd::Zero(m + n, m + n);
  shifted.topRightCorner(m, n) = y.values().cast<C>();
  shifted.bottomLeftCorner(n, m) = y.values().transpose().cast<C>();
  shifted.diagonal().array() -= C(0.0, eta);
  const Eigen::VectorXd diag = shifted.partialPivLu().inverse().diagonal().imag();

  return ResolventDiagonal{diag.head(m), diag.tail(n), eta};
}

struct IncoherenceDiagnostics {
  Eigen::VectorXd w1;
  Eigen::VectorXd w2;
  double a = 0.0;
  double bound = 0.0;  // right-hand side with the unknown constant set to 1 (diagnostic only)
  double gap = 0.0;    // measured |g - h|_inf
  ScalingFactors factors;
};

// w-vectors of the normalized scaling factors and the incoherence bound on |g - h|_inf,
// reported alongside the gap actually measured between the two Dyson solutions.
inline IncoherenceDiagnostics incoherence_diagnostics(const VarianceMatrix& s, double eta) {
  const Index m = s.rows();
  const Index n = s.cols();
  const DoublyRegularScaling dr = sinkhorn(s);
  IncoherenceDiagnostics out;
  out.factors = normalize_factor_pair(dr.x0, dr.y0, eta);
  const Eigen::VectorXd& x = out.factors.x;
  const Eigen::VectorXd& y = out.factors.y;

  const DysonSolution h = solve_dyson_rank_one(x, y, eta);
  out.a = x.dot(h.g1);
  out.w1 = x.cwiseProduct(h.g1);
  out.w2 = y.cwiseProduct(h.g2);

  const Eigen::MatrixXd centered =
      (1.0 / x.array()).matrix().asDiagonal() * s.values() * (1.0 / y.array()).matrix().asDiagonal() -
      Eigen::MatrixXd::Ones(m, n);
  const Eigen::VectorXd d2 = (out.w2.array() - out.w2.mean()).matrix() / out.w2.norm();
  const Eigen::VectorXd d1 = (out.w1.array() - out.w1.mean()).matrix() / out.w1.norm();
  const double dm = static_cast<double>(m);
  const double dn = static_cast<double>(n);
  const double term_rows = (centered * d2).lpNorm<Eigen::Infinity>() / std::sqrt(dn);
  const double term_cols = (centered.transpose() * d1).lpNorm<Eigen::Infinity>() * std::sqrt(dm) / dn;
  out.bound = std::max(term_rows, term_cols);

  const DysonSolution g = solve_dyson(s, eta);
  out.gap = std::max((g.g1 - h.g1).lpNorm<Eigen::Infinity>(), (g.g2 - h.g2).lpNorm<Eigen::Infinity>());
  return out;
}

}  // namespace dyson_eq

#endif  // DYSON_EQ_DYSON_HPP
