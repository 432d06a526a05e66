#ifndef DYSON_EQ_LINALG_HPP
#define DYSON_EQ_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <initializer_list>

#include "dyson_eq/errors.hpp"

namespace dyson_eq {

using Index = Eigen::Index;

// Real m x n matrix with finite entries and m, n >= 1.
class DenseMatrix {
 public:
  DenseMatrix(Index rows, Index cols) : values_(Eigen::MatrixXd::Zero(rows, cols)) { check_shape(); }

  explicit DenseMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    check_shape();
    if (!values_.allFinite()) throw InvalidInput("matrix contains non-finite entries");
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    const auto m = static_cast<Index>(rows.size());
    const auto n = m ? static_cast<Index>(rows.begin()->size()) : 0;
    values_.resize(m, n);
    Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Index>(row.size()) != n) throw InvalidInput("ragged matrix literal");
      Index j = 0;
      for (double v : row) values_(i, j++) = v;
      ++i;
    }
    check_shape();
    if (!values_.allFinite()) throw InvalidInput("matrix contains non-finite entries");
  }

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(Index i, Index j) const { return values_(i, j); }

  DenseMatrix transposed() const { return DenseMatrix(Eigen::MatrixXd(values_.transpose())); }

 private:
  void check_shape() const {
    if (values_.rows() < 1 || values_.cols() < 1) throw InvalidInput("matrix must have m >= 1 and n >= 1");
  }

  Eigen::MatrixXd values_;
};

// Full thin SVD of an m x n matrix with m <= n: u is m x m, v is n x m.
struct SvdFactors {
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
  Eigen::VectorXd sigma;  // descending, nonnegative
};

inline SvdFactors thin_svd(const DenseMatrix& a) {
  if (a.rows() > a.cols()) throw InvalidInput("thin_svd requires rows <= cols; transpose first");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a.values(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdFactors{svd.matrixU(), svd.matrixV(), svd.singularValues()};
}

// Singular values (descending) of a matrix of any orientation.
inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues();
}

inline Eigen::VectorXd singular_values(const DenseMatrix& a) { return singular_values(a.values()); }

// Solves (sym - i*eta*I) w = rhs for a real symmetric sym.
inline Eigen::VectorXcd complex_shift_solve(const Eigen::MatrixXd& sym, double eta,
                                            const Eigen::VectorXcd& rhs) {
  if (sym.rows() != sym.cols()) throw InvalidInput("complex_shift_solve: matrix is not square");
  if (sym.rows() != rhs.size()) throw InvalidInput("complex_shift_solve: dimension mismatch");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("complex_shift_solve: eta must be positive");
  if (!sym.allFinite() || !rhs.allFinite()) throw InvalidInput("complex_shift_solve: non-finite input");
  Eigen::MatrixXcd shifted = sym.cast<std::complex<double>>();
  shifted.diagonal().array() -= std::complex<double>(0.0, eta);
  return shifted.partialPivLu().solve(rhs);
}

}  // namespace dyson_eq

#endif  // DYSON_EQ_LINALG_HPP
