#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace dppchains {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Determinant by LU with partial pivoting. `a` holds an n×n column-major
/// matrix and is overwritten with its factors.
double lu_determinant_inplace(std::span<double> a, std::size_t n);

double determinant(const Matrix& m);

/// Evaluates principal minors det(M[S,S]) with a reusable scratch buffer.
/// Indices are taken in the order given; since a simultaneous row/column
/// permutation leaves the value unchanged, order does not matter.
class MinorEvaluator {
 public:
  explicit MinorEvaluator(const Matrix& m) : m_(m) {}

  double operator()(std::span<const std::size_t> subset);
  /// det(I - M[S,S]).
  double complement(std::span<const std::size_t> subset);

 private:
  const Matrix& m_;
  std::vector<double> scratch_;
};

Matrix principal_submatrix(const Matrix& m, std::span<const std::size_t> subset);

/// det(I + w·H) for upper Hessenberg H, O(n²) LU with partial pivoting.
std::complex<double> hessenberg_shifted_determinant(const Eigen::MatrixXcd& h,
                                                    std::complex<double> w);

double spectral_norm(const Matrix& m);

}  // namespace dppchains
