#include "dppchains/linalg.hpp"

#include <cmath>
#include <utility>

namespace dppchains {

double lu_determinant_inplace(std::span<double> a, std::size_t n) {
  auto at = [&](std::size_t r, std::size_t c) -> double& { return a[c * n + r]; };
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    double best = std::abs(at(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(at(r, k)) > best) {
        best = std::abs(at(r, k));
        pivot = r;
      }
    }
    if (best == 0.0) return 0.0;
    if (pivot != k) {
      for (std::size_t c = k; c < n; ++c) std::swap(at(k, c), at(pivot, c));
      det = -det;
    }
    const double d = at(k, k);
    det *= d;
    for (std::size_t r = k + 1; r < n; ++r) {
      const double factor = at(r, k) / d;
      if (factor == 0.0) continue;
      for (std::size_t c = k + 1; c < n; ++c) at(r, c) -= factor * at(k, c);
    }
  }
  return det;
}

double determinant(const Matrix& m) {
  std::vector<double> buf(m.data(), m.data() + m.size());
  return lu_determinant_inplace(buf, static_cast<std::size_t>(m.rows()));
}

double MinorEvaluator::operator()(std::span<const std::size_t> subset) {
  const std::size_t k = subset.size();
  scratch_.resize(k * k);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t r = 0; r < k; ++r)
      scratch_[c * k + r] = m_(static_cast<Eigen::Index>(subset[r]),
                               static_cast<Eigen::Index>(subset[c]));
  return lu_determinant_inplace(scratch_, k);
}

double MinorEvaluator::complement(std::span<const std::size_t> subset) {
  const std::size_t k = subset.size();
  scratch_.resize(k * k);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t r = 0; r < k; ++r)
      scratch_[c * k + r] = (r == c ? 1.0 : 0.0) -
                            m_(static_cast<Eigen::Index>(subset[r]),
                               static_cast<Eigen::Index>(subset[c]));
  return lu_determinant_inplace(scratch_, k);
}

Matrix principal_submatrix(const Matrix& m, std::span<const std::size_t> subset) {
  const auto k = static_cast<Eigen::Index>(subset.size());
  Matrix out(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c)
      out(r, c) = m(static_cast<Eigen::Index>(subset[static_cast<std::size_t>(r)]),
                    static_cast<Eigen::Index>(subset[static_cast<std::size_t>(c)]));
  return out;
}

std::complex<double> hessenberg_shifted_determinant(const Eigen::MatrixXcd& h,
                                                    std::complex<double> w) {
  using C = std::complex<double>;
  const Eigen::Index n = h.rows();
  Eigen::MatrixXcd a = w * h;
  a.diagonal().array() += C(1.0, 0.0);
  C det(1.0, 0.0);
  // Only rows k and k+1 carry entries in column k at step k.
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k + 1 < n && std::abs(a(k + 1, k)) > std::abs(a(k, k))) {
      a.row(k).segment(k, n - k).swap(a.row(k + 1).segment(k, n - k));
      det = -det;
    }
    const C d = a(k, k);
    if (d == C(0.0, 0.0)) return C(0.0, 0.0);
    det *= d;
    if (k + 1 < n) {
      const C factor = a(k + 1, k) / d;
      a.row(k + 1).segment(k + 1, n - k - 1) -= factor * a.row(k).segment(k + 1, n - k - 1);
    }
  }
  return det;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace dppchains
