// Copyright 2026 The BEBM Authors - All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BEBM_LINALG_HPP
#define BEBM_LINALG_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bebm {

using cplx = std::complex<double>;
using Matrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
using RealVector = Eigen::VectorXd;

class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense complex tensor, row-major (last index fastest).
class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(count(shape_), cplx{0.0, 0.0}) {}

  DenseTensor(std::vector<std::size_t> shape, std::vector<cplx> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) {
      throw ShapeError("DenseTensor: entry count " + std::to_string(data_.size()) +
                       " does not match shape product " + std::to_string(count(shape_)));
    }
  }

  static DenseTensor from_matrix(const Matrix& m) {
    DenseTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    std::copy(m.data(), m.data() + m.size(), t.data_.begin());
    return t;
  }

  static DenseTensor from_vector(std::span<const cplx> v) {
    return DenseTensor({v.size()}, std::vector<cplx>(v.begin(), v.end()));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  cplx& operator[](std::size_t flat) { return data_[flat]; }
  const cplx& operator[](std::size_t flat) const { return data_[flat]; }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) flat = flat * shape_[k] + idx[k];
    return flat;
  }

  cplx& at(std::initializer_list<std::size_t> idx) {
    return data_[flat_index(std::span<const std::size_t>(idx.begin(), idx.size()))];
  }
  const cplx& at(std::initializer_list<std::size_t> idx) const {
    return data_[flat_index(std::span<const std::size_t>(idx.begin(), idx.size()))];
  }

  DenseTensor reshaped(std::vector<std::size_t> shape) const {
    return DenseTensor(std::move(shape), data_);
  }

  Matrix as_matrix() const {
    if (rank() != 2) throw ShapeError("as_matrix: tensor rank is " + std::to_string(rank()));
    return Eigen::Map<const Matrix>(data_.data(), static_cast<Eigen::Index>(shape_[0]),
                                    static_cast<Eigen::Index>(shape_[1]));
  }

  // Matrix with the first `row_axes` axes grouped as rows.
  Matrix grouped(std::size_t row_axes) const {
    std::size_t rows = 1;
    for (std::size_t k = 0; k < row_axes; ++k) rows *= shape_[k];
    const std::size_t cols = rows == 0 ? 0 : data_.size() / rows;
    return Eigen::Map<const Matrix>(data_.data(), static_cast<Eigen::Index>(rows),
                                    static_cast<Eigen::Index>(cols));
  }

  DenseTensor permuted(std::span<const std::size_t> axes) const;

  DenseTensor conj() const {
    DenseTensor out = *this;
    for (auto& x : out.data_) x = std::conj(x);
    return out;
  }

  DenseTensor& operator*=(cplx alpha) {
    for (auto& x : data_) x *= alpha;
    return *this;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& x : data_) s += std::norm(x);
    return std::sqrt(s);
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& x) {
      return std::isfinite(x.real()) && std::isfinite(x.imag());
    });
  }

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  static std::size_t count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> shape_;
  std::vector<cplx> data_;
};

inline DenseTensor operator*(cplx alpha, DenseTensor t) {
  t *= alpha;
  return t;
}

inline DenseTensor DenseTensor::permuted(std::span<const std::size_t> axes) const {
  const std::size_t r = rank();
  if (axes.size() != r) throw ShapeError("permuted: axis list has wrong length");
  std::vector<std::size_t> new_shape(r);
  for (std::size_t k = 0; k < r; ++k) new_shape[k] = shape_.at(axes[k]);

  // stride of each source axis
  std::vector<std::size_t> src_stride(r, 1);
  for (std::size_t k = r; k-- > 1;) src_stride[k - 1] = src_stride[k] * shape_[k];

  DenseTensor out(new_shape);
  if (data_.empty()) return out;
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < out.data_.size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t k = 0; k < r; ++k) src += idx[k] * src_stride[axes[k]];
    out.data_[flat] = data_[src];
    for (std::size_t k = r; k-- > 0;) {
      if (++idx[k] < new_shape[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

// Sum over paired axes; result axes are the free axes of `a` then of `b`.
inline DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                            std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  std::vector<bool> used_a(a.rank(), false), used_b(b.rank(), false);
  for (const auto& [ia, ib] : pairs) {
    std::ostringstream where;
    where << "(" << ia << ", " << ib << ")";
    if (ia >= a.rank() || ib >= b.rank()) {
      throw ContractError("contract: axis pair " + where.str() + " out of range");
    }
    if (used_a[ia] || used_b[ib]) {
      throw ContractError("contract: axis pair " + where.str() + " repeats an axis");
    }
    if (a.dim(ia) != b.dim(ib)) {
      throw ContractError("contract: dimension mismatch on axis pair " + where.str() + ": " +
                          std::to_string(a.dim(ia)) + " vs " + std::to_string(b.dim(ib)));
    }
    used_a[ia] = used_b[ib] = true;
  }

  std::vector<std::size_t> perm_a, perm_b, out_shape;
  for (std::size_t k = 0; k < a.rank(); ++k) {
    if (!used_a[k]) {
      perm_a.push_back(k);
      out_shape.push_back(a.dim(k));
    }
  }
  const std::size_t free_a = perm_a.size();
  for (const auto& p : pairs) perm_a.push_back(p.first);
  for (const auto& p : pairs) perm_b.push_back(p.second);
  for (std::size_t k = 0; k < b.rank(); ++k) {
    if (!used_b[k]) {
      perm_b.push_back(k);
      out_shape.push_back(b.dim(k));
    }
  }

  const Matrix ma = a.permuted(perm_a).grouped(free_a);
  const Matrix mb = b.permuted(perm_b).grouped(pairs.size());
  const Matrix prod = ma * mb;
  return DenseTensor(out_shape, std::vector<cplx>(prod.data(), prod.data() + prod.size()));
}

inline DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                            std::initializer_list<std::pair<std::size_t, std::size_t>> pairs) {
  return contract(a, b, std::span<const std::pair<std::size_t, std::size_t>>(pairs.begin(), pairs.size()));
}

struct SvdResult {
  Matrix u;                  // rows x k, orthonormal columns
  std::vector<double> s;     // non-increasing
  Matrix vh;                 // k x cols, orthonormal rows
  double discarded_weight = 0.0;  // sum of squares of dropped singular values
};

namespace detail {

inline std::size_t retained_rank(const RealVector& s, std::size_t max_rank, double cutoff) {
  std::size_t keep = 0;
  const double smax = s.size() > 0 ? s(0) : 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (smax > 0.0 && s(k) / smax > cutoff) ++keep;
  }
  return std::max<std::size_t>(1, std::min(keep, max_rank));
}

}  // namespace detail

inline SvdResult svd_truncated(const Matrix& m, std::size_t max_rank, double cutoff) {
  if (max_rank == 0) throw std::invalid_argument("svd_truncated: max_rank must be positive");
  if (cutoff < 0.0) throw std::invalid_argument("svd_truncated: cutoff must be non-negative");
  if (!m.allFinite()) throw FactorizationError("svd_truncated: input contains non-finite entries");

  Eigen::BDCSVD<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>> svd(
      m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw FactorizationError("svd_truncated: SVD did not converge");

  const RealVector& sv = svd.singularValues();
  const std::size_t keep = std::min<std::size_t>(detail::retained_rank(sv, max_rank, cutoff),
                                                 static_cast<std::size_t>(sv.size()));
  SvdResult out;
  const auto k = static_cast<Eigen::Index>(keep);
  out.u = svd.matrixU().leftCols(k);
  out.vh = svd.matrixV().leftCols(k).adjoint();
  out.s.assign(sv.data(), sv.data() + keep);
  for (Eigen::Index j = k; j < sv.size(); ++j) out.discarded_weight += sv(j) * sv(j);
  return out;
}

inline SvdResult svd_truncated(const DenseTensor& m, std::size_t max_rank, double cutoff) {
  return svd_truncated(m.as_matrix(), max_rank, cutoff);
}

struct QrResult {
  Matrix q;
  Matrix r;
};

// Thin QR with a real non-negative diagonal on R.
inline QrResult qr_decompose(const Matrix& m) {
  if (m.rows() < m.cols()) {
    throw ShapeError("qr_decompose: need rows >= columns, got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
  Eigen::HouseholderQR<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>> qr(m);
  const Eigen::Index k = m.cols();
  QrResult out;
  out.q = qr.householderQ() * Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>::Identity(m.rows(), k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    const cplx d = out.r(j, j);
    const double mag = std::abs(d);
    if (mag == 0.0) continue;
    const cplx phase = d / mag;
    out.r.row(j) *= std::conj(phase);
    out.q.col(j) *= phase;
  }
  return out;
}

inline QrResult qr_decompose(const DenseTensor& m) { return qr_decompose(m.as_matrix()); }

struct EighResult {
  std::vector<double> values;  // non-increasing
  Matrix vectors;              // columns, same order as values
};

inline EighResult eigh(const Matrix& m, double hermitian_tol = 1e-10) {
  if (m.rows() != m.cols()) throw ShapeError("eigh: matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (asym > hermitian_tol * scale) {
    std::ostringstream msg;
    msg << "eigh: matrix is not Hermitian (max |m - m^H| = " << asym << ")";
    throw std::invalid_argument(msg.str());
  }
  const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic> herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>> es(herm);
  if (es.info() != Eigen::Success) throw FactorizationError("eigh: eigensolver did not converge");
  const Eigen::Index n = m.rows();
  EighResult out;
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[static_cast<std::size_t>(k)] = es.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  return out;
}

inline EighResult eigh(const DenseTensor& m, double hermitian_tol = 1e-10) {
  return eigh(m.as_matrix(), hermitian_tol);
}

// Matrix-free Hermitian operator: writes A*x into y.
using LinearMap = std::function<void(const Vector& x, Vector& y)>;

struct LanczosOptions {
  std::size_t krylov_dim = 60;
  std::size_t max_restarts = 200;
  double tolerance = 1e-11;  // residual norm relative to max(1, |lambda|)
};

struct EigenPair {
  double value;
  Vector vector;
  double residual;
};

// Lowest eigenpair of a Hermitian map restricted to the orthogonal complement of
// `deflate`. Restarted Lanczos with full reorthogonalization.
inline EigenPair lanczos_lowest(const LinearMap& apply, Vector start, std::span<const Vector> deflate,
                                const LanczosOptions& opt = {}) {
  const Eigen::Index n = start.size();
  auto project = [&](Vector& v) {
    for (const auto& d : deflate) v -= d * d.dot(v);
  };
  project(start);
  double nrm = start.norm();
  if (!(nrm > 1e-300)) {
    start = Vector::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) start(i) = cplx(1.0 + 0.37 * std::sin(1.3 * double(i)), 0.11 * std::cos(0.7 * double(i)));
    project(start);
    nrm = start.norm();
  }
  Vector x = start / nrm;

  EigenPair best{0.0, x, 1e300};
  const Eigen::Index max_dim = static_cast<Eigen::Index>(std::min<std::size_t>(
      opt.krylov_dim, static_cast<std::size_t>(n) - std::min<std::size_t>(deflate.size(), static_cast<std::size_t>(n) - 1)));

  Vector w(n);
  for (std::size_t restart = 0; restart <= opt.max_restarts; ++restart) {
    std::vector<Vector> basis;
    std::vector<double> alpha, beta;
    basis.push_back(x);
    for (Eigen::Index j = 0; j < max_dim; ++j) {
      apply(basis.back(), w);
      const double a = basis.back().dot(w).real();
      alpha.push_back(a);
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass) {
        project(w);
        for (const auto& q : basis) w -= q * q.dot(w);
      }
      const double b = w.norm();
      if (j + 1 == max_dim || b < 1e-13) break;
      beta.push_back(b);
      basis.push_back(w / b);
    }
    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) tri(i, i) = alpha[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
      tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    const double theta = es.eigenvalues()(0);
    Vector ritz = Vector::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) ritz += es.eigenvectors()(i, 0) * basis[static_cast<std::size_t>(i)];
    project(ritz);
    ritz.normalize();
    apply(ritz, w);
    project(w);
    const double lambda = ritz.dot(w).real();
    const double res = (w - lambda * ritz).norm();
    best = {lambda, ritz, res};
    if (res <= opt.tolerance * std::max(1.0, std::abs(lambda)) || m < max_dim) break;
    x = ritz;
    (void)theta;
  }
  return best;
}

// Lowest `k` eigenpairs by successive deflation.
inline std::vector<EigenPair> lanczos_lowest_k(const LinearMap& apply, Eigen::Index dim, std::size_t k,
                                               const LanczosOptions& opt = {}) {
  std::vector<EigenPair> pairs;
  std::vector<Vector> found;
  for (std::size_t j = 0; j < k; ++j) {
    Vector start(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      start(i) = cplx(1.0 + 0.5 * std::sin(0.917 * double(i) + double(j)),
                      0.25 * std::cos(1.31 * double(i) + 2.0 * double(j)));
    }
    EigenPair p = lanczos_lowest(apply, start, found, opt);
    found.push_back(p.vector);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace bebm

#endif  // BEBM_LINALG_HPP
