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

#ifndef BEBM_MODELS_HPP
#define BEBM_MODELS_HPP

#include <Eigen/Sparse>
#include <cmath>
#include <numbers>
#include <vector>

#include "bebm/linalg.hpp"
#include "bebm/mps.hpp"

namespace bebm {

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr std::size_t kMaxDenseSites = 16;

enum class TransverseAxis { X, Y };

// Rydberg chain H = sum (omega/2) s_t - delta sum n + sum_{i<j} c6/(a r)^6 n_i n_j.
// Any consistent unit system works; `dimensionless` sets omega = a = 1 so the
// physics depends only on delta/omega and R_b/a.
struct RydbergParams {
  double omega = 1.0;
  double delta = 0.0;
  double spacing = 1.0;
  double c6 = 1.0;
  std::size_t truncation_range = 5;
  TransverseAxis transverse_axis = TransverseAxis::X;

  static RydbergParams dimensionless(double delta_over_omega, double rb_over_a,
                                     TransverseAxis axis = TransverseAxis::X, std::size_t range = 5) {
    RydbergParams p;
    p.omega = 1.0;
    p.delta = delta_over_omega;
    p.spacing = 1.0;
    p.c6 = std::pow(rb_over_a, 6);
    p.truncation_range = range;
    p.transverse_axis = axis;
    return p;
  }

  // SI inputs: omega and delta in rad/s, spacing in meters, c6 in rad m^6/s.
  static RydbergParams from_si(double omega, double delta, double spacing, double c6,
                               TransverseAxis axis = TransverseAxis::X, std::size_t range = 5) {
    RydbergParams p{omega, delta, spacing, c6, range, axis};
    p.validate();
    return dimensionless(delta / omega, p.blockade_radius() / spacing, axis, range);
  }

  double blockade_radius() const { return std::pow(c6 / omega, 1.0 / 6.0); }
  double rb_over_a() const { return blockade_radius() / spacing; }

  double interaction(std::size_t distance) const {
    return c6 / std::pow(spacing * static_cast<double>(distance), 6);
  }

  // omega = 0 and c6 = 0 are accepted for the classical and free limits.
  void validate() const {
    if (!(omega >= 0.0) || !std::isfinite(omega)) throw std::invalid_argument("RydbergParams: omega must be >= 0");
    if (!(spacing > 0.0)) throw std::invalid_argument("RydbergParams: spacing must be > 0");
    if (!(c6 >= 0.0) || !std::isfinite(c6)) throw std::invalid_argument("RydbergParams: c6 must be >= 0");
    if (!std::isfinite(delta)) throw std::invalid_argument("RydbergParams: delta must be finite");
    if (truncation_range < 1) throw std::invalid_argument("RydbergParams: truncation_range must be >= 1");
  }
};

// Rabi frequency 2 MHz taken as 2*pi*2e6 rad/s, C6 = 5.4e-24 m^6/s.
inline constexpr double kReferenceOmega = 2.0 * std::numbers::pi * 2.0e6;
inline constexpr double kReferenceC6 = 5.4e-24;

// Anisotropic XY chain with transverse field, open boundaries.
struct XYParams {
  double coupling = 1.0;
  double gamma = 0.0;
  double field = 0.0;

  void validate() const {
    if (!std::isfinite(coupling) || !std::isfinite(gamma) || !std::isfinite(field)) {
      throw std::invalid_argument("XYParams: parameters must be finite");
    }
  }
};

// Operator tensors shaped (left bond, out, in, right bond).
class MatrixProductOperator {
 public:
  MatrixProductOperator() = default;
  explicit MatrixProductOperator(std::vector<DenseTensor> tensors) : tensors_(std::move(tensors)) {
    if (tensors_.empty()) throw std::invalid_argument("MPO needs at least one site");
    for (std::size_t k = 0; k < tensors_.size(); ++k) {
      const auto& t = tensors_[k];
      if (t.rank() != 4 || t.dim(1) != 2 || t.dim(2) != 2) {
        throw std::invalid_argument("MPO site " + std::to_string(k) + " has wrong shape");
      }
      if (k > 0 && tensors_[k - 1].dim(3) != t.dim(0)) {
        throw std::invalid_argument("MPO bond mismatch at site " + std::to_string(k));
      }
    }
    if (tensors_.front().dim(0) != 1 || tensors_.back().dim(3) != 1) {
      throw std::invalid_argument("MPO boundary bonds must be 1");
    }
  }

  std::size_t size() const { return tensors_.size(); }
  const DenseTensor& site(std::size_t k) const { return tensors_.at(k); }

  std::size_t max_bond_dim() const {
    std::size_t d = 1;
    for (const auto& t : tensors_) d = std::max(d, t.dim(3));
    return d;
  }

 private:
  std::vector<DenseTensor> tensors_;
};

namespace detail {

inline Matrix2 transverse_op(TransverseAxis axis) { return axis == TransverseAxis::X ? pauli::x() : pauli::y(); }

// Build an MPO from a lower-triangular automaton. `bulk` is a w x w grid of
// 2x2 operators; the chain starts in state w-1 and ends in state 0.
inline MatrixProductOperator automaton_mpo(const std::vector<std::vector<Matrix2>>& bulk, std::size_t n) {
  const std::size_t w = bulk.size();
  std::vector<DenseTensor> tensors;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t wl = k == 0 ? 1 : w;
    const std::size_t wr = k + 1 == n ? 1 : w;
    DenseTensor t({wl, 2, 2, wr});
    for (std::size_t a = 0; a < wl; ++a) {
      const std::size_t row = k == 0 ? w - 1 : a;
      for (std::size_t b = 0; b < wr; ++b) {
        const std::size_t col = k + 1 == n ? 0 : b;
        const Matrix2& op = bulk[row][col];
        for (std::size_t s = 0; s < 2; ++s) {
          for (std::size_t u = 0; u < 2; ++u) {
            t.at({a, s, u, b}) = op(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(u));
          }
        }
      }
    }
    tensors.push_back(std::move(t));
  }
  return MatrixProductOperator(std::move(tensors));
}

inline void check_dense_size(std::size_t n) {
  if (n > kMaxDenseSites) {
    throw std::invalid_argument("dense Hamiltonian limited to " + std::to_string(kMaxDenseSites) +
                                " sites (got " + std::to_string(n) + "); use the MPO path");
  }
  if (n < 1) throw std::invalid_argument("dense Hamiltonian needs at least one site");
}

// Bit of site k in a kron-order basis index.
inline int site_bit(std::uint64_t idx, std::size_t n, std::size_t k) {
  return static_cast<int>((idx >> (n - 1 - k)) & 1U);
}

}  // namespace detail

// Full-Hilbert-space Hamiltonian in kron order (site 0 most significant),
// stored sparse.
inline SparseMatrix rydberg_dense(const RydbergParams& p, std::size_t n) {
  p.validate();
  detail::check_dense_size(n);
  const std::uint64_t dim = std::uint64_t{1} << n;
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(dim) * (n + 1));
  const double half_omega = 0.5 * p.omega;
  for (std::uint64_t idx = 0; idx < dim; ++idx) {
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!detail::site_bit(idx, n, i)) continue;
      diag -= p.delta;
      for (std::size_t j = i + 1; j < n && j - i <= p.truncation_range; ++j) {
        if (detail::site_bit(idx, n, j)) diag += p.interaction(j - i);
      }
    }
    trip.emplace_back(idx, idx, diag);
    if (half_omega == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t flipped = idx ^ (std::uint64_t{1} << (n - 1 - i));
      // <flipped| s_t |idx>
      cplx amp = 1.0;
      if (p.transverse_axis == TransverseAxis::Y) amp = detail::site_bit(idx, n, i) ? cplx(0, -1) : cplx(0, 1);
      trip.emplace_back(flipped, idx, half_omega * amp);
    }
  }
  SparseMatrix h(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

inline SparseMatrix xy_dense(const XYParams& p, std::size_t n) {
  p.validate();
  detail::check_dense_size(n);
  const std::uint64_t dim = std::uint64_t{1} << n;
  const double cxx = -p.coupling * (1.0 + p.gamma) / 4.0;
  const double cyy = -p.coupling * (1.0 - p.gamma) / 4.0;
  std::vector<Eigen::Triplet<cplx>> trip;
  for (std::uint64_t idx = 0; idx < dim; ++idx) {
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag -= 0.5 * p.field * (detail::site_bit(idx, n, i) ? -1.0 : 1.0);
    trip.emplace_back(idx, idx, diag);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::uint64_t flipped = idx ^ (std::uint64_t{3} << (n - 2 - i));
      const bool same = detail::site_bit(idx, n, i) == detail::site_bit(idx, n, i + 1);
      // sx sx -> 1, sy sy -> -1 on |00>,|11> and +1 on |01>,|10>
      const double amp = cxx + cyy * (same ? -1.0 : 1.0);
      if (amp != 0.0) trip.emplace_back(flipped, idx, amp);
    }
  }
  SparseMatrix h(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

// Automaton states: 0 done, 1..R "excitation placed r sites ago", R+1 start.
inline MatrixProductOperator rydberg_mpo(const RydbergParams& p, std::size_t n) {
  p.validate();
  if (n < 2) throw std::invalid_argument("rydberg_mpo needs n >= 2");
  const std::size_t range = std::min(p.truncation_range, n - 1);
  const std::size_t w = range + 2;
  const Matrix2 id = Matrix2::Identity();
  const Matrix2 zero = Matrix2::Zero();
  std::vector<std::vector<Matrix2>> bulk(w, std::vector<Matrix2>(w, zero));
  bulk[0][0] = id;
  bulk[w - 1][w - 1] = id;
  bulk[w - 1][0] = 0.5 * p.omega * detail::transverse_op(p.transverse_axis) - p.delta * pauli::n();
  bulk[w - 1][1] = pauli::n();
  for (std::size_t r = 1; r <= range; ++r) {
    bulk[r][0] = p.interaction(r) * pauli::n();
    if (r < range) bulk[r][r + 1] = id;
  }
  return detail::automaton_mpo(bulk, n);
}

inline MatrixProductOperator xy_mpo(const XYParams& p, std::size_t n) {
  p.validate();
  if (n < 2) throw std::invalid_argument("xy_mpo needs n >= 2");
  const Matrix2 zero = Matrix2::Zero();
  std::vector<std::vector<Matrix2>> bulk(4, std::vector<Matrix2>(4, zero));
  bulk[0][0] = Matrix2::Identity();
  bulk[3][3] = Matrix2::Identity();
  bulk[3][0] = -0.5 * p.field * pauli::z();
  bulk[3][1] = pauli::x();
  bulk[3][2] = pauli::y();
  bulk[1][0] = -p.coupling * (1.0 + p.gamma) / 4.0 * pauli::x();
  bulk[2][0] = -p.coupling * (1.0 - p.gamma) / 4.0 * pauli::y();
  return detail::automaton_mpo(bulk, n);
}

// Dense reconstruction of an MPO (kron order), for n <= 12.
inline Matrix mpo_to_dense(const MatrixProductOperator& h) {
  const std::size_t n = h.size();
  if (n > 12) throw std::invalid_argument("mpo_to_dense: too many sites");
  // acc[(out, in)] is a row vector over the current right bond
  std::size_t dim = 1;
  std::vector<Matrix> acc(1, Matrix::Ones(1, 1));
  for (std::size_t k = 0; k < n; ++k) {
    const DenseTensor& w = h.site(k);
    const std::size_t wl = w.dim(0), wr = w.dim(3);
    const std::size_t nd = dim * 2;
    std::vector<Matrix> next(nd * nd, Matrix::Zero(1, static_cast<Eigen::Index>(wr)));
    for (std::size_t o = 0; o < dim; ++o) {
      for (std::size_t i = 0; i < dim; ++i) {
        const Matrix& row = acc[o * dim + i];
        for (std::size_t s = 0; s < 2; ++s) {
          for (std::size_t t = 0; t < 2; ++t) {
            Matrix& dst = next[(2 * o + s) * nd + (2 * i + t)];
            for (std::size_t a = 0; a < wl; ++a) {
              const cplx ra = row(0, static_cast<Eigen::Index>(a));
              if (ra == cplx(0.0)) continue;
              for (std::size_t b = 0; b < wr; ++b) dst(0, static_cast<Eigen::Index>(b)) += ra * w.at({a, s, t, b});
            }
          }
        }
      }
    }
    acc = std::move(next);
    dim = nd;
  }
  Matrix out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t o = 0; o < dim; ++o) {
    for (std::size_t i = 0; i < dim; ++i) out(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) = acc[o * dim + i](0, 0);
  }
  return out;
}

// <psi|H|psi> / <psi|psi>.
inline double mpo_expectation(const MatrixProductOperator& h, const MatrixProductState& psi) {
  if (h.size() != psi.size()) throw std::invalid_argument("mpo_expectation: size mismatch");
  // env indexed (bra bond, mpo bond, ket bond) stored as vector of matrices over mpo bond
  std::vector<Matrix> env(1, Matrix::Ones(1, 1));
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const DenseTensor& w = h.site(k);
    const std::array<Matrix, 2> a{psi.matrix(k, 0), psi.matrix(k, 1)};
    std::vector<Matrix> next(w.dim(3), Matrix::Zero(a[0].cols(), a[0].cols()));
    for (std::size_t wl = 0; wl < w.dim(0); ++wl) {
      for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t t = 0; t < 2; ++t) {
          Matrix mid;
          bool have_mid = false;
          for (std::size_t wr = 0; wr < w.dim(3); ++wr) {
            const cplx c = w.at({wl, s, t, wr});
            if (c == cplx(0.0)) continue;
            if (!have_mid) {
              mid = a[s].adjoint() * env[wl] * a[t];
              have_mid = true;
            }
            next[wr] += c * mid;
          }
        }
      }
    }
    env = std::move(next);
  }
  return env[0](0, 0).real() / norm_squared(psi);
}

}  // namespace bebm

#endif  // BEBM_MODELS_HPP
