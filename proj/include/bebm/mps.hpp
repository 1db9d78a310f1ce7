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

#ifndef BEBM_MPS_HPP
#define BEBM_MPS_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bebm/bitstring.hpp"
#include "bebm/io.hpp"
#include "bebm/linalg.hpp"
#include "bebm/random.hpp"

namespace bebm {

using Matrix2 = Eigen::Matrix2cd;

enum class PauliBasis { X, Y, Z };

inline char basis_char(PauliBasis b) {
  switch (b) {
    case PauliBasis::X: return 'x';
    case PauliBasis::Y: return 'y';
    case PauliBasis::Z: return 'z';
  }
  return '?';
}

inline PauliBasis parse_basis(char c) {
  switch (c) {
    case 'x': case 'X': return PauliBasis::X;
    case 'y': case 'Y': return PauliBasis::Y;
    case 'z': case 'Z': return PauliBasis::Z;
    default: throw std::invalid_argument(std::string("unknown Pauli basis '") + c + "'");
  }
}

// Single-qubit unitary U such that measuring U|psi> in the computational basis
// equals measuring |psi> in `basis`.
inline Matrix2 basis_rotation(PauliBasis basis) {
  const double r = 1.0 / std::sqrt(2.0);
  const cplx i(0.0, 1.0);
  Matrix2 u;
  switch (basis) {
    case PauliBasis::Z: u = Matrix2::Identity(); break;
    case PauliBasis::X: u << r, r, r, -r; break;
    case PauliBasis::Y: u << r, -i * r, r, i * r; break;
  }
  return u;
}

namespace pauli {
inline Matrix2 x() { Matrix2 m; m << 0, 1, 1, 0; return m; }
inline Matrix2 y() { Matrix2 m; m << 0, cplx(0, -1), cplx(0, 1), 0; return m; }
inline Matrix2 z() { Matrix2 m; m << 1, 0, 0, -1; return m; }
// Rydberg occupation |1><1|.
inline Matrix2 n() { Matrix2 m; m << 0, 0, 0, 1; return m; }
}  // namespace pauli

class MpsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Open-boundary MPS with site tensors shaped (left bond, 2, right bond).
class MatrixProductState {
 public:
  MatrixProductState() = default;

  MatrixProductState(std::vector<DenseTensor> sites, bool complex_valued,
                     std::optional<std::size_t> center = std::nullopt)
      : sites_(std::move(sites)), complex_valued_(complex_valued), center_(center) {
    validate();
  }

  static MatrixProductState product_state(const Bitstring& bits) {
    std::vector<DenseTensor> sites;
    for (std::size_t k = 0; k < bits.size(); ++k) {
      DenseTensor t({1, 2, 1});
      t.at({0, static_cast<std::size_t>(bits[k]), 0}) = 1.0;
      sites.push_back(std::move(t));
    }
    return MatrixProductState(std::move(sites), false, std::nullopt);
  }

  // Product of identical single-site states.
  static MatrixProductState product_state(std::size_t n, cplx up, cplx down) {
    std::vector<DenseTensor> sites;
    for (std::size_t k = 0; k < n; ++k) {
      DenseTensor t({1, 2, 1});
      t.at({0, 0, 0}) = up;
      t.at({0, 1, 0}) = down;
      sites.push_back(std::move(t));
    }
    const bool cplx_flag = up.imag() != 0.0 || down.imag() != 0.0;
    return MatrixProductState(std::move(sites), cplx_flag, std::nullopt);
  }

  // Uniform interior bond dimension; entries drawn uniform [lo, hi) per part.
  static MatrixProductState random(std::size_t n, std::size_t bond_dim, bool complex_valued,
                                   RandomStream& rng, double lo = 0.0, double hi = 1.0) {
    if (n < 1) throw MpsError("random MPS needs at least one site");
    std::vector<DenseTensor> sites;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t dl = k == 0 ? 1 : bond_dim;
      const std::size_t dr = k + 1 == n ? 1 : bond_dim;
      DenseTensor t({dl, 2, dr});
      for (auto& x : t.data()) {
        const double re = lo + (hi - lo) * rng.uniform();
        const double im = complex_valued ? lo + (hi - lo) * rng.uniform() : 0.0;
        x = cplx(re, im);
      }
      sites.push_back(std::move(t));
    }
    return MatrixProductState(std::move(sites), complex_valued, std::nullopt);
  }

  std::size_t size() const { return sites_.size(); }
  const DenseTensor& site(std::size_t k) const { return sites_.at(k); }
  const std::vector<DenseTensor>& sites() const { return sites_; }

  // Mutable access drops the canonical-center guarantee.
  DenseTensor& mutable_site(std::size_t k) {
    center_.reset();
    return sites_.at(k);
  }

  // Bond k sits to the left of site k; bonds 0 and N are the boundaries.
  std::size_t bond_dim(std::size_t bond) const {
    if (bond == sites_.size()) return sites_.back().dim(2);
    return sites_.at(bond).dim(0);
  }

  std::size_t max_bond_dim() const {
    std::size_t d = 1;
    for (const auto& s : sites_) d = std::max(d, s.dim(2));
    return d;
  }

  bool complex_valued() const { return complex_valued_; }
  void set_complex_valued(bool v) {
    complex_valued_ = v;
    validate();
  }
  std::optional<std::size_t> canonical_center() const { return center_; }

  // Dl x Dr matrix for physical index s.
  Matrix matrix(std::size_t k, int s) const {
    const DenseTensor& t = sites_[k];
    const auto dl = static_cast<Eigen::Index>(t.dim(0));
    const auto dr = static_cast<Eigen::Index>(t.dim(2));
    Matrix m(dl, dr);
    for (Eigen::Index a = 0; a < dl; ++a) {
      for (Eigen::Index b = 0; b < dr; ++b) m(a, b) = t[static_cast<std::size_t>((a * 2 + s) * dr + b)];
    }
    return m;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& s : sites_) n += s.size();
    return complex_valued_ ? 2 * n : n;
  }

  void validate() const {
    if (sites_.empty()) throw MpsError("MPS must have at least one site");
    for (std::size_t k = 0; k < sites_.size(); ++k) {
      const auto& t = sites_[k];
      if (t.rank() != 3) throw MpsError("site " + std::to_string(k) + " is not rank 3");
      if (t.dim(1) != 2) throw MpsError("site " + std::to_string(k) + " physical dimension is not 2");
      if (t.dim(0) < 1 || t.dim(2) < 1) throw MpsError("site " + std::to_string(k) + " has an empty bond");
      if (k > 0 && sites_[k - 1].dim(2) != t.dim(0)) {
        throw MpsError("bond mismatch between sites " + std::to_string(k - 1) + " and " + std::to_string(k));
      }
      if (!t.all_finite()) throw MpsError("site " + std::to_string(k) + " has non-finite entries");
      if (!complex_valued_) {
        for (const auto& x : t.data()) {
          if (x.imag() != 0.0) throw MpsError("real-valued MPS has imaginary entries at site " + std::to_string(k));
        }
      }
    }
    if (sites_.front().dim(0) != 1 || sites_.back().dim(2) != 1) {
      throw MpsError("boundary bonds must have dimension 1");
    }
    if (center_ && *center_ >= sites_.size()) throw MpsError("canonical center out of range");
  }

 private:
  std::vector<DenseTensor> sites_;
  bool complex_valued_ = false;
  std::optional<std::size_t> center_;
};

namespace detail {

inline DenseTensor site_from_matrices(const Matrix& m0, const Matrix& m1) {
  const auto dl = static_cast<std::size_t>(m0.rows());
  const auto dr = static_cast<std::size_t>(m0.cols());
  DenseTensor t({dl, 2, dr});
  for (std::size_t a = 0; a < dl; ++a) {
    for (std::size_t b = 0; b < dr; ++b) {
      t[(a * 2 + 0) * dr + b] = m0(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      t[(a * 2 + 1) * dr + b] = m1(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return t;
}

// env' = sum_{s,t} op(s,t) * conj(bra[s])^T env ket[t]
inline Matrix transfer(const Matrix& env, const MatrixProductState& bra, const MatrixProductState& ket,
                       std::size_t k, const Matrix2* op = nullptr) {
  const std::array<Matrix, 2> b{bra.matrix(k, 0), bra.matrix(k, 1)};
  const std::array<Matrix, 2> c{ket.matrix(k, 0), ket.matrix(k, 1)};
  Matrix out = Matrix::Zero(b[0].cols(), c[0].cols());
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 2; ++t) {
      const cplx w = op ? (*op)(s, t) : (s == t ? cplx(1.0) : cplx(0.0));
      if (w == cplx(0.0)) continue;
      out.noalias() += w * (b[static_cast<std::size_t>(s)].adjoint() * env * c[static_cast<std::size_t>(t)]);
    }
  }
  return out;
}

inline void check_bits(const MatrixProductState& psi, const Bitstring& v) {
  if (v.size() != psi.size()) {
    throw MpsError("bitstring length " + std::to_string(v.size()) + " does not match MPS size " +
                   std::to_string(psi.size()));
  }
}

}  // namespace detail

inline cplx amplitude(const MatrixProductState& psi, const Bitstring& v) {
  detail::check_bits(psi, v);
  Matrix row = psi.matrix(0, v[0]);
  for (std::size_t k = 1; k < psi.size(); ++k) row = row * psi.matrix(k, v[k]);
  return row(0, 0);
}

inline cplx inner_product(const MatrixProductState& a, const MatrixProductState& b) {
  if (a.size() != b.size()) {
    throw MpsError("inner_product: sizes differ (" + std::to_string(a.size()) + " vs " +
                   std::to_string(b.size()) + ")");
  }
  Matrix env = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < a.size(); ++k) env = detail::transfer(env, a, b, k);
  return env(0, 0);
}

inline double norm_squared(const MatrixProductState& psi) {
  const double z = inner_product(psi, psi).real();
  if (!(z > 0.0)) throw MpsError("norm_squared: state has zero norm");
  return z;
}

// <psi| prod_k O_k |psi> / <psi|psi> for operators on distinct sites.
inline cplx expectation(const MatrixProductState& psi, std::span<const std::pair<std::size_t, Matrix2>> ops) {
  std::vector<const Matrix2*> at(psi.size(), nullptr);
  for (const auto& [k, op] : ops) {
    if (k >= psi.size()) throw MpsError("expectation: site out of range");
    at[k] = &op;
  }
  Matrix env = Matrix::Ones(1, 1);
  Matrix norm = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < psi.size(); ++k) {
    env = detail::transfer(env, psi, psi, k, at[k]);
    norm = detail::transfer(norm, psi, psi, k);
  }
  if (!(norm(0, 0).real() > 0.0)) throw MpsError("expectation: state has zero norm");
  return env(0, 0) / norm(0, 0).real();
}

inline MatrixProductState rotate_basis(const MatrixProductState& psi, PauliBasis basis) {
  if (basis == PauliBasis::Z) return psi;
  const Matrix2 u = basis_rotation(basis);
  std::vector<DenseTensor> sites;
  sites.reserve(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const Matrix m0 = psi.matrix(k, 0);
    const Matrix m1 = psi.matrix(k, 1);
    sites.push_back(detail::site_from_matrices(u(0, 0) * m0 + u(0, 1) * m1, u(1, 0) * m0 + u(1, 1) * m1));
  }
  const bool complex_out = psi.complex_valued() || basis == PauliBasis::Y;
  return MatrixProductState(std::move(sites), complex_out, std::nullopt);
}

// Gauge transformation leaving sites left of `center` left-orthonormal and
// sites right of it right-orthonormal. Amplitudes are unchanged: the norm
// stays in the center tensor.
inline MatrixProductState canonicalize(const MatrixProductState& psi, std::size_t center) {
  if (center >= psi.size()) throw MpsError("canonicalize: center out of range");
  std::vector<DenseTensor> sites = psi.sites();
  const std::size_t n = sites.size();

  for (std::size_t k = 0; k < center; ++k) {
    const std::size_t dl = sites[k].dim(0);
    const Matrix m = sites[k].grouped(2);  // (dl*2) x dr
    Matrix q, r;
    if (m.rows() >= m.cols()) {
      auto qr = qr_decompose(m);
      q = std::move(qr.q);
      r = std::move(qr.r);
    } else {
      auto svd = svd_truncated(m, static_cast<std::size_t>(m.rows()), 0.0);
      q = svd.u;
      r = Eigen::Map<const RealVector>(svd.s.data(), static_cast<Eigen::Index>(svd.s.size())).cast<cplx>().asDiagonal() * svd.vh;
    }
    const auto nb = static_cast<std::size_t>(q.cols());
    sites[k] = DenseTensor({dl, 2, nb}, std::vector<cplx>(q.data(), q.data() + q.size()));
    const Matrix next = r * sites[k + 1].grouped(1);
    sites[k + 1] = DenseTensor({nb, 2, sites[k + 1].dim(2)}, std::vector<cplx>(next.data(), next.data() + next.size()));
  }
  for (std::size_t k = n - 1; k > center; --k) {
    const std::size_t dl = sites[k].dim(0), dr = sites[k].dim(2);
    const Matrix m = sites[k].grouped(1);  // dl x (2*dr)
    const Matrix mh = m.adjoint();
    Matrix q, r;
    if (mh.rows() >= mh.cols()) {
      auto qr = qr_decompose(mh);
      q = std::move(qr.q);
      r = std::move(qr.r);
    } else {
      auto svd = svd_truncated(mh, static_cast<std::size_t>(mh.rows()), 0.0);
      q = svd.u;
      r = Eigen::Map<const RealVector>(svd.s.data(), static_cast<Eigen::Index>(svd.s.size())).cast<cplx>().asDiagonal() * svd.vh;
    }
    // m = r^H q^H
    const Matrix qh = q.adjoint();
    const auto nb = static_cast<std::size_t>(qh.rows());
    sites[k] = DenseTensor({nb, 2, dr}, std::vector<cplx>(qh.data(), qh.data() + qh.size()));
    const Matrix prev = sites[k - 1].grouped(2) * r.adjoint();
    sites[k - 1] = DenseTensor({sites[k - 1].dim(0), 2, nb}, std::vector<cplx>(prev.data(), prev.data() + prev.size()));
    (void)dl;
  }
  bool any_imag = false;
  for (const auto& t : sites) {
    for (const auto& x : t.data()) any_imag = any_imag || x.imag() != 0.0;
  }
  return MatrixProductState(std::move(sites), psi.complex_valued() || any_imag, center);
}

struct NormalizedState {
  MatrixProductState state;  // canonical, unit norm
  double norm = 1.0;         // sqrt(<psi|psi>) of the input
};

inline NormalizedState normalize(const MatrixProductState& psi, std::size_t center = 0) {
  MatrixProductState c = canonicalize(psi, center);
  const double nrm = c.site(center).frobenius_norm();
  if (!(nrm > 0.0)) throw MpsError("normalize: state has zero norm");
  std::vector<DenseTensor> sites = c.sites();
  sites[center] *= cplx(1.0 / nrm);
  return {MatrixProductState(std::move(sites), c.complex_valued(), center), nrm};
}

// Checks left/right orthonormality around the recorded center.
inline bool is_canonical(const MatrixProductState& psi, double tol = 1e-10) {
  if (!psi.canonical_center()) return false;
  const std::size_t c = *psi.canonical_center();
  for (std::size_t k = 0; k < psi.size(); ++k) {
    if (k == c) continue;
    const Matrix m = k < c ? psi.site(k).grouped(2) : Matrix(psi.site(k).grouped(1).adjoint());
    const Matrix g = m.adjoint() * m;
    if ((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

inline std::vector<cplx> to_statevector(const MatrixProductState& psi) {
  if (psi.size() > 24) throw MpsError("to_statevector: too many sites");
  // rows: partial configurations (site 0 most significant), cols: right bond
  Matrix acc = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const Matrix m0 = psi.matrix(k, 0), m1 = psi.matrix(k, 1);
    Matrix next(acc.rows() * 2, m0.cols());
    for (Eigen::Index r = 0; r < acc.rows(); ++r) {
      next.row(2 * r) = acc.row(r) * m0;
      next.row(2 * r + 1) = acc.row(r) * m1;
    }
    acc = std::move(next);
  }
  return std::vector<cplx>(acc.data(), acc.data() + acc.size());
}

// Exact (up to `cutoff`/`max_rank`) MPS of a statevector in kron order.
inline MatrixProductState from_statevector(std::span<const cplx> vec, std::size_t n,
                                           std::size_t max_rank = 1U << 20, double cutoff = 1e-14) {
  if (vec.size() != (std::size_t{1} << n)) throw MpsError("from_statevector: length is not 2^n");
  std::vector<DenseTensor> sites;
  Matrix rest = Eigen::Map<const Matrix>(vec.data(), 1, static_cast<Eigen::Index>(vec.size()));
  std::size_t dl = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const Eigen::Index cols = rest.size() / static_cast<Eigen::Index>(dl * 2);
    Matrix m = Eigen::Map<const Matrix>(rest.data(), static_cast<Eigen::Index>(dl * 2), cols);
    auto svd = svd_truncated(m, max_rank, cutoff);
    const std::size_t dr = svd.s.size();
    sites.emplace_back(std::vector<std::size_t>{dl, 2, dr}, std::vector<cplx>(svd.u.data(), svd.u.data() + svd.u.size()));
    rest = Eigen::Map<const RealVector>(svd.s.data(), static_cast<Eigen::Index>(dr)).cast<cplx>().asDiagonal() * svd.vh;
    dl = dr;
  }
  sites.emplace_back(std::vector<std::size_t>{dl, 2, 1}, std::vector<cplx>(rest.data(), rest.data() + rest.size()));
  bool any_imag = false;
  for (const auto& t : sites) {
    for (const auto& x : t.data()) any_imag = any_imag || x.imag() != 0.0;
  }
  return MatrixProductState(std::move(sites), any_imag, std::nullopt);
}

// Perfect sampling: conditional site-by-site draws on a right-canonical copy.
inline std::vector<Bitstring> sample(const MatrixProductState& psi, std::size_t count, RandomStream& rng) {
  const MatrixProductState rc = normalize(psi, 0).state;
  const std::size_t n = rc.size();
  std::vector<std::array<Matrix, 2>> mats(n);
  for (std::size_t k = 0; k < n; ++k) mats[k] = {rc.matrix(k, 0), rc.matrix(k, 1)};

  std::vector<Bitstring> out;
  out.reserve(count);
  Eigen::Matrix<cplx, 1, Eigen::Dynamic> left, cand0, cand1;
  for (std::size_t shot = 0; shot < count; ++shot) {
    Bitstring v(n);
    left = Eigen::Matrix<cplx, 1, Eigen::Dynamic>::Ones(1);
    for (std::size_t k = 0; k < n; ++k) {
      cand0 = left * mats[k][0];
      cand1 = left * mats[k][1];
      const double p0 = cand0.squaredNorm();
      const double p1 = cand1.squaredNorm();
      const double total = p0 + p1;
      if (!(total > 0.0)) throw MpsError("sample: conditional probabilities vanished");
      const bool one = rng.uniform() * total >= p0;
      v.set(k, one);
      left = one ? cand1 / std::sqrt(p1) : cand0 / std::sqrt(p0);
    }
    out.push_back(v);
  }
  return out;
}

// Squared Schmidt coefficients across the bond left of site `cut`.
inline std::vector<double> entanglement_spectrum(const MatrixProductState& psi, std::size_t cut) {
  if (cut < 1 || cut >= psi.size()) {
    throw MpsError("entanglement_spectrum: cut " + std::to_string(cut) + " outside [1, " +
                   std::to_string(psi.size() - 1) + "]");
  }
  const MatrixProductState c = canonicalize(psi, cut - 1);
  const Matrix m = c.site(cut - 1).grouped(2);
  auto svd = svd_truncated(m, static_cast<std::size_t>(std::min(m.rows(), m.cols())), 0.0);
  double total = 0.0;
  std::vector<double> spec;
  for (double s : svd.s) {
    spec.push_back(s * s);
    total += s * s;
  }
  if (!(total > 0.0)) throw MpsError("entanglement_spectrum: state has zero norm");
  for (double& x : spec) x /= total;
  return spec;
}

inline double von_neumann_entropy(std::span<const double> spectrum) {
  double s = 0.0;
  for (double p : spectrum) {
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

inline double bipartite_entropy(const MatrixProductState& psi, std::size_t cut) {
  const auto spec = entanglement_spectrum(psi, cut);
  return von_neumann_entropy(spec);
}

// Binary checkpoint container.
//   16-byte magic, u32 version, u32 flags (bit 0: complex_valued), u64 N,
//   i64 canonical center (-1 if none), N x 3 u64 shapes, then every entry as
//   little-endian f64 (re, im), sites in order, row-major within a site.
inline constexpr std::array<char, 16> kMpsMagic{'B', 'E', 'B', 'M', '-', 'M', 'P', 'S',
                                                '\r', '\n', '\x1a', '\n', '\0', '\0', '\0', '\0'};
inline constexpr std::uint32_t kMpsFormatVersion = 1;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("MPS file truncated");
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

inline std::string serialize_mps(const MatrixProductState& psi) {
  std::string out(kMpsMagic.begin(), kMpsMagic.end());
  detail::put_le<std::uint32_t>(out, kMpsFormatVersion);
  detail::put_le<std::uint32_t>(out, psi.complex_valued() ? 1U : 0U);
  detail::put_le<std::uint64_t>(out, psi.size());
  const auto center = psi.canonical_center();
  detail::put_le<std::int64_t>(out, center ? static_cast<std::int64_t>(*center) : -1);
  for (const auto& t : psi.sites()) {
    for (std::size_t d : t.shape()) detail::put_le<std::uint64_t>(out, d);
  }
  for (const auto& t : psi.sites()) {
    for (const auto& x : t.data()) {
      detail::put_le<double>(out, x.real());
      detail::put_le<double>(out, x.imag());
    }
  }
  return out;
}

inline MatrixProductState deserialize_mps(std::string_view in) {
  if (in.size() < kMpsMagic.size() || !std::equal(kMpsMagic.begin(), kMpsMagic.end(), in.begin())) {
    throw IoError("not an MPS checkpoint (bad magic)");
  }
  std::size_t pos = kMpsMagic.size();
  const auto version = detail::get_le<std::uint32_t>(in, pos);
  if (version != kMpsFormatVersion) throw IoError("unsupported MPS format version " + std::to_string(version));
  const auto flags = detail::get_le<std::uint32_t>(in, pos);
  const auto n = detail::get_le<std::uint64_t>(in, pos);
  const auto center = detail::get_le<std::int64_t>(in, pos);
  if (n == 0 || n > Bitstring::kMaxSites) throw IoError("MPS file has invalid site count");
  std::vector<std::vector<std::size_t>> shapes(n);
  for (auto& s : shapes) {
    for (int k = 0; k < 3; ++k) s.push_back(static_cast<std::size_t>(detail::get_le<std::uint64_t>(in, pos)));
  }
  std::vector<DenseTensor> sites;
  for (auto& s : shapes) {
    const std::size_t count = s[0] * s[1] * s[2];
    if (count > (in.size() - pos) / 16) throw IoError("MPS file truncated");
    std::vector<cplx> data(count);
    for (auto& x : data) {
      const double re = detail::get_le<double>(in, pos);
      const double im = detail::get_le<double>(in, pos);
      x = cplx(re, im);
    }
    sites.emplace_back(s, std::move(data));
  }
  if (pos != in.size()) throw IoError("MPS file has trailing bytes");
  std::optional<std::size_t> c;
  if (center >= 0) c = static_cast<std::size_t>(center);
  MatrixProductState psi(std::move(sites), (flags & 1U) != 0, c);
  // The recorded gauge flag is kept only if the stored tensors still satisfy it.
  if (c && !is_canonical(psi, 1e-8)) return MatrixProductState(psi.sites(), psi.complex_valued(), std::nullopt);
  return psi;
}

inline void write_mps(const MatrixProductState& psi, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_mps(psi));
}

inline MatrixProductState read_mps(const std::filesystem::path& path) { return deserialize_mps(read_file(path)); }

}  // namespace bebm

#endif  // BEBM_MPS_HPP
