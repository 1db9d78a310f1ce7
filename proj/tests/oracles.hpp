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


#ifndef BEBM_TESTS_ORACLES_HPP
#define BEBM_TESTS_ORACLES_HPP

// Brute-force reference implementations shared by the unit tests. They use
// plain loops and Kronecker products and do not call the library routines
// they are compared against.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "bebm/bitstring.hpp"
#include "bebm/mps.hpp"
#include "bebm/random.hpp"

namespace oracle {

using bebm::cplx;
using DenseMat = Eigen::MatrixXcd;
using DenseVec = Eigen::VectorXcd;

// Amplitude by multiplying site matrices with explicit index loops.
inline cplx brute_amplitude(const bebm::MatrixProductState& psi, const bebm::Bitstring& v) {
  std::vector<cplx> row{1.0};
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const auto& t = psi.site(k);
    const std::size_t dl = t.dim(0), dr = t.dim(2);
    std::vector<cplx> next(dr, 0.0);
    for (std::size_t a = 0; a < dl; ++a) {
      for (std::size_t b = 0; b < dr; ++b) next[b] += row[a] * t[(a * 2 + static_cast<std::size_t>(v[k])) * dr + b];
    }
    row = next;
  }
  return row[0];
}

// Kron-ordered statevector (site 0 most significant).
inline DenseVec statevector(const bebm::MatrixProductState& psi) {
  const std::size_t n = psi.size();
  DenseVec out(Eigen::Index{1} << n);
  for (std::uint64_t i = 0; i < (std::uint64_t{1} << n); ++i) {
    out(static_cast<Eigen::Index>(i)) = brute_amplitude(psi, bebm::Bitstring::from_index(n, i));
  }
  return out;
}

inline DenseMat kron(const DenseMat& a, const DenseMat& b) {
  DenseMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

// Operator `op` on `site` of an n-site chain, identity elsewhere.
inline DenseMat site_operator(const DenseMat& op, std::size_t site, std::size_t n) {
  DenseMat out = DenseMat::Identity(1, 1);
  for (std::size_t k = 0; k < n; ++k) out = kron(out, k == site ? op : DenseMat::Identity(2, 2));
  return out;
}

inline DenseMat pauli_x() { DenseMat m(2, 2); m << 0, 1, 1, 0; return m; }
inline DenseMat pauli_y() { DenseMat m(2, 2); m << 0, cplx(0, -1), cplx(0, 1), 0; return m; }
inline DenseMat pauli_z() { DenseMat m(2, 2); m << 1, 0, 0, -1; return m; }
inline DenseMat occupation() { DenseMat m(2, 2); m << 0, 0, 0, 1; return m; }

inline DenseMat gate(bebm::PauliBasis b) {
  const double r = 1.0 / std::sqrt(2.0);
  DenseMat m(2, 2);
  switch (b) {
    case bebm::PauliBasis::X: m << r, r, r, -r; break;
    case bebm::PauliBasis::Y: m << r, cplx(0, -r), r, cplx(0, r); break;
    case bebm::PauliBasis::Z: m << 1, 0, 0, 1; break;
  }
  return m;
}

// U applied to every site of a statevector.
inline DenseVec rotate_all(const DenseVec& v, bebm::PauliBasis b, std::size_t n) {
  DenseMat u = DenseMat::Identity(1, 1);
  for (std::size_t k = 0; k < n; ++k) u = kron(u, gate(b));
  return u * v;
}

// Reduced density matrix of the first `cut` sites.
inline DenseMat reduced_density(const DenseVec& v, std::size_t cut, std::size_t n) {
  const Eigen::Index da = Eigen::Index{1} << cut, db = Eigen::Index{1} << (n - cut);
  DenseMat m(da, db);
  for (Eigen::Index i = 0; i < da; ++i) {
    for (Eigen::Index j = 0; j < db; ++j) m(i, j) = v(i * db + j);
  }
  return m * m.adjoint() / v.squaredNorm();
}

inline double entropy_of(const DenseMat& rho) {
  Eigen::SelfAdjointEigenSolver<DenseMat> es(rho);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double p = es.eigenvalues()(i);
    if (p > 1e-300) s -= p * std::log(p);
  }
  return s;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b))); }
inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b))); }

inline bebm::MatrixProductState random_mps(std::size_t n, std::size_t d, bool complex_valued, std::uint64_t seed) {
  bebm::RandomStream rng(seed);
  return bebm::MatrixProductState::random(n, d, complex_valued, rng, -1.0, 1.0);
}

// Regularized upper incomplete gamma Q(a, x) via series/continued fraction.
inline double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double sum = 1.0 / a, term = sum;
    for (int k = 1; k < 10000; ++k) {
      term *= x / (a + k);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - lg) * h;
}

// Pearson chi-square p-value of observed counts against expected
// probabilities; cells with expectation below 5 are pooled.
inline double chi_square_p(const std::vector<double>& probs, const std::vector<std::size_t>& counts, std::size_t total) {
  double stat = 0.0, pooled_e = 0.0, pooled_o = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * static_cast<double>(total);
    if (e < 5.0) {
      pooled_e += e;
      pooled_o += static_cast<double>(counts[i]);
      continue;
    }
    stat += (counts[i] - e) * (counts[i] - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  }
  return gamma_q(0.5 * (cells - 1), 0.5 * stat);
}

}  // namespace oracle

#endif  // BEBM_TESTS_ORACLES_HPP
