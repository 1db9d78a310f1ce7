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

#ifndef BEBM_OBSERVABLES_HPP
#define BEBM_OBSERVABLES_HPP

#include <span>
#include <vector>

#include "bebm/bitstring.hpp"
#include "bebm/mps.hpp"

namespace bebm {

// Exact one- and two-site Rydberg density expectations from an MPS.
struct DensityTable {
  std::vector<double> n;                 // <n_i>
  std::vector<std::vector<double>> nn;   // <n_i n_j>, i < j (upper triangle filled)
};

inline DensityTable density_table(const MatrixProductState& psi) {
  const std::size_t n = psi.size();
  const MatrixProductState c = normalize(psi, 0).state;
  const Matrix2 occ = pauli::n();
  // right environments with identity: with center 0 and right-orthonormal sites,
  // the right environment of any site is the identity.
  std::vector<Matrix> left(n + 1);
  left[0] = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < n; ++k) left[k + 1] = detail::transfer(left[k], c, c, k);

  DensityTable t;
  t.n.assign(n, 0.0);
  t.nn.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    Matrix env = detail::transfer(left[i], c, c, i, &occ);
    t.n[i] = env.trace().real();
    for (std::size_t j = i + 1; j < n; ++j) {
      t.nn[i][j] = detail::transfer(env, c, c, j, &occ).trace().real();
      env = detail::transfer(env, c, c, j);
    }
  }
  return t;
}

// G(r) = (1/(N-r)) sum_i [<n_i n_{i+r}> - <n_i><n_{i+r}>].
inline double correlation_function(const DensityTable& t, std::size_t r) {
  const std::size_t n = t.n.size();
  if (r < 1 || r >= n) {
    throw std::invalid_argument("correlation_function: distance " + std::to_string(r) + " outside [1, " +
                                std::to_string(n - 1) + "]");
  }
  double g = 0.0;
  for (std::size_t i = 0; i + r < n; ++i) g += t.nn[i][i + r] - t.n[i] * t.n[i + r];
  return g / static_cast<double>(n - r);
}

inline double correlation_function(const MatrixProductState& psi, std::size_t r) {
  if (r < 1 || r >= psi.size()) {
    throw std::invalid_argument("correlation_function: distance " + std::to_string(r) + " outside [1, " +
                                std::to_string(psi.size() - 1) + "]");
  }
  return correlation_function(density_table(psi), r);
}

inline std::vector<double> correlation_curve(const MatrixProductState& psi) {
  const DensityTable t = density_table(psi);
  std::vector<double> g;
  for (std::size_t r = 1; r < psi.size(); ++r) g.push_back(correlation_function(t, r));
  return g;
}

// Same G(r) estimated from z-basis shots.
inline std::vector<double> sampled_correlation_curve(std::span<const Bitstring> shots) {
  if (shots.empty()) throw std::invalid_argument("sampled_correlation_curve: no shots");
  const std::size_t n = shots.front().size();
  DensityTable t;
  t.n.assign(n, 0.0);
  t.nn.assign(n, std::vector<double>(n, 0.0));
  for (const auto& s : shots) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!s[i]) continue;
      t.n[i] += 1.0;
      for (std::size_t j = i + 1; j < n; ++j) t.nn[i][j] += s[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(shots.size());
  for (std::size_t i = 0; i < n; ++i) {
    t.n[i] *= inv;
    for (std::size_t j = i + 1; j < n; ++j) t.nn[i][j] *= inv;
  }
  std::vector<double> g;
  for (std::size_t r = 1; r < n; ++r) g.push_back(correlation_function(t, r));
  return g;
}

// M = (1/N) sum_i <S_z^i> with S_z = sigma_z / 2; |0> (ground) has S_z = +1/2.
inline double magnetization(const MatrixProductState& psi) {
  const DensityTable t = density_table(psi);
  double m = 0.0;
  for (double ni : t.n) m += 0.5 * (1.0 - 2.0 * ni);
  return m / static_cast<double>(psi.size());
}

}  // namespace bebm

#endif  // BEBM_OBSERVABLES_HPP
