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


#ifndef BEBM_METRICS_HPP
#define BEBM_METRICS_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bebm/dataset.hpp"
#include "bebm/mps.hpp"
#include "bebm/observables.hpp"
#include "bebm/training.hpp"

namespace bebm {

// Squared Bhattacharyya coefficient.
inline double classical_fidelity(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
  if (p.n_sites != q.n_sites) {
    throw std::invalid_argument("classical_fidelity: site counts differ (" + std::to_string(p.n_sites) + " vs " +
                                std::to_string(q.n_sites) + ")");
  }
  double bc = 0.0;
  auto it = q.probabilities.begin();
  for (const auto& [v, a] : p.probabilities) {  // both maps are ordered
    while (it != q.probabilities.end() && it->first < v) ++it;
    if (it != q.probabilities.end() && it->first == v) bc += std::sqrt(a * it->second);
  }
  return bc * bc;
}

inline double quantum_fidelity(const MatrixProductState& a, const MatrixProductState& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("quantum_fidelity: site counts differ (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  return state_fidelity(a, b);
}

inline constexpr std::size_t kDefaultModelShots = 1000000;

struct MetricsReport {
  std::array<std::optional<double>, 3> classical;  // indexed x, y, z
  double quantum_fidelity = 0.0;
  std::optional<double> loss_minus_entropy;
  std::vector<double> correlations;                // G(r), r = 1..N-1
  std::vector<double> reference_correlations;
  double magnetization = 0.0;
  double reference_magnetization = 0.0;
  std::size_t shots = 0;        // reference-side samples per basis
  std::size_t model_shots = 0;  // model-side samples per basis
  std::uint64_t seed = 0;
};

inline std::size_t basis_slot(PauliBasis b) {
  switch (b) {
    case PauliBasis::X: return 0;
    case PauliBasis::Y: return 1;
    case PauliBasis::Z: return 2;
  }
  return 2;
}

// Classical fidelities compare `shots` reference samples against
// `model_shots` samples of the model in each basis. Reference samples use
// `seed` exactly as simulate_measurements does, so passing the training
// seed compares against the training data itself.
inline MetricsReport evaluate(const MatrixProductState& model, const MatrixProductState& reference,
                              std::size_t shots = kDefaultShots, std::uint64_t seed = 0,
                              std::size_t model_shots = kDefaultModelShots, bool sampled_correlations = false) {
  if (model.size() != reference.size()) {
    throw std::invalid_argument("evaluate: model has " + std::to_string(model.size()) + " sites, reference has " +
                                std::to_string(reference.size()));
  }
  MetricsReport r;
  r.shots = shots;
  r.model_shots = model_shots;
  r.seed = seed;
  for (PauliBasis b : {PauliBasis::X, PauliBasis::Y, PauliBasis::Z}) {
    const auto dm = simulate_measurements(model, b, model_shots, derive_seed(seed, "evaluate-model"));
    const auto dr = simulate_measurements(reference, b, shots, seed);
    r.classical[basis_slot(b)] = classical_fidelity(empirical_distribution(dm), empirical_distribution(dr));
    if (sampled_correlations && b == PauliBasis::Z) {
      r.correlations = sampled_correlation_curve(dm.shots);
      r.reference_correlations = sampled_correlation_curve(dr.shots);
    }
  }
  r.quantum_fidelity = quantum_fidelity(reference, model);
  if (!sampled_correlations) {
    r.correlations = correlation_curve(model);
    r.reference_correlations = correlation_curve(reference);
  }
  r.magnetization = magnetization(model);
  r.reference_magnetization = magnetization(reference);
  return r;
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  const char* names[3] = {"C_x", "C_y", "C_z"};
  for (std::size_t i = 0; i < 3; ++i) {
    j[names[i]] = r.classical[i] ? nlohmann::json(*r.classical[i]) : nlohmann::json(nullptr);
  }
  j["F"] = r.quantum_fidelity;
  j["loss_minus_entropy"] = r.loss_minus_entropy ? nlohmann::json(*r.loss_minus_entropy) : nlohmann::json(nullptr);
  j["correlations"] = r.correlations;
  j["reference_correlations"] = r.reference_correlations;
  j["magnetization"] = r.magnetization;
  j["reference_magnetization"] = r.reference_magnetization;
  j["shots"] = r.shots;
  j["model_shots"] = r.model_shots;
  j["seed"] = r.seed;
  return j;
}

inline std::string bases_label(std::span<const PauliBasis> bases) {
  std::string s;
  for (auto b : bases) s += basis_char(b);
  return s;
}

inline std::string table_header() { return "basis,field,C_x,C_y,C_z,loss_minus_entropy,F\n"; }

inline std::string table_row(const std::string& bases, bool complex_valued, const MetricsReport& r) {
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  return bases + "," + (complex_valued ? "C" : "R") + "," + opt(r.classical[0]) + "," + opt(r.classical[1]) + "," +
         opt(r.classical[2]) + "," + opt(r.loss_minus_entropy) + "," + format_double(r.quantum_fidelity) + "\n";
}

}  // namespace bebm

#endif  // BEBM_METRICS_HPP
