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


#ifndef BEBM_DATASET_HPP
#define BEBM_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bebm/bitstring.hpp"
#include "bebm/io.hpp"
#include "bebm/mps.hpp"
#include "bebm/observables.hpp"
#include "bebm/random.hpp"

namespace bebm {

inline constexpr std::size_t kDefaultShots = 30000;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MeasurementDataset {
  std::size_t n_sites = 0;
  PauliBasis basis = PauliBasis::Z;
  std::vector<Bitstring> shots;
  std::uint64_t seed = 0;

  void validate() const {
    if (shots.empty()) throw DatasetError("dataset has no shots");
    for (std::size_t i = 0; i < shots.size(); ++i) {
      if (shots[i].size() != n_sites) {
        throw DatasetError("shot " + std::to_string(i) + " has " + std::to_string(shots[i].size()) +
                           " sites, expected " + std::to_string(n_sites));
      }
    }
  }
  bool operator==(const MeasurementDataset&) const = default;
};

inline MeasurementDataset simulate_measurements(const MatrixProductState& psi, PauliBasis basis,
                                                std::size_t shots = kDefaultShots, std::uint64_t seed = 0) {
  if (shots < 1) throw std::invalid_argument("simulate_measurements: need at least one shot");
  RandomStream rng(derive_seed(seed, "measure", static_cast<std::uint64_t>(basis_char(basis))));
  MeasurementDataset d;
  d.n_sites = psi.size();
  d.basis = basis;
  d.seed = seed;
  d.shots = sample(rotate_basis(psi, basis), shots, rng);
  return d;
}

// Multi-basis training input: |T_b| must agree across bases.
inline void validate_training_sets(std::span<const MeasurementDataset> sets) {
  if (sets.empty()) throw DatasetError("no training datasets");
  for (const auto& d : sets) d.validate();
  for (std::size_t i = 1; i < sets.size(); ++i) {
    if (sets[i].shots.size() != sets[0].shots.size()) {
      throw DatasetError(std::string("dataset sizes differ across bases: ") + basis_char(sets[0].basis) + "=" +
                         std::to_string(sets[0].shots.size()) + ", " + basis_char(sets[i].basis) + "=" +
                         std::to_string(sets[i].shots.size()));
    }
    if (sets[i].n_sites != sets[0].n_sites) throw DatasetError("datasets have different site counts");
    for (std::size_t j = 0; j < i; ++j) {
      if (sets[i].basis == sets[j].basis) throw DatasetError(std::string("duplicate basis ") + basis_char(sets[i].basis));
    }
  }
}

struct EmpiricalDistribution {
  std::size_t n_sites = 0;
  std::map<Bitstring, double> probabilities;

  std::size_t support_size() const { return probabilities.size(); }
  double operator()(const Bitstring& v) const {
    const auto it = probabilities.find(v);
    return it == probabilities.end() ? 0.0 : it->second;
  }
};

inline EmpiricalDistribution empirical_distribution(std::span<const Bitstring> shots, std::size_t n_sites) {
  if (shots.empty()) throw DatasetError("empirical_distribution: no shots");
  std::map<Bitstring, std::size_t> counts;
  for (const auto& s : shots) ++counts[s];
  EmpiricalDistribution p;
  p.n_sites = n_sites;
  const double total = static_cast<double>(shots.size());
  for (const auto& [v, c] : counts) p.probabilities.emplace(v, static_cast<double>(c) / total);
  return p;
}

inline EmpiricalDistribution empirical_distribution(const MeasurementDataset& d) {
  return empirical_distribution(d.shots, d.n_sites);
}

inline double shannon_entropy(const EmpiricalDistribution& p) {
  double s = 0.0;
  for (const auto& [v, q] : p.probabilities) {
    if (q > 0.0) s -= q * std::log(q);
  }
  return s;
}

inline double renyi_entropy(const EmpiricalDistribution& p, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("renyi_entropy: alpha must be positive");
  if (alpha == 1.0) return shannon_entropy(p);
  double sum = 0.0;
  for (const auto& [v, q] : p.probabilities) sum += std::pow(q, alpha);
  return std::log(sum) / (1.0 - alpha);
}

inline double total_variation(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
  double tv = 0.0;
  for (const auto& [v, a] : p.probabilities) tv += std::abs(a - q(v));
  for (const auto& [v, b] : q.probabilities) {
    if (!p.probabilities.contains(v)) tv += b;
  }
  return 0.5 * tv;
}

// Exact Born distribution (enumerates 2^N configurations).
inline EmpiricalDistribution born_distribution(const MatrixProductState& psi) {
  if (psi.size() > 24) throw std::invalid_argument("born_distribution: chain too long to enumerate");
  const auto vec = to_statevector(psi);
  double total = 0.0;
  for (const auto& a : vec) total += std::norm(a);
  EmpiricalDistribution p;
  p.n_sites = psi.size();
  for (std::size_t i = 0; i < vec.size(); ++i) {
    const double q = std::norm(vec[i]) / total;
    if (q > 0.0) p.probabilities.emplace(Bitstring::from_index(psi.size(), i), q);
  }
  return p;
}

// ---- text format ---------------------------------------------------------

inline std::string format_dataset(const MeasurementDataset& d) {
  d.validate();
  std::string out = "# n_sites=" + std::to_string(d.n_sites) + " basis=" + basis_char(d.basis) +
                    " seed=" + std::to_string(d.seed) + "\n";
  out.reserve(out.size() + d.shots.size() * (d.n_sites + 1));
  for (const auto& s : d.shots) {
    out += s.to_string();
    out += '\n';
  }
  return out;
}

inline MeasurementDataset parse_dataset(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };
  auto fail = [&](const std::string& what) -> DatasetError {
    return DatasetError("line " + std::to_string(line_no) + ": " + what);
  };

  const auto header = next_line();
  if (!header) throw DatasetError("line 1: empty dataset file");
  if (!header->starts_with("# ")) throw fail("missing '# ' header");
  MeasurementDataset d;
  bool have_n = false, have_b = false, have_s = false;
  std::istringstream fields{std::string(header->substr(2))};
  std::string field;
  while (fields >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw fail("malformed header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    auto parse_uint = [&](std::uint64_t& out) {
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
      if (ec != std::errc() || ptr != value.data() + value.size()) throw fail("invalid value for " + key + ": '" + value + "'");
    };
    if (key == "n_sites") {
      std::uint64_t v = 0;
      parse_uint(v);
      if (v < 1 || v > Bitstring::kMaxSites) throw fail("n_sites out of range: " + value);
      d.n_sites = static_cast<std::size_t>(v);
      have_n = true;
    } else if (key == "basis") {
      if (value.size() != 1) throw fail("invalid basis '" + value + "'");
      try {
        d.basis = parse_basis(value[0]);
      } catch (const std::exception&) {
        throw fail("invalid basis '" + value + "'");
      }
      have_b = true;
    } else if (key == "seed") {
      parse_uint(d.seed);
      have_s = true;
    } else {
      throw fail("unknown header field '" + key + "'");
    }
  }
  if (!have_n || !have_b || !have_s) throw fail("header must define n_sites, basis and seed");

  while (const auto line = next_line()) {
    if (line->empty() && pos >= text.size()) break;
    if (line->size() != d.n_sites) {
      throw fail("shot has " + std::to_string(line->size()) + " characters, expected " + std::to_string(d.n_sites));
    }
    try {
      d.shots.push_back(Bitstring::parse(*line));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  if (d.shots.empty()) throw DatasetError("line " + std::to_string(line_no) + ": dataset has no shots");
  return d;
}

inline void write_dataset(const MeasurementDataset& d, const std::filesystem::path& path) {
  write_file_atomic(path, format_dataset(d));
}

inline MeasurementDataset read_dataset(const std::filesystem::path& path) {
  try {
    return parse_dataset(read_file(path));
  } catch (const DatasetError& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

// ---- sample-size convergence ---------------------------------------------

enum class ConvergenceObservable { Magnetization, Renyi1, Renyi2 };

inline const char* observable_name(ConvergenceObservable o) {
  switch (o) {
    case ConvergenceObservable::Magnetization: return "magnetization";
    case ConvergenceObservable::Renyi1: return "renyi1";
    case ConvergenceObservable::Renyi2: return "renyi2";
  }
  return "?";
}

struct ConvergenceOptions {
  std::size_t total = 100000;
  std::size_t checkpoint = 1000;
  std::size_t trajectories = 50;
  double tolerance = 0.01;
  std::uint64_t seed = 0;
};

struct ConvergenceTrace {
  ConvergenceObservable observable;
  double exact = 0.0;
  std::vector<std::vector<double>> values;  // [trajectory][checkpoint]
  std::optional<std::size_t> converged_at;  // shot count
};

struct ConvergenceReport {
  std::vector<std::size_t> checkpoints;
  std::vector<ConvergenceTrace> traces;
};

namespace detail {

inline double sampled_observable(ConvergenceObservable o, const std::map<Bitstring, std::size_t>& counts,
                                 std::size_t shots, std::size_t ones, std::size_t n) {
  const double total = static_cast<double>(shots);
  if (o == ConvergenceObservable::Magnetization) {
    return 0.5 * (1.0 - 2.0 * static_cast<double>(ones) / (total * static_cast<double>(n)));
  }
  double acc = 0.0;
  for (const auto& [v, c] : counts) {
    const double q = static_cast<double>(c) / total;
    acc += o == ConvergenceObservable::Renyi1 ? -q * std::log(q) : q * q;
  }
  return o == ConvergenceObservable::Renyi1 ? acc : -std::log(acc);
}

inline double exact_observable(ConvergenceObservable o, const MatrixProductState& psi) {
  if (o == ConvergenceObservable::Magnetization) return magnetization(psi);
  const auto p = born_distribution(psi);
  return renyi_entropy(p, o == ConvergenceObservable::Renyi1 ? 1.0 : 2.0);
}

}  // namespace detail

// Cumulative Z-basis estimates along independent sampling trajectories.
// converged_at is the first checkpoint after which every trajectory stays
// within +-tolerance (relative) of the exact value.
inline ConvergenceReport monte_carlo_convergence(const MatrixProductState& psi,
                                                 std::span<const ConvergenceObservable> observables,
                                                 const ConvergenceOptions& opt) {
  if (opt.checkpoint == 0 || opt.total % opt.checkpoint != 0) {
    throw std::invalid_argument("monte_carlo_convergence: checkpoint must divide total");
  }
  if (opt.trajectories == 0) throw std::invalid_argument("monte_carlo_convergence: need at least one trajectory");
  const std::size_t n = psi.size();
  const std::size_t m = opt.total / opt.checkpoint;
  ConvergenceReport rep;
  for (std::size_t c = 1; c <= m; ++c) rep.checkpoints.push_back(c * opt.checkpoint);
  for (auto o : observables) {
    ConvergenceTrace t;
    t.observable = o;
    t.exact = detail::exact_observable(o, psi);
    t.values.assign(opt.trajectories, std::vector<double>(m));
    rep.traces.push_back(std::move(t));
  }
  for (std::size_t tr = 0; tr < opt.trajectories; ++tr) {
    RandomStream rng(derive_seed(opt.seed, "mc-trajectory", tr));
    const auto shots = sample(psi, opt.total, rng);
    std::map<Bitstring, std::size_t> counts;
    std::size_t ones = 0;
    for (std::size_t c = 0; c < m; ++c) {
      for (std::size_t i = c * opt.checkpoint; i < (c + 1) * opt.checkpoint; ++i) {
        ++counts[shots[i]];
        ones += shots[i].popcount();
      }
      for (auto& t : rep.traces) t.values[tr][c] = detail::sampled_observable(t.observable, counts, (c + 1) * opt.checkpoint, ones, n);
    }
  }
  for (auto& t : rep.traces) {
    const double band = opt.tolerance * std::max(std::abs(t.exact), 1e-12);
    std::optional<std::size_t> first;
    for (std::size_t c = m; c-- > 0;) {
      bool ok = true;
      for (const auto& traj : t.values) ok = ok && std::abs(traj[c] - t.exact) <= band;
      if (!ok) break;
      first = c;
    }
    if (first) t.converged_at = rep.checkpoints[*first];
  }
  return rep;
}

inline std::string convergence_csv(const ConvergenceReport& rep) {
  std::string out = "trajectory,checkpoint,observable,value\n";
  for (const auto& t : rep.traces) {
    for (std::size_t tr = 0; tr < t.values.size(); ++tr) {
      for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
        out += std::to_string(tr) + "," + std::to_string(rep.checkpoints[c]) + "," + observable_name(t.observable) +
               "," + format_double(t.values[tr][c]) + "\n";
      }
    }
  }
  return out;
}

}  // namespace bebm

#endif  // BEBM_DATASET_HPP
