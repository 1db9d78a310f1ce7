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


#ifndef BEBM_EXPERIMENTS_HPP
#define BEBM_EXPERIMENTS_HPP

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bebm/dataset.hpp"
#include "bebm/groundtruth.hpp"
#include "bebm/io.hpp"
#include "bebm/metrics.hpp"
#include "bebm/models.hpp"
#include "bebm/plots.hpp"
#include "bebm/training.hpp"

namespace bebm {

using json = nlohmann::json;

inline constexpr int kRecipeSchemaVersion = 1;
inline constexpr const char* kOutputRootEnv = "BEBM_OUTPUT_ROOT";

// Invalid recipe or command-line input (exit code 2).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- recipe --------------------------------------------------------------

enum class HamiltonianKind { Rydberg, XY };

struct HamiltonianSpec {
  HamiltonianKind kind = HamiltonianKind::Rydberg;
  TransverseAxis axis = TransverseAxis::X;
  std::size_t truncation_range = 5;
  double coupling = 1.0;                 // XY only
  bool si_units = false;                 // Rydberg: point given in SI units
  double omega_rad_per_s = kReferenceOmega;
  double c6_m6_per_s = kReferenceC6;
};

// Rydberg: line = R_b/a, grid = Delta/Omega. XY: line = gamma, grid = h.
struct PointSpec {
  double line = 0.0;
  double grid = 0.0;
};

struct GridSpec {
  std::vector<double> values;
};

struct ModelGrid {
  std::vector<std::vector<PauliBasis>> bases;
  std::vector<bool> complex_fields;
  std::vector<std::size_t> bond_dims{4};
};

struct ScalingPointSpec {
  std::string label;
  std::string select;  // "critical", "overlap", or "explicit"
  double overlap = 0.75;
  std::map<std::size_t, double> explicit_grid;  // n_sites -> grid value
};

struct ScalingSpec {
  std::vector<std::size_t> n_sites;
  std::vector<std::size_t> total_shots;  // |T| summed over bases
  std::size_t trials = 10;
  std::size_t target_steps = 3000;
  std::vector<PauliBasis> bases{PauliBasis::X, PauliBasis::Z};
  std::size_t bond_dim = 4;
  double line = 1.5;
  GridSpec grid;  // sweep used to select points
  std::vector<ScalingPointSpec> points;
};

struct Recipe {
  json source;
  std::uint64_t seed = 1;
  std::string output;
  HamiltonianSpec hamiltonian;
  std::size_t n_sites = 13;
  std::optional<PointSpec> point;
  std::vector<double> lines;  // sweep lines
  GridSpec grid;              // sweep grid
  std::size_t order = 2;      // ordered-pattern period for sweep overlaps
  bool compute_gap = true;
  std::vector<std::size_t> phase_orders{2, 3, 4};
  DmrgOptions dmrg;
  std::size_t ed_gap_limit = 14;
  std::size_t shots = kDefaultShots;
  std::size_t model_shots = kDefaultModelShots;
  ModelGrid models;
  TrainConfig training;
  std::size_t trials = 1;
  std::optional<ScalingSpec> scaling;
};

namespace detail {

inline const json* find(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  try {
    return v->get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("recipe field '") + key + "' has the wrong type");
  }
}

inline std::vector<PauliBasis> parse_bases(const std::string& s) {
  if (s.empty()) throw UsageError("basis subset must be non-empty");
  std::vector<PauliBasis> out;
  for (char c : s) {
    try {
      out.push_back(parse_basis(c));
    } catch (const std::exception&) {
      throw UsageError("invalid basis '" + std::string(1, c) + "' in '" + s + "'");
    }
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      if (out[i] == out.back()) throw UsageError("repeated basis in '" + s + "'");
    }
  }
  return out;
}

inline GridSpec parse_grid(const json& j, const char* what) {
  GridSpec g;
  if (j.is_array()) {
    for (const auto& v : j) g.values.push_back(v.get<double>());
  } else if (j.is_object() && j.contains("values")) {
    for (const auto& v : j["values"]) g.values.push_back(v.get<double>());
  } else if (j.is_object()) {
    const double start = get<double>(j, "start", 0.0), stop = get<double>(j, "stop", 0.0), step = get<double>(j, "step", 0.0);
    if (!(step > 0.0)) throw UsageError(std::string(what) + ": grid step must be positive");
    if (stop < start) throw UsageError(std::string(what) + ": grid stop below start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) g.values.push_back(start + static_cast<double>(i) * step);
  } else {
    throw UsageError(std::string(what) + ": grid must be a list or {start, stop, step}");
  }
  if (g.values.empty()) throw UsageError(std::string(what) + ": grid is empty");
  for (std::size_t i = 1; i < g.values.size(); ++i) {
    if (!(g.values[i] > g.values[i - 1])) throw UsageError(std::string(what) + ": grid must be strictly increasing");
  }
  return g;
}

inline void parse_training(const json& j, TrainConfig& t) {
  t.adam.learning_rate = get<double>(j, "learning_rate", t.adam.learning_rate);
  t.adam.beta1 = get<double>(j, "beta1", t.adam.beta1);
  t.adam.beta2 = get<double>(j, "beta2", t.adam.beta2);
  t.adam.epsilon = get<double>(j, "epsilon", t.adam.epsilon);
  t.batch_size = get<std::size_t>(j, "batch_size", t.batch_size);
  t.epochs = get<std::size_t>(j, "epochs", t.epochs);
  t.plateau_window = get<std::size_t>(j, "plateau_window", t.plateau_window);
  t.plateau_tolerance = get<double>(j, "plateau_tolerance", t.plateau_tolerance);
  if (const json* c = find(j, "gradient_clip")) t.gradient_clip = c->get<double>();
  if (const json* c = find(j, "spectrum_cut")) t.spectrum_cut = c->get<std::size_t>();
  t.spectrum_top = get<std::size_t>(j, "spectrum_top", t.spectrum_top);
  if (!(t.adam.learning_rate >= 0.0)) throw UsageError("training.learning_rate must be >= 0");
  if (t.batch_size < 1) throw UsageError("training.batch_size must be >= 1");
  if (t.epochs < 1) throw UsageError("training.epochs must be >= 1");
}

}  // namespace detail

inline Recipe parse_recipe(const json& j) {
  if (!j.is_object()) throw UsageError("recipe must be a JSON object");
  Recipe r;
  r.source = j;
  const int version = detail::get<int>(j, "schema_version", -1);
  if (version != kRecipeSchemaVersion) {
    throw UsageError("unsupported recipe schema_version " + std::to_string(version) + " (expected " +
                     std::to_string(kRecipeSchemaVersion) + ")");
  }
  r.seed = detail::get<std::uint64_t>(j, "seed", r.seed);
  r.output = detail::get<std::string>(j, "output", "");
  r.n_sites = detail::get<std::size_t>(j, "n_sites", r.n_sites);
  if (r.n_sites < 2 || r.n_sites > Bitstring::kMaxSites) throw UsageError("n_sites must be in [2, 64]");

  if (const json* h = detail::find(j, "hamiltonian")) {
    const std::string kind = detail::get<std::string>(*h, "kind", "rydberg");
    if (kind == "rydberg") {
      r.hamiltonian.kind = HamiltonianKind::Rydberg;
    } else if (kind == "xy") {
      r.hamiltonian.kind = HamiltonianKind::XY;
    } else {
      throw UsageError("hamiltonian.kind must be 'rydberg' or 'xy'");
    }
    const std::string axis = detail::get<std::string>(*h, "transverse_axis", "x");
    if (axis != "x" && axis != "y") throw UsageError("hamiltonian.transverse_axis must be 'x' or 'y'");
    r.hamiltonian.axis = axis == "x" ? TransverseAxis::X : TransverseAxis::Y;
    r.hamiltonian.truncation_range = detail::get<std::size_t>(*h, "truncation_range", 5);
    if (r.hamiltonian.truncation_range < 1) throw UsageError("hamiltonian.truncation_range must be >= 1");
    r.hamiltonian.coupling = detail::get<double>(*h, "coupling", 1.0);
    const std::string units = detail::get<std::string>(*h, "units", "dimensionless");
    if (units != "dimensionless" && units != "si") throw UsageError("hamiltonian.units must be 'dimensionless' or 'si'");
    r.hamiltonian.si_units = units == "si";
    r.hamiltonian.omega_rad_per_s = detail::get<double>(*h, "omega_rad_per_s", kReferenceOmega);
    r.hamiltonian.c6_m6_per_s = detail::get<double>(*h, "c6_m6_per_s", kReferenceC6);
  }
  const bool xy = r.hamiltonian.kind == HamiltonianKind::XY;

  if (const json* p = detail::find(j, "point")) {
    PointSpec pt;
    if (xy) {
      pt.line = detail::get<double>(*p, "gamma", NAN);
      pt.grid = detail::get<double>(*p, "field", NAN);
    } else if (r.hamiltonian.si_units) {
      const double delta = detail::get<double>(*p, "delta_rad_per_s", NAN);
      const double spacing = detail::get<double>(*p, "spacing_m", NAN);
      if (!(spacing > 0.0)) throw UsageError("point.spacing_m must be positive");
      pt.grid = delta / r.hamiltonian.omega_rad_per_s;
      pt.line = std::pow(r.hamiltonian.c6_m6_per_s / r.hamiltonian.omega_rad_per_s, 1.0 / 6.0) / spacing;
    } else {
      pt.line = detail::get<double>(*p, "rb_over_a", NAN);
      pt.grid = detail::get<double>(*p, "delta_over_omega", NAN);
    }
    if (!std::isfinite(pt.line) || !std::isfinite(pt.grid)) {
      throw UsageError(xy ? "point needs finite 'gamma' and 'field'" : "point needs finite 'rb_over_a' and 'delta_over_omega'");
    }
    r.point = pt;
  }

  if (const json* s = detail::find(j, "sweep")) {
    const json* lines = detail::find(*s, "lines");
    if (!lines || !lines->is_array() || lines->empty()) throw UsageError("sweep.lines must be a non-empty list");
    for (const auto& v : *lines) r.lines.push_back(v.get<double>());
    const json* grid = detail::find(*s, "grid");
    if (!grid) throw UsageError("sweep.grid is required");
    r.grid = detail::parse_grid(*grid, "sweep.grid");
    r.order = detail::get<std::size_t>(*s, "order", xy ? 0 : 2);
    r.compute_gap = detail::get<bool>(*s, "compute_gap", true);
    if (const json* o = detail::find(*s, "phase_orders")) r.phase_orders = o->get<std::vector<std::size_t>>();
  }

  if (const json* d = detail::find(j, "dmrg")) {
    r.dmrg.max_bond = detail::get<std::size_t>(*d, "max_bond", r.dmrg.max_bond);
    r.dmrg.cutoff = detail::get<double>(*d, "cutoff", r.dmrg.cutoff);
    r.dmrg.max_sweeps = detail::get<std::size_t>(*d, "max_sweeps", r.dmrg.max_sweeps);
    r.dmrg.energy_tolerance = detail::get<double>(*d, "energy_tolerance", r.dmrg.energy_tolerance);
    r.ed_gap_limit = detail::get<std::size_t>(*d, "ed_gap_limit", r.ed_gap_limit);
    if (r.dmrg.max_bond < 2) throw UsageError("dmrg.max_bond must be >= 2");
  }
  if (const json* d = detail::find(j, "data")) {
    r.shots = detail::get<std::size_t>(*d, "shots", r.shots);
    r.model_shots = detail::get<std::size_t>(*d, "model_shots", r.model_shots);
    if (r.shots < 1 || r.model_shots < 1) throw UsageError("data.shots and data.model_shots must be >= 1");
  }
  if (const json* m = detail::find(j, "models")) {
    if (const json* b = detail::find(*m, "bases")) {
      for (const auto& s : *b) r.models.bases.push_back(detail::parse_bases(s.get<std::string>()));
    }
    if (const json* f = detail::find(*m, "fields")) {
      for (const auto& s : *f) {
        const auto v = s.get<std::string>();
        if (v != "real" && v != "complex") throw UsageError("models.fields entries must be 'real' or 'complex'");
        r.models.complex_fields.push_back(v == "complex");
      }
    }
    if (const json* d = detail::find(*m, "bond_dims")) r.models.bond_dims = d->get<std::vector<std::size_t>>();
    for (auto d : r.models.bond_dims) {
      if (d < 1) throw UsageError("models.bond_dims entries must be >= 1");
    }
  }
  if (r.models.bases.empty()) r.models.bases = {{PauliBasis::X, PauliBasis::Z}};
  if (r.models.complex_fields.empty()) r.models.complex_fields = {true};
  if (r.models.bond_dims.empty()) throw UsageError("models.bond_dims must be non-empty");
  if (const json* t = detail::find(j, "training")) detail::parse_training(*t, r.training);
  r.trials = detail::get<std::size_t>(j, "trials", r.trials);
  if (r.trials < 1) throw UsageError("trials must be >= 1");

  if (const json* s = detail::find(j, "scaling")) {
    ScalingSpec sc;
    sc.n_sites = detail::get<std::vector<std::size_t>>(*s, "n_sites", {});
    sc.total_shots = detail::get<std::vector<std::size_t>>(*s, "total_shots", {});
    sc.trials = detail::get<std::size_t>(*s, "trials", sc.trials);
    sc.target_steps = detail::get<std::size_t>(*s, "target_steps", sc.target_steps);
    sc.bases = detail::parse_bases(detail::get<std::string>(*s, "bases", "xz"));
    sc.bond_dim = detail::get<std::size_t>(*s, "bond_dim", sc.bond_dim);
    sc.line = detail::get<double>(*s, "line", sc.line);
    if (sc.trials < 1) throw UsageError("scaling.trials must be >= 1");
    for (auto t : sc.total_shots) {
      if (t < sc.bases.size()) throw UsageError("scaling.total_shots entries must cover every basis");
    }
    if (const json* g = detail::find(*s, "grid")) sc.grid = detail::parse_grid(*g, "scaling.grid");
    if (const json* pts = detail::find(*s, "points")) {
      for (const auto& p : *pts) {
        ScalingPointSpec sp;
        sp.label = detail::get<std::string>(p, "label", "");
        sp.select = detail::get<std::string>(p, "select", "critical");
        sp.overlap = detail::get<double>(p, "overlap", sp.overlap);
        if (const json* e = detail::find(p, "values")) {
          for (auto it = e->begin(); it != e->end(); ++it) sp.explicit_grid[std::stoul(it.key())] = it.value().get<double>();
        }
        if (sp.select != "critical" && sp.select != "overlap" && sp.select != "explicit") {
          throw UsageError("scaling.points[].select must be critical, overlap or explicit");
        }
        if (sp.label.empty()) sp.label = sp.select;
        if (sp.select != "explicit" && sc.grid.values.empty()) throw UsageError("scaling.grid is required to select points");
        sc.points.push_back(std::move(sp));
      }
    }
    r.scaling = std::move(sc);
  }
  return r;
}

inline Recipe load_recipe(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw UsageError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_recipe(j);
}

// ---- Hamiltonians --------------------------------------------------------

inline RydbergParams rydberg_params(const HamiltonianSpec& h, const PointSpec& p) {
  return RydbergParams::dimensionless(p.grid, p.line, h.axis, h.truncation_range);
}

inline XYParams xy_params(const HamiltonianSpec& h, const PointSpec& p) { return XYParams{h.coupling, p.line, p.grid}; }

inline MatrixProductOperator build_mpo(const HamiltonianSpec& h, const PointSpec& p, std::size_t n) {
  return h.kind == HamiltonianKind::Rydberg ? rydberg_mpo(rydberg_params(h, p), n) : xy_mpo(xy_params(h, p), n);
}

inline SparseMatrix build_dense(const HamiltonianSpec& h, const PointSpec& p, std::size_t n) {
  return h.kind == HamiltonianKind::Rydberg ? rydberg_dense(rydberg_params(h, p), n) : xy_dense(xy_params(h, p), n);
}

inline const char* grid_name(const HamiltonianSpec& h) {
  return h.kind == HamiltonianKind::Rydberg ? "delta_over_omega" : "field";
}
inline const char* line_name(const HamiltonianSpec& h) {
  return h.kind == HamiltonianKind::Rydberg ? "rb_over_a" : "gamma";
}

// ---- run context and helpers ---------------------------------------------

struct RunContext {
  std::filesystem::path out;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  bool emit_plots = false;
  std::ostream* log = &std::cerr;
};

inline std::string content_hash(const json& j) {
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be
// written to pre-sized, index-addressed storage.
inline void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::string line_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct GroundTruth {
  GroundStateResult result;
  std::filesystem::path checkpoint;
  std::string key;
};

inline json ground_truth_key(const Recipe& r, const PointSpec& p, std::size_t n) {
  json k;
  k["kind"] = r.hamiltonian.kind == HamiltonianKind::Rydberg ? "rydberg" : "xy";
  k["axis"] = r.hamiltonian.axis == TransverseAxis::X ? "x" : "y";
  k["range"] = r.hamiltonian.truncation_range;
  k["coupling"] = r.hamiltonian.coupling;
  k["line"] = p.line;
  k["grid"] = p.grid;
  k["n"] = n;
  k["max_bond"] = r.dmrg.max_bond;
  k["cutoff"] = r.dmrg.cutoff;
  k["max_sweeps"] = r.dmrg.max_sweeps;
  k["tolerance"] = r.dmrg.energy_tolerance;
  k["seed"] = r.dmrg.seed;
  return k;
}

// Cold-start DMRG at one point, cached under out/ground_truth/<hash>.mps.
inline GroundTruth solve_point(const Recipe& r, const PointSpec& p, std::size_t n, const RunContext& ctx,
                               bool with_gap = false) {
  GroundTruth gt;
  const json key = ground_truth_key(r, p, n);
  gt.key = content_hash(key);
  const auto dir = ctx.out / "ground_truth";
  gt.checkpoint = dir / (gt.key + ".mps");
  const auto meta_path = dir / (gt.key + ".json");
  if (std::filesystem::exists(gt.checkpoint) && std::filesystem::exists(meta_path)) {
    const json meta = json::parse(read_file(meta_path));
    if (!with_gap || meta.contains("gap")) {
      gt.result.state = read_mps(gt.checkpoint);
      gt.result.energy = meta.at("energy").get<double>();
      gt.result.converged = meta.at("converged").get<bool>();
      if (meta.contains("gap")) gt.result.gap = meta["gap"].get<double>();
      gt.result.sweep_log = meta.at("sweep_log").get<std::vector<double>>();
      return gt;
    }
  }
  const auto mpo = build_mpo(r.hamiltonian, p, n);
  gt.result = dmrg_ground_state(mpo, r.dmrg);
  if (with_gap) {
    std::function<SparseMatrix()> dense;
    if (n <= kMaxDenseSites) dense = [&]() { return build_dense(r.hamiltonian, p, n); };
    gt.result.gap = energy_gap(mpo, gt.result, r.dmrg, dense, r.ed_gap_limit);
  }
  json meta;
  meta["inputs"] = key;
  meta["energy"] = gt.result.energy;
  meta["converged"] = gt.result.converged;
  meta["sweep_log"] = gt.result.sweep_log;
  if (gt.result.gap) meta["gap"] = *gt.result.gap;
  write_mps(gt.result.state, gt.checkpoint);
  write_file_atomic(meta_path, meta.dump(2) + "\n");
  return gt;
}

inline SweepOptions sweep_options(const Recipe& r, bool compute_gap, std::size_t order) {
  SweepOptions o;
  o.dmrg = r.dmrg;
  o.order = order;
  o.compute_gap = compute_gap;
  o.ed_gap_limit = r.ed_gap_limit;
  return o;
}

inline SweepLine run_sweep(const Recipe& r, double line, std::span<const double> grid, std::size_t n,
                           const SweepOptions& opt) {
  const HamiltonianSpec h = r.hamiltonian;
  auto mpo = [&](double g) { return build_mpo(h, PointSpec{line, g}, n); };
  std::function<SparseMatrix(double)> dense;
  if (n <= kMaxDenseSites) dense = [&](double g) { return build_dense(h, PointSpec{line, g}, n); };
  SweepLine out = parameter_sweep(mpo, dense, grid, opt);
  out.label = h.kind == HamiltonianKind::Rydberg ? "rydberg" : "xy";
  out.fixed_value = line;
  return out;
}

inline void write_sweep(const Recipe& r, const SweepLine& line, const RunContext& ctx, bool checkpoints) {
  const std::string tag = std::string(line_name(r.hamiltonian)) + "_" + line_tag(line.fixed_value);
  write_file_atomic(ctx.out / ("sweep_" + tag + ".csv"), sweep_csv(line, grid_name(r.hamiltonian)));
  if (checkpoints) {
    for (std::size_t i = 0; i < line.points.size(); ++i) {
      write_mps(line.points[i].result.state, ctx.out / ("sweep_" + tag) / ("point_" + std::to_string(i) + ".mps"));
    }
  }
  if (ctx.emit_plots) {
    svg::Series svn{"SvN", {}, {}}, gap{"gap", {}, {}}, mag{"M", {}, {}};
    for (const auto& p : line.points) {
      svn.x.push_back(p.parameter);
      svn.y.push_back(p.svn);
      gap.x.push_back(p.parameter);
      gap.y.push_back(p.gap);
      mag.x.push_back(p.parameter);
      mag.y.push_back(p.magnetization);
    }
    write_file_atomic(ctx.out / ("sweep_" + tag + ".svg"),
                      svg::line_chart("sweep " + tag, grid_name(r.hamiltonian), "observable", {svn, gap, mag}));
  }
}

// ---- commands ------------------------------------------------------------

inline json cmd_ground_truth(const Recipe& r, const RunContext& ctx) {
  if (!r.point && r.lines.empty()) throw UsageError("ground-truth needs a 'point' or a 'sweep' in the recipe");
  json summary;
  if (r.point) {
    const GroundTruth gt = solve_point(r, *r.point, r.n_sites, ctx, r.compute_gap);
    const auto& res = gt.result;
    std::string csv = std::string(line_name(r.hamiltonian)) + "," + grid_name(r.hamiltonian) +
                      ",energy,gap,svn,magnetization,converged,checkpoint\n";
    const double svn = r.n_sites >= 2 ? bipartite_entropy(res.state, r.n_sites / 2) : 0.0;
    csv += format_double(r.point->line) + "," + format_double(r.point->grid) + "," + format_double(res.energy) + "," +
           (res.gap ? format_double(*res.gap) : std::string()) + "," + format_double(svn) + "," +
           format_double(magnetization(res.state)) + "," + (res.converged ? "1" : "0") + "," +
           gt.checkpoint.filename().string() + "\n";
    write_file_atomic(ctx.out / "ground_truth.csv", csv);
    summary["checkpoint"] = gt.checkpoint.string();
    summary["energy"] = res.energy;
    summary["converged"] = res.converged;
    if (res.gap) summary["gap"] = *res.gap;
  }
  std::vector<SweepLine> lines(r.lines.size());
  parallel_for(r.lines.size(), ctx.jobs, [&](std::size_t i) {
    lines[i] = run_sweep(r, r.lines[i], r.grid.values, r.n_sites, sweep_options(r, r.compute_gap, r.order));
  });
  for (const auto& line : lines) write_sweep(r, line, ctx, true);
  summary["sweeps"] = r.lines;
  return summary;
}

inline std::string critical_csv_header(const Recipe& r) {
  return std::string(line_name(r.hamiltonian)) +
         ",found,boundary,method,location,gap_minimum,magnetization_slope_extremum,spread,disagreement\n";
}

inline std::string critical_csv_row(double line, const CriticalPointEstimate& e) {
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  return format_double(line) + "," + (e.found ? "1" : "0") + "," + (e.boundary ? "1" : "0") + "," + e.method + "," +
         format_double(e.location) + "," + opt(e.gap_minimum) + "," + opt(e.magnetization_slope_extremum) + "," +
         format_double(e.spread) + "," + (e.disagreement ? "1" : "0") + "\n";
}

inline std::vector<CriticalPointEstimate> cmd_locate_critical(const Recipe& r, const RunContext& ctx) {
  if (r.lines.empty()) throw UsageError("locate-critical needs a 'sweep' in the recipe");
  std::vector<SweepLine> lines(r.lines.size());
  parallel_for(r.lines.size(), ctx.jobs, [&](std::size_t i) {
    lines[i] = run_sweep(r, r.lines[i], r.grid.values, r.n_sites, sweep_options(r, true, r.order));
  });
  std::vector<CriticalPointEstimate> out;
  std::string csv = critical_csv_header(r);
  for (const auto& line : lines) {
    write_sweep(r, line, ctx, false);
    out.push_back(locate_critical_point(line));
    csv += critical_csv_row(line.fixed_value, out.back());
  }
  write_file_atomic(ctx.out / "critical_points.csv", csv);
  return out;
}

inline void cmd_phase_map(const Recipe& r, const RunContext& ctx) {
  if (r.hamiltonian.kind != HamiltonianKind::Rydberg) throw UsageError("phase-map requires a rydberg hamiltonian");
  if (r.lines.empty()) throw UsageError("phase-map needs a 'sweep' with R_b/a lines and a detuning grid");
  for (auto k : r.phase_orders) {
    if (k < 2 || k > 4) throw UsageError("phase_orders entries must be 2, 3 or 4");
  }
  std::vector<SweepLine> lines(r.lines.size());
  parallel_for(r.lines.size(), ctx.jobs, [&](std::size_t i) {
    lines[i] = run_sweep(r, r.lines[i], r.grid.values, r.n_sites, sweep_options(r, false, 0));
  });
  std::string csv = "rb_over_a,delta_over_omega";
  for (auto k : r.phase_orders) csv += ",overlap_z" + std::to_string(k);
  csv += ",svn,energy,converged\n";
  std::vector<svg::Series> series;
  for (const auto& line : lines) {
    for (const auto& p : line.points) {
      csv += format_double(line.fixed_value) + "," + format_double(p.parameter);
      for (auto k : r.phase_orders) {
        csv += ",";
        if ((r.n_sites - 1) % k == 0) csv += format_double(phase_overlap(p.result.state, k));
      }
      csv += "," + format_double(p.svn) + "," + format_double(p.energy) + "," + (p.converged ? "1" : "0") + "\n";
    }
  }
  write_file_atomic(ctx.out / "phase_map.csv", csv);
  if (ctx.emit_plots) {
    for (auto k : r.phase_orders) {
      if ((r.n_sites - 1) % k != 0) continue;
      for (const auto& line : lines) {
        svg::Series s{"Z" + std::to_string(k) + " Rb/a=" + line_tag(line.fixed_value), {}, {}};
        for (const auto& p : line.points) {
          s.x.push_back(p.parameter);
          s.y.push_back(phase_overlap(p.result.state, k));
        }
        series.push_back(std::move(s));
      }
    }
    write_file_atomic(ctx.out / "phase_map.svg", svg::line_chart("ordered-phase overlap", "delta/omega", "overlap", series));
  }
}

// Model checkpoint plus JSON sidecar.
inline void write_model(const BornMachine& m, const json& sidecar, const std::filesystem::path& path) {
  write_mps(m.psi, path);
  auto side = path;
  side.replace_extension(".json");
  write_file_atomic(side, sidecar.dump(2) + "\n");
}

inline json train_sidecar(const TrainConfig& cfg, std::size_t bond_dim, bool complex_valued, const TrainHistory& h) {
  json j;
  j["bases"] = bases_label(cfg.bases);
  j["bond_dim"] = bond_dim;
  j["complex_valued"] = complex_valued;
  j["init"] = complex_valued ? "uniform[0,1) real and imaginary parts" : "uniform[0,1)";
  j["learning_rate"] = cfg.adam.learning_rate;
  j["beta1"] = cfg.adam.beta1;
  j["beta2"] = cfg.adam.beta2;
  j["epsilon"] = cfg.adam.epsilon;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  j["epoch"] = h.epochs.empty() ? 0 : h.epochs.back().epoch;
  j["early_stopped"] = h.early_stopped;
  j["data_entropy"] = h.data_entropy;
  if (!h.epochs.empty()) {
    j["loss"] = h.epochs.back().loss;
    j["loss_minus_entropy"] = h.epochs.back().loss_minus_entropy;
    if (h.epochs.back().fidelity) j["fidelity"] = *h.epochs.back().fidelity;
    j["wall_seconds"] = h.epochs.back().wall_seconds;
  }
  return j;
}

struct CellOutcome {
  std::string bases;
  bool complex_valued = false;
  std::size_t bond_dim = 0;
  std::size_t trial = 0;
  bool failed = false;
  std::string error;
  MetricsReport report;
  double final_step_std = 0.0;
  TrainHistory history;
};

// Generates datasets, trains and evaluates one (bases, field, D, trial) cell.
inline CellOutcome run_cell(const MatrixProductState& reference, std::vector<PauliBasis> bases, bool complex_valued,
                            std::size_t bond_dim, std::size_t trial, TrainConfig cfg, std::size_t shots,
                            std::size_t model_shots, std::uint64_t master) {
  CellOutcome c;
  c.bases = bases_label(bases);
  c.complex_valued = complex_valued;
  c.bond_dim = bond_dim;
  c.trial = trial;
  const std::uint64_t data_seed = derive_seed(master, "data", trial);
  std::vector<MeasurementDataset> sets;
  for (auto b : bases) sets.push_back(simulate_measurements(reference, b, shots, data_seed));
  const std::string cell_tag = c.bases + (complex_valued ? "C" : "R") + std::to_string(bond_dim);
  cfg.bases = bases;
  cfg.seed = derive_seed(master, "train:" + cell_tag, trial);
  try {
    BornMachine m = init_model(reference.size(), bond_dim, complex_valued, derive_seed(master, "init:" + cell_tag, trial));
    TrainResult tr = train(std::move(m), sets, cfg, reference);
    c.history = tr.history;
    c.report = evaluate(tr.model.psi, reference, shots, data_seed, model_shots);
    c.report.loss_minus_entropy = tr.history.epochs.back().loss_minus_entropy;
    c.final_step_std = tr.history.epochs.back().fidelity_step_std.value_or(0.0);
  } catch (const TrainingError& e) {
    c.failed = true;
    c.error = e.what();
  }
  return c;
}

inline std::string matrix_csv(const std::vector<CellOutcome>& cells) {
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  std::string out = "basis,field,bond_dim,trial,C_x,C_y,C_z,loss_minus_entropy,F,F_final_epoch_std,status\n";
  for (const auto& c : cells) {
    out += c.bases + "," + (c.complex_valued ? "C" : "R") + "," + std::to_string(c.bond_dim) + "," +
           std::to_string(c.trial) + ",";
    if (c.failed) {
      out += ",,,,,,failed\n";
      continue;
    }
    out += opt(c.report.classical[0]) + "," + opt(c.report.classical[1]) + "," + opt(c.report.classical[2]) + "," +
           opt(c.report.loss_minus_entropy) + "," + format_double(c.report.quantum_fidelity) + "," +
           format_double(c.final_step_std) + ",ok\n";
  }
  // aggregate rows over trials
  std::vector<std::string> seen;
  for (const auto& c : cells) {
    const std::string key = c.bases + (c.complex_valued ? "C" : "R") + std::to_string(c.bond_dim);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    std::array<std::vector<double>, 5> cols;
    for (const auto& d : cells) {
      if (d.failed || d.bases != c.bases || d.complex_valued != c.complex_valued || d.bond_dim != c.bond_dim) continue;
      for (std::size_t i = 0; i < 3; ++i) cols[i].push_back(d.report.classical[i].value_or(NAN));
      cols[3].push_back(d.report.loss_minus_entropy.value_or(NAN));
      cols[4].push_back(d.report.quantum_fidelity);
    }
    if (cols[4].empty()) continue;
    std::string mean_row, std_row;
    for (const auto& col : cols) {
      double m = 0.0, s = 0.0;
      for (double v : col) m += v;
      m /= static_cast<double>(col.size());
      for (double v : col) s += (v - m) * (v - m);
      s = col.size() > 1 ? std::sqrt(s / static_cast<double>(col.size() - 1)) : 0.0;
      mean_row += "," + format_double(m);
      std_row += "," + format_double(s);
    }
    const std::string prefix = c.bases + "," + (c.complex_valued ? "C" : "R") + "," + std::to_string(c.bond_dim);
    out += prefix + ",mean" + mean_row + ",,aggregate\n";
    out += prefix + ",std" + std_row + ",,aggregate\n";
  }
  return out;
}

inline std::vector<CellOutcome> cmd_matrix(const Recipe& r, const RunContext& ctx) {
  if (!r.point) throw UsageError("matrix needs a 'point' in the recipe");
  const GroundTruth gt = solve_point(r, *r.point, r.n_sites, ctx);
  struct Job {
    std::vector<PauliBasis> bases;
    bool complex_valued;
    std::size_t bond_dim, trial;
  };
  std::vector<Job> jobs;
  for (const auto& b : r.models.bases) {
    for (bool cx : r.models.complex_fields) {
      for (auto d : r.models.bond_dims) {
        for (std::size_t t = 0; t < r.trials; ++t) jobs.push_back({b, cx, d, t});
      }
    }
  }
  std::vector<CellOutcome> cells(jobs.size());
  parallel_for(jobs.size(), ctx.jobs, [&](std::size_t i) {
    const Job& j = jobs[i];
    cells[i] = run_cell(gt.result.state, j.bases, j.complex_valued, j.bond_dim, j.trial, r.training, r.shots,
                        r.model_shots, ctx.seed);
    const auto& c = cells[i];
    const auto dir = ctx.out / "cells" / (c.bases + "_" + (c.complex_valued ? "C" : "R") + "_D" +
                                         std::to_string(c.bond_dim) + "_t" + std::to_string(c.trial));
    json m = c.failed ? json{{"failed", true}, {"error", c.error}} : to_json(c.report);
    write_file_atomic(dir / "metrics.json", m.dump(2) + "\n");
    if (!c.failed) write_file_atomic(dir / "history.csv", history_csv(c.history));
    *ctx.log << "cell " << c.bases << (c.complex_valued ? " C" : " R") << " D=" << c.bond_dim << " trial " << c.trial
             << (c.failed ? " failed: " + c.error : " F=" + format_double(c.report.quantum_fidelity)) << "\n";
  });
  write_file_atomic(ctx.out / "summary.csv", matrix_csv(cells));
  if (ctx.emit_plots) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& c : cells) {
      if (c.trial != 0) continue;
      labels.push_back(c.bases + (c.complex_valued ? "/C" : "/R"));
      values.push_back(c.failed ? 0.0 : c.report.quantum_fidelity);
    }
    write_file_atomic(ctx.out / "fidelity.svg", svg::bar_chart("quantum fidelity per cell", "F", labels, values));
  }
  return cells;
}

// ---- scaling -------------------------------------------------------------

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("fit_line: insufficient grid (need at least two points)");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: insufficient grid (all x values equal)");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

struct ScalingRun {
  std::string label;
  std::size_t n_sites = 0;
  double grid_value = 0.0;
  std::size_t total_shots = 0;
  std::vector<double> infidelities;  // per trial
  double mean = 0.0, std = 0.0;
};

struct ScalingFits {
  std::string label;
  std::vector<std::pair<std::size_t, LinearFit>> per_n;  // 1-F vs |T|^-1/2
  LinearFit vs_n;                                         // slopes vs N; c = slope
};

struct ScalingOutcome {
  std::vector<ScalingRun> runs;
  std::vector<ScalingFits> fits;
  std::map<std::string, std::map<std::size_t, double>> points;  // label -> N -> grid value
};

// Grid value where the overlap first crosses `target`, linearly interpolated.
inline std::optional<double> overlap_crossing(const SweepLine& line, double target) {
  for (std::size_t i = 1; i < line.points.size(); ++i) {
    const double a = line.points[i - 1].overlap, b = line.points[i].overlap;
    if (std::isnan(a) || std::isnan(b)) continue;
    if ((a - target) * (b - target) <= 0.0 && a != b) {
      const double t = (target - a) / (b - a);
      return line.points[i - 1].parameter + t * (line.points[i].parameter - line.points[i - 1].parameter);
    }
  }
  return std::nullopt;
}

inline void validate_scaling(const ScalingSpec& s) {
  if (s.points.empty()) throw UsageError("scaling.points must be non-empty");
  if (s.n_sites.size() < 2 || s.total_shots.size() < 2) {
    throw UsageError("scaling: insufficient grid; need at least two n_sites and two total_shots values to fit");
  }
}

inline ScalingOutcome cmd_scaling(const Recipe& r, const RunContext& ctx) {
  if (!r.scaling) throw UsageError("scaling needs a 'scaling' block in the recipe");
  const ScalingSpec& s = *r.scaling;
  validate_scaling(s);
  ScalingOutcome out;

  // select the grid value per (label, N)
  std::map<std::size_t, SweepLine> sweeps;
  for (const auto& p : s.points) {
    for (auto n : s.n_sites) {
      if (p.select == "explicit") {
        const auto it = p.explicit_grid.find(n);
        if (it == p.explicit_grid.end()) throw UsageError("scaling point '" + p.label + "' has no value for N=" + std::to_string(n));
        out.points[p.label][n] = it->second;
        continue;
      }
      if (!sweeps.contains(n)) {
        sweeps[n] = run_sweep(r, s.line, s.grid.values, n, sweep_options(r, true, r.order));
      }
      const SweepLine& line = sweeps[n];
      if (p.select == "critical") {
        const auto est = locate_critical_point(line);
        if (!est.found) throw std::runtime_error("scaling: no interior critical point for N=" + std::to_string(n));
        out.points[p.label][n] = est.location;
      } else {
        const auto x = overlap_crossing(line, p.overlap);
        if (!x) throw std::runtime_error("scaling: overlap never reaches " + format_double(p.overlap) + " for N=" + std::to_string(n));
        out.points[p.label][n] = *x;
      }
    }
  }
  std::string pcsv = "label,n_sites," + std::string(grid_name(r.hamiltonian)) + "\n";
  for (const auto& [label, m] : out.points) {
    for (const auto& [n, g] : m) pcsv += label + "," + std::to_string(n) + "," + format_double(g) + "\n";
  }
  write_file_atomic(ctx.out / "scaling_points.csv", pcsv);

  // ground truth per (label, N)
  std::map<std::pair<std::string, std::size_t>, MatrixProductState> refs;
  for (const auto& [label, m] : out.points) {
    for (const auto& [n, g] : m) refs[{label, n}] = solve_point(r, PointSpec{s.line, g}, n, ctx).result.state;
  }

  struct Job {
    std::string label;
    std::size_t n, total, trial;
  };
  std::vector<Job> jobs;
  for (const auto& p : s.points) {
    for (auto n : s.n_sites) {
      for (auto t : s.total_shots) {
        for (std::size_t k = 0; k < s.trials; ++k) jobs.push_back({p.label, n, t, k});
      }
    }
  }
  std::vector<double> infid(jobs.size(), NAN);
  parallel_for(jobs.size(), ctx.jobs, [&](std::size_t i) {
    const Job& j = jobs[i];
    const auto& ref = refs.at({j.label, j.n});
    const std::size_t per_basis = j.total / s.bases.size();
    const std::string tag = j.label + ":" + std::to_string(j.n) + ":" + std::to_string(j.total);
    const std::uint64_t data_seed = derive_seed(ctx.seed, "scaling-data:" + tag, j.trial);
    std::vector<MeasurementDataset> sets;
    for (auto b : s.bases) sets.push_back(simulate_measurements(ref, b, per_basis, data_seed));
    TrainConfig cfg = r.training;
    cfg.bases = s.bases;
    cfg.seed = derive_seed(ctx.seed, "scaling-train:" + tag, j.trial);
    const std::size_t steps_per_epoch = (per_basis + cfg.batch_size - 1) / cfg.batch_size;
    cfg.epochs = std::max<std::size_t>(1, (s.target_steps + steps_per_epoch - 1) / steps_per_epoch);
    cfg.plateau_window = 0;
    try {
      BornMachine m = init_model(j.n, s.bond_dim, true, derive_seed(ctx.seed, "scaling-init:" + tag, j.trial));
      const TrainResult tr = train(std::move(m), sets, cfg);
      infid[i] = 1.0 - quantum_fidelity(ref, tr.model.psi);
    } catch (const TrainingError& e) {
      *ctx.log << "scaling " << tag << " trial " << j.trial << " failed: " << e.what() << "\n";
    }
  });

  std::string csv = "label,n_sites,total_shots,trial,infidelity\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    csv += jobs[i].label + "," + std::to_string(jobs[i].n) + "," + std::to_string(jobs[i].total) + "," +
           std::to_string(jobs[i].trial) + "," + (std::isnan(infid[i]) ? std::string() : format_double(infid[i])) + "\n";
  }
  write_file_atomic(ctx.out / "scaling.csv", csv);

  // aggregate per (label, N, |T|)
  for (const auto& p : s.points) {
    for (auto n : s.n_sites) {
      for (auto t : s.total_shots) {
        ScalingRun run{p.label, n, out.points[p.label][n], t, {}, 0.0, 0.0};
        for (std::size_t i = 0; i < jobs.size(); ++i) {
          if (jobs[i].label == p.label && jobs[i].n == n && jobs[i].total == t && !std::isnan(infid[i])) {
            run.infidelities.push_back(infid[i]);
          }
        }
        if (!run.infidelities.empty()) {
          for (double v : run.infidelities) run.mean += v;
          run.mean /= static_cast<double>(run.infidelities.size());
          for (double v : run.infidelities) run.std += (v - run.mean) * (v - run.mean);
          run.std = run.infidelities.size() > 1 ? std::sqrt(run.std / static_cast<double>(run.infidelities.size() - 1)) : 0.0;
        } else {
          run.mean = run.std = NAN;
        }
        out.runs.push_back(std::move(run));
      }
    }
  }
  std::string fcsv = "label,n_sites,slope,intercept,r2\n";
  std::string scsv = "label,c,intercept,r2\n";
  std::vector<svg::Series> plot;
  for (const auto& p : s.points) {
    ScalingFits f;
    f.label = p.label;
    std::vector<double> ns, slopes;
    for (auto n : s.n_sites) {
      std::vector<double> x, y;
      for (const auto& run : out.runs) {
        if (run.label == p.label && run.n_sites == n && std::isfinite(run.mean)) {
          x.push_back(1.0 / std::sqrt(static_cast<double>(run.total_shots)));
          y.push_back(run.mean);
        }
      }
      if (x.size() < 2) continue;
      const LinearFit lf = fit_line(x, y);
      f.per_n.emplace_back(n, lf);
      ns.push_back(static_cast<double>(n));
      slopes.push_back(lf.slope);
      fcsv += p.label + "," + std::to_string(n) + "," + format_double(lf.slope) + "," + format_double(lf.intercept) + "," +
              format_double(lf.r2) + "\n";
      plot.push_back({p.label + " N=" + std::to_string(n), x, y});
    }
    if (ns.size() >= 2) {
      f.vs_n = fit_line(ns, slopes);
      scsv += p.label + "," + format_double(f.vs_n.slope) + "," + format_double(f.vs_n.intercept) + "," +
              format_double(f.vs_n.r2) + "\n";
    }
    out.fits.push_back(std::move(f));
  }
  write_file_atomic(ctx.out / "fits.csv", fcsv);
  write_file_atomic(ctx.out / "scaling_summary.csv", scsv);
  if (ctx.emit_plots) {
    write_file_atomic(ctx.out / "scaling.svg", svg::line_chart("infidelity scaling", "|T|^-1/2", "1 - F", plot));
  }
  return out;
}

}  // namespace bebm

#endif  // BEBM_EXPERIMENTS_HPP
