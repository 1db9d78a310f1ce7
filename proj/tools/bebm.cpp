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


// bebm: command-line driver for ground truth, datasets, training and analysis.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bebm/experiments.hpp"

namespace fs = std::filesystem;
using namespace bebm;

namespace {

struct Globals {
  std::string recipe;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
  bool emit_plots = false;
};

fs::path output_dir(const Globals& g, const Recipe* r, const std::string& command) {
  if (!g.out.empty()) return g.out;
  const char* env = std::getenv(kOutputRootEnv);
  const fs::path root = env && *env ? fs::path(env) : fs::path("bebm-runs");
  if (r && !r->output.empty()) {
    const fs::path p(r->output);
    return p.is_absolute() ? p : root / p;
  }
  return root / command;
}

Recipe require_recipe(const Globals& g) {
  if (g.recipe.empty()) throw UsageError("--recipe is required for this command");
  return load_recipe(g.recipe);
}

RunContext context(const Globals& g, const Recipe* r, const std::string& command) {
  RunContext ctx;
  ctx.out = output_dir(g, r, command);
  ctx.seed = g.seed ? *g.seed : (r ? r->seed : 1);
  ctx.jobs = g.jobs;
  ctx.emit_plots = g.emit_plots;
  fs::create_directories(ctx.out);
  return ctx;
}

MatrixProductState reference_state(const Globals& g, const std::string& path, const std::string& command,
                                   RunContext& ctx) {
  if (!path.empty()) return read_mps(path);
  Recipe r = require_recipe(g);
  if (!r.point) throw UsageError(command + ": give a checkpoint path or a recipe with a 'point'");
  ctx = context(g, &r, command);
  return solve_point(r, *r.point, r.n_sites, ctx).result.state;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Basis-enhanced Born machines: ground truth, training and evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--recipe", g.recipe, "JSON recipe file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed (overrides the recipe)");
  app.add_option("--jobs", g.jobs, "maximum concurrent jobs")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, std::string("output directory (default: $") + kOutputRootEnv + "/<command>)");
  app.add_flag("--emit-plots", g.emit_plots, "also write SVG charts");

  auto* ground = app.add_subcommand("ground-truth", "DMRG ground states for a point and/or sweep lines");
  auto* phase = app.add_subcommand("phase-map", "ordered-phase overlaps on a (R_b/a, detuning) grid");
  auto* locate = app.add_subcommand("locate-critical", "critical point per sweep line");
  auto* matrix = app.add_subcommand("matrix", "train and evaluate every (bases, field, D, trial) cell");
  auto* scaling = app.add_subcommand("scaling", "infidelity scaling with N and dataset size");

  auto* sample = app.add_subcommand("sample", "write projective measurement datasets");
  std::string sample_model, sample_bases = "xz";
  std::optional<std::size_t> sample_shots;
  sample->add_option("--model", sample_model, "MPS checkpoint (default: recipe ground truth)")->check(CLI::ExistingFile);
  sample->add_option("--bases", sample_bases, "bases to measure, e.g. xz");
  sample->add_option("--shots", sample_shots, "shots per basis")->check(CLI::PositiveNumber);

  auto* trainc = app.add_subcommand("train", "train a Born machine on dataset files");
  std::vector<std::string> train_data;
  std::string train_reference;
  std::size_t train_bond = 4;
  bool train_real = false;
  trainc->add_option("--data", train_data, "dataset files, one per basis")->required()->check(CLI::ExistingFile);
  trainc->add_option("--reference", train_reference, "reference MPS for fidelity tracking")->check(CLI::ExistingFile);
  trainc->add_option("--bond-dim", train_bond, "model bond dimension")->check(CLI::PositiveNumber);
  trainc->add_flag("--real", train_real, "real-valued model (default complex)");

  auto* evalc = app.add_subcommand("evaluate", "compare a trained model against a reference state");
  std::string eval_model, eval_reference;
  std::optional<std::size_t> eval_shots, eval_model_shots;
  std::optional<std::uint64_t> eval_data_seed;
  evalc->add_option("--model", eval_model, "trained model checkpoint")->required()->check(CLI::ExistingFile);
  evalc->add_option("--reference", eval_reference, "reference checkpoint (default: recipe ground truth)")
      ->check(CLI::ExistingFile);
  evalc->add_option("--shots", eval_shots, "reference shots per basis")->check(CLI::PositiveNumber);
  evalc->add_option("--model-shots", eval_model_shots, "model shots per basis")->check(CLI::PositiveNumber);
  evalc->add_option("--data-seed", eval_data_seed, "seed the reference datasets were drawn with");
  bool eval_sampled = false;
  evalc->add_flag("--sampled-correlations", eval_sampled, "estimate G(r) from z-basis samples instead of exactly");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ground->parsed() || phase->parsed() || locate->parsed() || matrix->parsed() || scaling->parsed()) {
      const Recipe r = require_recipe(g);
      CLI::App* cmd = app.get_subcommands().front();
      const RunContext ctx = context(g, &r, cmd->get_name());
      write_file_atomic(ctx.out / "recipe.json", r.source.dump(2) + "\n");
      if (ground->parsed()) {
        cmd_ground_truth(r, ctx);
      } else if (phase->parsed()) {
        cmd_phase_map(r, ctx);
      } else if (locate->parsed()) {
        for (const auto& e : cmd_locate_critical(r, ctx)) {
          std::cout << (e.found ? format_double(e.location) : std::string("none")) << "\n";
        }
      } else if (matrix->parsed()) {
        cmd_matrix(r, ctx);
      } else {
        for (const auto& f : cmd_scaling(r, ctx).fits) {
          std::cout << f.label << " c=" << format_double(f.vs_n.slope) << " r2=" << format_double(f.vs_n.r2) << "\n";
        }
      }
      std::cout << ctx.out.string() << "\n";
      return 0;
    }

    if (sample->parsed()) {
      std::optional<Recipe> r;
      if (!g.recipe.empty()) r = load_recipe(g.recipe);
      RunContext ctx = context(g, r ? &*r : nullptr, "sample");
      const MatrixProductState psi = reference_state(g, sample_model, "sample", ctx);
      if (!sample_model.empty()) write_mps(psi, ctx.out / "reference.mps");
      const std::size_t shots = sample_shots.value_or(r ? r->shots : kDefaultShots);
      for (PauliBasis b : detail::parse_bases(sample_bases)) {
        const auto d = simulate_measurements(psi, b, shots, ctx.seed);
        write_dataset(d, ctx.out / (std::string("data_") + basis_char(b) + ".txt"));
      }
      std::cout << ctx.out.string() << "\n";
      return 0;
    }

    if (trainc->parsed()) {
      std::optional<Recipe> r;
      if (!g.recipe.empty()) r = load_recipe(g.recipe);
      const RunContext ctx = context(g, r ? &*r : nullptr, "train");
      std::vector<MeasurementDataset> sets;
      for (const auto& p : train_data) sets.push_back(read_dataset(p));
      validate_training_sets(sets);
      TrainConfig cfg = r ? r->training : TrainConfig{};
      cfg.bases.clear();
      for (const auto& d : sets) cfg.bases.push_back(d.basis);
      cfg.seed = derive_seed(ctx.seed, "train");
      std::optional<MatrixProductState> ref;
      if (!train_reference.empty()) ref = read_mps(train_reference);
      BornMachine m = init_model(sets.front().n_sites, train_bond, !train_real, derive_seed(ctx.seed, "init"));
      const TrainResult tr = ref ? train(std::move(m), sets, cfg, *ref) : train(std::move(m), sets, cfg);
      write_model(tr.model, train_sidecar(cfg, train_bond, !train_real, tr.history), ctx.out / "model.mps");
      write_file_atomic(ctx.out / "history.csv", history_csv(tr.history));
      std::cout << ctx.out.string() << "\n";
      return 0;
    }

    if (evalc->parsed()) {
      std::optional<Recipe> r;
      if (!g.recipe.empty()) r = load_recipe(g.recipe);
      RunContext ctx = context(g, r ? &*r : nullptr, "evaluate");
      const MatrixProductState model = read_mps(eval_model);
      const MatrixProductState reference = reference_state(g, eval_reference, "evaluate", ctx);
      const MetricsReport rep =
          evaluate(model, reference, eval_shots.value_or(r ? r->shots : kDefaultShots), eval_data_seed.value_or(ctx.seed),
                   eval_model_shots.value_or(r ? r->model_shots : kDefaultModelShots), eval_sampled);
      write_file_atomic(ctx.out / "metrics.json", to_json(rep).dump(2) + "\n");
      write_file_atomic(ctx.out / "metrics.csv", "C_x,C_y,C_z,F\n" + format_double(*rep.classical[0]) + "," +
                                                     format_double(*rep.classical[1]) + "," +
                                                     format_double(*rep.classical[2]) + "," +
                                                     format_double(rep.quantum_fidelity) + "\n");
      std::string corr = "r,model,reference\n";
      for (std::size_t i = 0; i < rep.correlations.size(); ++i) {
        corr += std::to_string(i + 1) + "," + format_double(rep.correlations[i]) + "," +
                format_double(rep.reference_correlations[i]) + "\n";
      }
      write_file_atomic(ctx.out / "correlations.csv", corr);
      if (g.emit_plots) {
        svg::Series a{"model", {}, {}}, b{"reference", {}, {}};
        for (std::size_t i = 0; i < rep.correlations.size(); ++i) {
          a.x.push_back(static_cast<double>(i + 1));
          a.y.push_back(rep.correlations[i]);
          b.x.push_back(static_cast<double>(i + 1));
          b.y.push_back(rep.reference_correlations[i]);
        }
        write_file_atomic(ctx.out / "correlations.svg", svg::line_chart("correlation G(r)", "r", "G", {a, b}));
      }
      std::cout << "F=" << format_double(rep.quantum_fidelity) << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
