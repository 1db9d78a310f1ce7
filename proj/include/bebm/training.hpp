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


#ifndef BEBM_TRAINING_HPP
#define BEBM_TRAINING_HPP

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bebm/dataset.hpp"
#include "bebm/mps.hpp"

namespace bebm {

inline constexpr double kProbabilityFloor = 1e-300;

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BornMachine {
  MatrixProductState psi;
  bool complex_valued = false;
  std::size_t bond_dim = 1;

  std::size_t size() const { return psi.size(); }
  // Real coordinates: one per entry for real models, (re, im) pairs otherwise.
  std::size_t parameter_count() const { return psi.parameter_count(); }
};

inline BornMachine init_model(std::size_t n_sites, std::size_t bond_dim, bool complex_valued, std::uint64_t seed) {
  if (n_sites < 2) throw std::invalid_argument("init_model: need at least two sites");
  if (bond_dim < 1) throw std::invalid_argument("init_model: bond dimension must be >= 1");
  RandomStream rng(derive_seed(seed, "init-model"));
  return BornMachine{MatrixProductState::random(n_sites, bond_dim, complex_valued, rng, 0.0, 1.0), complex_valued, bond_dim};
}

inline std::vector<double> get_parameters(const BornMachine& m) {
  std::vector<double> p;
  p.reserve(m.parameter_count());
  for (const auto& t : m.psi.sites()) {
    for (const cplx& x : t.data()) {
      p.push_back(x.real());
      if (m.complex_valued) p.push_back(x.imag());
    }
  }
  return p;
}

inline void set_parameters(BornMachine& m, std::span<const double> p) {
  if (p.size() != m.parameter_count()) {
    throw std::invalid_argument("set_parameters: expected " + std::to_string(m.parameter_count()) + " values, got " +
                                std::to_string(p.size()));
  }
  std::vector<DenseTensor> sites = m.psi.sites();
  std::size_t i = 0;
  for (auto& t : sites) {
    for (cplx& x : t.data()) {
      const double re = p[i++];
      const double im = m.complex_valued ? p[i++] : 0.0;
      x = cplx(re, im);
    }
  }
  m.psi = MatrixProductState(std::move(sites), m.complex_valued);
}

// One basis worth of configurations for a loss evaluation.
struct BasisBatch {
  PauliBasis basis = PauliBasis::Z;
  std::span<const Bitstring> shots;
};

struct LossValue {
  double loss = 0.0;
  bool floored = false;  // some probability fell below kProbabilityFloor
};

namespace detail {

using RowVec = Eigen::Matrix<cplx, 1, Eigen::Dynamic>;
using ColVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

// Site matrices of the model rotated into `basis`: mats[k][t] = sum_s U(t, s) A_k[s].
inline std::vector<std::array<Matrix, 2>> rotated_matrices(const MatrixProductState& psi, PauliBasis basis) {
  const Matrix2 u = basis_rotation(basis);
  std::vector<std::array<Matrix, 2>> out(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const Matrix a0 = psi.matrix(k, 0), a1 = psi.matrix(k, 1);
    out[k] = {u(0, 0) * a0 + u(0, 1) * a1, u(1, 0) * a0 + u(1, 1) * a1};
  }
  return out;
}

inline std::vector<std::pair<Bitstring, std::size_t>> tally(std::span<const Bitstring> shots) {
  std::unordered_map<Bitstring, std::size_t> counts;
  std::vector<Bitstring> order;
  for (const auto& s : shots) {
    auto [it, fresh] = counts.try_emplace(s, 0);
    if (fresh) order.push_back(s);
    ++it->second;
  }
  std::vector<std::pair<Bitstring, std::size_t>> out;
  out.reserve(order.size());
  for (const auto& s : order) out.emplace_back(s, counts[s]);
  return out;
}

inline double floored_log(double p, bool& floored) {
  if (!(p >= kProbabilityFloor)) {
    floored = true;
    p = kProbabilityFloor;
  }
  return std::log(p);
}

inline void check_batches(const BornMachine& m, std::span<const BasisBatch> batches) {
  if (batches.empty()) throw std::invalid_argument("no basis batches");
  for (const auto& b : batches) {
    if (b.shots.empty()) throw std::invalid_argument(std::string("empty batch for basis ") + basis_char(b.basis));
    for (const auto& s : b.shots) {
      if (s.size() != m.size()) throw std::invalid_argument("configuration length does not match the model");
    }
  }
}

}  // namespace detail

// L = sum_b [ -(1/|T_b|) sum_v ln |psi_b(v)|^2 + ln Z ].
inline LossValue nll_loss(const BornMachine& m, std::span<const BasisBatch> batches) {
  detail::check_batches(m, batches);
  const double z = norm_squared(m.psi);
  LossValue out;
  for (const auto& b : batches) {
    const auto mats = detail::rotated_matrices(m.psi, b.basis);
    double acc = 0.0;
    for (const auto& [v, count] : detail::tally(b.shots)) {
      detail::RowVec left = mats[0][static_cast<std::size_t>(v[0])];
      for (std::size_t k = 1; k < m.size(); ++k) left = left * mats[k][static_cast<std::size_t>(v[k])];
      acc += static_cast<double>(count) * detail::floored_log(std::norm(left(0)), out.floored);
    }
    out.loss += -acc / static_cast<double>(b.shots.size()) + std::log(z);
  }
  return out;
}

struct LossGradient {
  double loss = 0.0;
  bool floored = false;
  std::vector<double> grad;  // layout of get_parameters
};

// Analytic gradient. For complex entries the pair (dL/dRe, dL/dIm) is
// returned; it equals the conjugate Wirtinger derivative 2 dL/d(conj theta).
inline LossGradient nll_gradient(const BornMachine& m, std::span<const BasisBatch> batches) {
  detail::check_batches(m, batches);
  const std::size_t n = m.size();
  const MatrixProductState& psi = m.psi;

  // accumulated conjugate-direction gradient per site and physical index
  std::vector<std::array<Matrix, 2>> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = {Matrix::Zero(psi.site(k).dim(0), psi.site(k).dim(2)), Matrix::Zero(psi.site(k).dim(0), psi.site(k).dim(2))};
  }

  LossGradient out;
  std::vector<detail::RowVec> lefts(n);
  std::vector<detail::ColVec> rights(n);
  for (const auto& b : batches) {
    const auto mats = detail::rotated_matrices(psi, b.basis);
    const Matrix2 u = basis_rotation(b.basis);
    std::vector<std::array<Matrix, 2>> gb(n);
    for (std::size_t k = 0; k < n; ++k) gb[k] = {Matrix::Zero(g[k][0].rows(), g[k][0].cols()), Matrix::Zero(g[k][0].rows(), g[k][0].cols())};
    const double inv = 1.0 / static_cast<double>(b.shots.size());
    double acc = 0.0;
    for (const auto& [v, count] : detail::tally(b.shots)) {
      // lefts[k]: product of sites < k; rights[k]: product of sites > k
      lefts[0] = detail::RowVec::Ones(1);
      for (std::size_t k = 1; k < n; ++k) lefts[k] = lefts[k - 1] * mats[k - 1][static_cast<std::size_t>(v[k - 1])];
      rights[n - 1] = detail::ColVec::Ones(1);
      for (std::size_t k = n - 1; k-- > 0;) rights[k] = mats[k + 1][static_cast<std::size_t>(v[k + 1])] * rights[k + 1];
      const cplx amp = (lefts[n - 1] * mats[n - 1][static_cast<std::size_t>(v[n - 1])])(0);
      const double p = std::norm(amp);
      acc += static_cast<double>(count) * detail::floored_log(p, out.floored);
      if (!(p >= kProbabilityFloor)) continue;  // floored term is locally constant
      // d(-ln|amp|^2)/d(conj A) direction: -2 conj(dpsi / psi)
      const cplx w = -2.0 * static_cast<double>(count) * inv / std::conj(amp);
      for (std::size_t k = 0; k < n; ++k) {
        gb[k][static_cast<std::size_t>(v[k])].noalias() += w * (lefts[k].adjoint() * rights[k].adjoint());
      }
    }
    out.loss += -acc * inv;
    // map back to the computational basis: G[s] = sum_t conj(U(t, s)) Gb[t]
    for (std::size_t k = 0; k < n; ++k) {
      for (int s = 0; s < 2; ++s) {
        g[k][static_cast<std::size_t>(s)] += std::conj(u(0, s)) * gb[k][0] + std::conj(u(1, s)) * gb[k][1];
      }
    }
  }

  // normalization: + |B| * (2/Z) dZ/d(conj A)
  std::vector<Matrix> env_l(n + 1), env_r(n + 1);
  env_l[0] = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < n; ++k) {
    const Matrix a0 = psi.matrix(k, 0), a1 = psi.matrix(k, 1);
    env_l[k + 1] = a0.adjoint() * env_l[k] * a0 + a1.adjoint() * env_l[k] * a1;
  }
  env_r[n] = Matrix::Ones(1, 1);
  for (std::size_t k = n; k-- > 0;) {
    const Matrix a0 = psi.matrix(k, 0), a1 = psi.matrix(k, 1);
    env_r[k] = a0 * env_r[k + 1] * a0.adjoint() + a1 * env_r[k + 1] * a1.adjoint();
  }
  const double z = env_l[n](0, 0).real();
  if (!(z > 0.0)) throw TrainingError("model has zero norm");
  out.loss += static_cast<double>(batches.size()) * std::log(z);
  const double scale = 2.0 * static_cast<double>(batches.size()) / z;
  for (std::size_t k = 0; k < n; ++k) {
    for (int s = 0; s < 2; ++s) {
      g[k][static_cast<std::size_t>(s)] += scale * (env_l[k] * psi.matrix(k, s) * env_r[k + 1]);
    }
  }

  out.grad.reserve(m.parameter_count());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& t = psi.site(k);
    for (std::size_t a = 0; a < t.dim(0); ++a) {
      for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t b = 0; b < t.dim(2); ++b) {
          const cplx x = g[k][s](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
          out.grad.push_back(x.real());
          if (m.complex_valued) out.grad.push_back(x.imag());
        }
      }
    }
  }
  return out;
}

// ---- Adam ----------------------------------------------------------------

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t step = 0;
};

inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& st, const AdamHyper& h) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: parameter and gradient sizes differ");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (st.m.size() != params.size()) throw std::invalid_argument("adam_step: state size mismatch");
  ++st.step;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = h.beta1 * st.m[i] + (1.0 - h.beta1) * grads[i];
    st.v[i] = h.beta2 * st.v[i] + (1.0 - h.beta2) * grads[i] * grads[i];
    const double mhat = st.m[i] / c1;
    const double vhat = st.v[i] / c2;
    params[i] -= h.learning_rate * mhat / (std::sqrt(vhat) + h.epsilon);
  }
}

// ---- training loop -------------------------------------------------------

struct TrainConfig {
  std::vector<PauliBasis> bases{PauliBasis::Z};
  AdamHyper adam;
  std::size_t batch_size = 500;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  std::optional<double> gradient_clip;   // max L2 norm of a step's gradient
  std::size_t plateau_window = 10;       // 0 disables early stopping
  double plateau_tolerance = 1e-5;
  std::optional<std::size_t> spectrum_cut;  // record entanglement spectrum each epoch
  std::size_t spectrum_top = 2;

  void validate() const {
    if (bases.empty()) throw std::invalid_argument("TrainConfig: bases must be non-empty");
    for (std::size_t i = 0; i < bases.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (bases[i] == bases[j]) throw std::invalid_argument("TrainConfig: duplicate basis");
      }
    }
    if (!(adam.learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double loss_minus_entropy = 0.0;
  std::optional<double> fidelity;
  std::optional<double> fidelity_step_std;  // spread of F over the epoch's steps
  std::vector<double> spectrum;
  double wall_seconds = 0.0;
  bool floored = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  double data_entropy = 0.0;  // sum over bases of S(T_b)
  bool early_stopped = false;
};

struct TrainResult {
  BornMachine model;
  TrainHistory history;
};

inline double state_fidelity(const MatrixProductState& a, const MatrixProductState& b) {
  if (a.size() != b.size()) throw std::invalid_argument("fidelity: site counts differ");
  const double na = norm_squared(a), nb = norm_squared(b);
  return std::norm(inner_product(a, b)) / (na * nb);
}

inline TrainResult train(BornMachine model, std::span<const MeasurementDataset> datasets, const TrainConfig& cfg,
                         const std::optional<MatrixProductState>& reference = std::nullopt) {
  cfg.validate();
  validate_training_sets(datasets);
  if (datasets.size() != cfg.bases.size()) throw std::invalid_argument("train: dataset count does not match configured bases");
  for (auto b : cfg.bases) {
    if (std::none_of(datasets.begin(), datasets.end(), [b](const auto& d) { return d.basis == b; })) {
      throw std::invalid_argument(std::string("train: no dataset for basis ") + basis_char(b));
    }
  }
  if (datasets[0].n_sites != model.size()) {
    throw std::invalid_argument("train: datasets have " + std::to_string(datasets[0].n_sites) + " sites, model has " +
                                std::to_string(model.size()));
  }
  // order datasets by the configured basis order
  std::vector<const MeasurementDataset*> sets;
  for (auto b : cfg.bases) {
    for (const auto& d : datasets) {
      if (d.basis == b) sets.push_back(&d);
    }
  }

  TrainResult res;
  for (const auto* d : sets) res.history.data_entropy += shannon_entropy(empirical_distribution(*d));
  std::vector<BasisBatch> full;
  for (const auto* d : sets) full.push_back({d->basis, d->shots});

  const std::size_t count = sets[0]->shots.size();
  const std::size_t steps = (count + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<std::vector<Bitstring>> shuffled(sets.size());
  std::vector<double> params = get_parameters(model);
  AdamState adam;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t b = 0; b < sets.size(); ++b) {
      shuffled[b] = sets[b]->shots;
      RandomStream rng(derive_seed(cfg.seed, std::string("batch-order-") + basis_char(sets[b]->basis), epoch));
      rng.shuffle(std::span<Bitstring>(shuffled[b]));
    }
    double f_sum = 0.0, f_sq = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      const std::size_t lo = step * cfg.batch_size;
      const std::size_t len = std::min(cfg.batch_size, count - lo);
      std::vector<BasisBatch> batch;
      for (std::size_t b = 0; b < sets.size(); ++b) {
        batch.push_back({sets[b]->basis, std::span<const Bitstring>(shuffled[b]).subspan(lo, len)});
      }
      LossGradient lg = nll_gradient(model, batch);
      bool finite = std::isfinite(lg.loss);
      for (double x : lg.grad) finite = finite && std::isfinite(x);
      if (!finite) {
        std::string first = batch[0].shots.empty() ? "" : batch[0].shots[0].to_string();
        throw TrainingError("non-finite loss or gradient at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(step) + " (batch " + std::to_string(lo) + ".." + std::to_string(lo + len) +
                            ", first shot " + first + ", batch loss " + format_double(lg.loss) + ")");
      }
      if (cfg.gradient_clip) {
        double norm = 0.0;
        for (double x : lg.grad) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > *cfg.gradient_clip) {
          for (double& x : lg.grad) x *= *cfg.gradient_clip / norm;
        }
      }
      adam_step(params, lg.grad, adam, cfg.adam);
      set_parameters(model, params);
      if (reference) {
        const double f = state_fidelity(*reference, model.psi);
        f_sum += f;
        f_sq += f * f;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    const LossValue lv = nll_loss(model, full);
    if (!std::isfinite(lv.loss)) throw TrainingError("non-finite epoch loss at epoch " + std::to_string(epoch + 1));
    rec.loss = lv.loss;
    rec.floored = lv.floored;
    rec.loss_minus_entropy = lv.loss - res.history.data_entropy;
    if (reference) {
      rec.fidelity = state_fidelity(*reference, model.psi);
      const double mean = f_sum / static_cast<double>(steps);
      rec.fidelity_step_std = std::sqrt(std::max(0.0, f_sq / static_cast<double>(steps) - mean * mean));
    }
    if (cfg.spectrum_cut) {
      auto spec = entanglement_spectrum(model.psi, *cfg.spectrum_cut);
      spec.resize(std::min(spec.size(), cfg.spectrum_top));
      spec.resize(cfg.spectrum_top, 0.0);
      rec.spectrum = std::move(spec);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.epochs.push_back(std::move(rec));

    const auto& h = res.history.epochs;
    if (cfg.plateau_window > 0 && h.size() > cfg.plateau_window) {
      const double before = h[h.size() - 1 - cfg.plateau_window].loss;
      if (before - h.back().loss < cfg.plateau_tolerance) {
        res.history.early_stopped = true;
        break;
      }
    }
  }
  res.model = std::move(model);
  return res;
}

// Wall time is left out so reruns produce identical files.
inline std::string history_csv(const TrainHistory& h) {
  std::size_t top = 0;
  for (const auto& e : h.epochs) top = std::max(top, e.spectrum.size());
  std::string out = "epoch,loss,loss_minus_entropy,fidelity,fidelity_step_std,floored";
  for (std::size_t i = 0; i < top; ++i) out += ",spectrum_" + std::to_string(i);
  out += "\n";
  for (const auto& e : h.epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.loss) + "," + format_double(e.loss_minus_entropy) + "," +
           (e.fidelity ? format_double(*e.fidelity) : std::string()) + "," +
           (e.fidelity_step_std ? format_double(*e.fidelity_step_std) : std::string()) + "," +
           (e.floored ? "1" : "0");
    for (std::size_t i = 0; i < top; ++i) out += "," + (i < e.spectrum.size() ? format_double(e.spectrum[i]) : std::string());
    out += "\n";
  }
  return out;
}

}  // namespace bebm

#endif  // BEBM_TRAINING_HPP
