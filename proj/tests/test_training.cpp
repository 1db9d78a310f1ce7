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


#include <gtest/gtest.h>

#include "bebm/training.hpp"
#include "oracles.hpp"

using namespace bebm;

namespace {

BornMachine random_machine(std::size_t n, std::size_t d, bool cx, std::uint64_t seed) {
  return BornMachine{oracle::random_mps(n, d, cx, seed), cx, d};
}

std::vector<Bitstring> random_shots(std::size_t n, std::size_t count, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<Bitstring> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(n, rng() & ((1ULL << n) - 1));
  return out;
}

// L = sum_b -(1/|B|) sum_v ln(|<v|U_b|psi>|^2 / Z) from full statevectors.
double brute_force_loss(const BornMachine& m, std::span<const BasisBatch> batches) {
  const auto v = oracle::statevector(m.psi);
  const double z = v.squaredNorm();
  double loss = 0.0;
  for (const auto& b : batches) {
    const auto r = oracle::rotate_all(v, b.basis, m.size());
    double acc = 0.0;
    for (const auto& s : b.shots) acc += std::log(std::norm(r(static_cast<Eigen::Index>(s.index()))) / z);
    loss -= acc / static_cast<double>(b.shots.size());
  }
  return loss;
}

// Fourth-order central differences.
std::vector<double> numeric_gradient(const BornMachine& m, std::span<const BasisBatch> batches, double h) {
  BornMachine work = m;
  std::vector<double> p = get_parameters(m), g(p.size());
  auto f = [&](std::size_t i, double shift) {
    std::vector<double> q = p;
    q[i] += shift;
    set_parameters(work, q);
    return nll_loss(work, batches).loss;
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    g[i] = (8.0 * (f(i, h) - f(i, -h)) - (f(i, 2 * h) - f(i, -2 * h))) / (12.0 * h);
  }
  return g;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, 1.0);
}

}  // namespace

TEST(InitModel, DeterministicAndNonNegative) {
  const auto a = init_model(6, 3, false, 5), b = init_model(6, 3, false, 5);
  EXPECT_EQ(a.psi.sites(), b.psi.sites());
  EXPECT_NE(init_model(6, 3, false, 6).psi.sites(), a.psi.sites());
  for (std::uint64_t i = 0; i < 64; ++i) {
    const cplx amp = amplitude(a.psi, Bitstring::from_index(6, i));
    EXPECT_GE(amp.real(), 0.0);
    EXPECT_EQ(amp.imag(), 0.0);
  }
  EXPECT_EQ(init_model(6, 3, true, 5).parameter_count(), 2 * a.parameter_count());
  EXPECT_THROW(init_model(1, 3, false, 5), std::invalid_argument);
  EXPECT_THROW(init_model(4, 0, false, 5), std::invalid_argument);
}

TEST(Parameters, RoundTrip) {
  auto m = random_machine(4, 3, true, 7);
  const auto p = get_parameters(m);
  EXPECT_EQ(p.size(), m.parameter_count());
  set_parameters(m, p);
  EXPECT_EQ(get_parameters(m), p);
  EXPECT_THROW(set_parameters(m, std::vector<double>(3)), std::invalid_argument);
}

TEST(NllLoss, EqualsEntropyWhenModelMatchesData) {
  // Uniform product model against data holding each configuration once.
  const auto m = BornMachine{MatrixProductState::product_state(3, 1.0, 1.0), false, 1};
  std::vector<Bitstring> shots;
  for (std::uint64_t i = 0; i < 8; ++i) shots.push_back(Bitstring::from_index(3, i));
  const BasisBatch batch{PauliBasis::Z, shots};
  const double entropy = shannon_entropy(empirical_distribution(shots, 3));
  EXPECT_NEAR(nll_loss(m, std::span(&batch, 1)).loss, entropy, 1e-9);
  EXPECT_NEAR(nll_loss(m, std::span(&batch, 1)).loss, 3.0 * std::log(2.0), 1e-12);
}

TEST(NllLoss, UniformModelOnAnyBatch) {
  const auto m = BornMachine{MatrixProductState::product_state(5, 0.3, 0.3), false, 1};
  const auto shots = random_shots(5, 37, 1);
  const BasisBatch batch{PauliBasis::Z, shots};
  EXPECT_NEAR(nll_loss(m, std::span(&batch, 1)).loss, 5.0 * std::log(2.0), 1e-12);
}

TEST(NllLoss, MatchesBruteForceForTwoBases) {
  const auto m = random_machine(6, 3, true, 8);
  const auto zs = random_shots(6, 40, 2), xs = random_shots(6, 40, 3);
  const std::vector<BasisBatch> batches{{PauliBasis::Z, zs}, {PauliBasis::X, xs}};
  EXPECT_NEAR(nll_loss(m, batches).loss, brute_force_loss(m, batches), 1e-10);
}

TEST(NllLoss, SymmetricInBasisOrderAndPhaseInvariant) {
  auto m = random_machine(5, 3, true, 9);
  const auto ys = random_shots(5, 30, 4), zs = random_shots(5, 30, 5);
  const std::vector<BasisBatch> ab{{PauliBasis::Y, ys}, {PauliBasis::Z, zs}};
  const std::vector<BasisBatch> ba{{PauliBasis::Z, zs}, {PauliBasis::Y, ys}};
  const double loss = nll_loss(m, ab).loss;
  EXPECT_NEAR(loss, nll_loss(m, ba).loss, 1e-12);
  const cplx phase = std::polar(1.0, 0.37);
  BornMachine rotated = m;
  for (std::size_t k = 0; k < 5; ++k) rotated.psi.mutable_site(k) *= phase;
  EXPECT_NEAR(nll_loss(rotated, ab).loss, loss, 1e-10);
  for (std::uint64_t i = 0; i < 32; ++i) {
    const auto v = Bitstring::from_index(5, i);
    EXPECT_NEAR(std::norm(amplitude(rotated.psi, v)) / norm_squared(rotated.psi),
                std::norm(amplitude(m.psi, v)) / norm_squared(m.psi), 1e-10);
  }
}

TEST(NllLoss, FloorsVanishingProbabilities) {
  const auto m = BornMachine{MatrixProductState::product_state(Bitstring(3)), false, 1};
  const std::vector<Bitstring> shots{Bitstring::parse("111")};
  const BasisBatch batch{PauliBasis::Z, shots};
  const auto lv = nll_loss(m, std::span(&batch, 1));
  EXPECT_TRUE(lv.floored);
  EXPECT_TRUE(std::isfinite(lv.loss));
}

TEST(NllGradient, MatchesFiniteDifferencesAcrossBasisSubsets) {
  const std::vector<std::vector<PauliBasis>> subsets{{PauliBasis::X}, {PauliBasis::Y}, {PauliBasis::Z},
                                                     {PauliBasis::X, PauliBasis::Y}, {PauliBasis::X, PauliBasis::Z},
                                                     {PauliBasis::Y, PauliBasis::Z}};
  std::uint64_t seed = 100;
  for (const auto& bases : subsets) {
    for (bool cx : {false, true}) {
      const std::size_t n = 3 + seed % 3, d = 1 + seed % 4;
      const auto m = random_machine(n, d, cx, seed);
      std::vector<std::vector<Bitstring>> shots;
      for (std::size_t b = 0; b < bases.size(); ++b) shots.push_back(random_shots(n, 25, seed * 7 + b));
      std::vector<BasisBatch> batches;
      for (std::size_t b = 0; b < bases.size(); ++b) batches.push_back({bases[b], shots[b]});
      const auto g = nll_gradient(m, batches);
      EXPECT_NEAR(g.loss, nll_loss(m, batches).loss, 1e-12);
      EXPECT_LT(max_relative_error(g.grad, numeric_gradient(m, batches, 1e-5)), 1e-6)
          << "n=" << n << " D=" << d << " complex=" << cx << " bases=" << bases.size();
      ++seed;
    }
  }
}

TEST(NllGradient, ComplexMixedBasesFiveSites) {
  const auto m = random_machine(5, 3, true, 200);
  const auto zs = random_shots(5, 50, 1), xs = random_shots(5, 50, 2);
  const std::vector<BasisBatch> batches{{PauliBasis::X, xs}, {PauliBasis::Z, zs}};
  EXPECT_LT(max_relative_error(nll_gradient(m, batches).grad, numeric_gradient(m, batches, 1e-5)), 1e-6);
}

TEST(NllGradient, VanishesAtEntropyBound) {
  const auto m = BornMachine{MatrixProductState::product_state(2, 1.0, 1.0), false, 1};
  const std::vector<Bitstring> shots{Bitstring::parse("00"), Bitstring::parse("01"), Bitstring::parse("10"),
                                     Bitstring::parse("11")};
  const BasisBatch batch{PauliBasis::Z, shots};
  const auto g = nll_gradient(m, std::span(&batch, 1));
  double norm = 0.0;
  for (double x : g.grad) norm += x * x;
  EXPECT_LT(std::sqrt(norm), 1e-10);
}

TEST(NllGradient, SymmetricSingleSiteData) {
  // Two-site D=1 model with 50/50 data on both sites and identical up/down
  // weights: the gradient along the (up - down) direction of each site vanishes.
  const auto m = BornMachine{MatrixProductState::product_state(2, 0.8, 0.8), false, 1};
  const std::vector<Bitstring> shots{Bitstring::parse("00"), Bitstring::parse("11"), Bitstring::parse("01"),
                                     Bitstring::parse("10")};
  const BasisBatch batch{PauliBasis::Z, shots};
  const auto g = nll_gradient(m, std::span(&batch, 1));
  ASSERT_EQ(g.grad.size(), 4u);
  EXPECT_NEAR(g.grad[0] - g.grad[1], 0.0, 1e-10);
  EXPECT_NEAR(g.grad[2] - g.grad[3], 0.0, 1e-10);
}

TEST(Adam, ZeroGradientKeepsParameters) {
  std::vector<double> p{1.0, -2.0};
  AdamState st;
  st.m = {0.5, 0.5};
  st.v = {0.1, 0.1};
  st.step = 3;
  const std::vector<double> g{0.0, 0.0};
  const auto before = st;
  adam_step(p, g, st, AdamHyper{});
  EXPECT_LT(std::abs(st.m[0]), std::abs(before.m[0]));
  EXPECT_LT(st.v[0], before.v[0]);
  // bias-corrected momentum still moves the parameters; a fresh state does not
  std::vector<double> q{1.0, -2.0};
  AdamState fresh;
  adam_step(q, g, fresh, AdamHyper{});
  EXPECT_EQ(q, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  std::vector<double> p{0.0, 0.0, 0.0};
  const std::vector<double> g{0.5, -3.0, 1e-3};
  AdamState st;
  AdamHyper h;
  h.learning_rate = 0.01;
  adam_step(p, g, st, h);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], -h.learning_rate * g[i] / (std::abs(g[i]) + h.epsilon), 1e-15);
}

TEST(Adam, MatchesReferenceRecurrenceOnQuadratic) {
  // f(x) = 0.5 x^T diag(a) x; reference Adam written independently.
  const std::vector<double> a{1.0, 10.0, 0.1, 3.0};
  std::vector<double> x{1.0, -1.0, 2.0, 0.5}, rx = x, m(4, 0.0), v(4, 0.0);
  AdamHyper h;
  h.learning_rate = 0.05;
  AdamState st;
  for (int t = 1; t <= 100; ++t) {
    std::vector<double> g(4);
    for (std::size_t i = 0; i < 4; ++i) g[i] = a[i] * x[i];
    adam_step(x, g, st, h);
    for (std::size_t i = 0; i < 4; ++i) {
      const double gi = a[i] * rx[i];
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      const double mh = m[i] / (1.0 - std::pow(0.9, t)), vh = v[i] / (1.0 - std::pow(0.999, t));
      rx[i] -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(x[i], rx[i], 1e-10);
}

TEST(Train, ZeroLearningRateLeavesModelUnchanged) {
  const auto truth = oracle::random_mps(4, 2, false, 300);
  const auto data = simulate_measurements(truth, PauliBasis::Z, 200, 1);
  const auto m = init_model(4, 2, false, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.adam.learning_rate = 0.0;
  const auto r = train(m, std::span(&data, 1), cfg);
  EXPECT_EQ(r.model.psi.sites(), m.psi.sites());
  ASSERT_EQ(r.history.epochs.size(), 1u);
}

TEST(Train, DeterministicHistoryAndEntropyBound) {
  const auto truth = normalize(oracle::random_mps(5, 2, true, 301), 0).state;
  const std::vector<MeasurementDataset> data{simulate_measurements(truth, PauliBasis::X, 1000, 2),
                                             simulate_measurements(truth, PauliBasis::Z, 1000, 2)};
  TrainConfig cfg;
  cfg.bases = {PauliBasis::X, PauliBasis::Z};
  cfg.epochs = 8;
  cfg.batch_size = 100;
  cfg.adam.learning_rate = 0.02;
  cfg.seed = 4;
  cfg.spectrum_cut = 2;
  const auto m = init_model(5, 2, true, 5);
  const auto a = train(m, data, cfg, truth), b = train(m, data, cfg, truth);
  ASSERT_EQ(a.history.epochs.size(), b.history.epochs.size());
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
    EXPECT_EQ(a.history.epochs[e].loss, b.history.epochs[e].loss);
    EXPECT_GE(a.history.epochs[e].loss, a.history.data_entropy - 1e-9);
    EXPECT_EQ(a.history.epochs[e].spectrum.size(), 2u);
    ASSERT_TRUE(a.history.epochs[e].fidelity.has_value());
  }
  EXPECT_EQ(history_csv(a.history), history_csv(b.history));
  EXPECT_LT(a.history.epochs.back().loss, a.history.epochs.front().loss);
}

TEST(Train, LearnsSmallPositiveState) {
  const auto truth = normalize(oracle::random_mps(4, 2, false, 302), 0).state;
  MatrixProductState positive = truth;
  for (std::size_t k = 0; k < 4; ++k) {
    for (auto& x : positive.mutable_site(k).data()) x = std::abs(x.real());
  }
  const auto data = simulate_measurements(positive, PauliBasis::Z, 5000, 3);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 250;
  cfg.adam.learning_rate = 0.02;
  cfg.plateau_window = 0;
  const auto r = train(init_model(4, 2, false, 6), std::span(&data, 1), cfg, positive);
  EXPECT_GT(*r.history.epochs.back().fidelity, 0.95);
}

TEST(Train, ValidatesInputs) {
  const auto truth = oracle::random_mps(4, 2, false, 303);
  const auto z = simulate_measurements(truth, PauliBasis::Z, 100, 1);
  const auto x = simulate_measurements(truth, PauliBasis::X, 100, 1);
  TrainConfig cfg;
  cfg.bases = {PauliBasis::X};
  EXPECT_THROW(train(init_model(4, 2, false, 1), std::span(&z, 1), cfg), std::invalid_argument);
  cfg.bases = {PauliBasis::Z};
  EXPECT_THROW(train(init_model(5, 2, false, 1), std::span(&z, 1), cfg), std::invalid_argument);
  cfg.bases = {PauliBasis::Z, PauliBasis::Z};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.bases = {PauliBasis::Z};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.batch_size = 10;
  const std::vector<MeasurementDataset> both{x, z};
  EXPECT_THROW(train(init_model(4, 2, false, 1), both, cfg), std::invalid_argument);
}
