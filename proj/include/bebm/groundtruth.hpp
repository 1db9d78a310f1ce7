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

#ifndef BEBM_GROUNDTRUTH_HPP
#define BEBM_GROUNDTRUTH_HPP

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "bebm/io.hpp"
#include "bebm/models.hpp"
#include "bebm/mps.hpp"
#include "bebm/observables.hpp"

namespace bebm {

struct GroundStateResult {
  MatrixProductState state;
  double energy = 0.0;
  std::optional<double> gap;       // E1 - E0 when computed
  std::vector<double> energies;    // lowest eigenvalues (ED only)
  bool converged = false;
  std::vector<double> sweep_log;   // energy after each sweep (DMRG)
};

inline constexpr std::size_t kMaxEdSites = 16;
inline constexpr Eigen::Index kDenseEighLimit = 1024;

// Lowest `k` eigenpairs of a full-space Hamiltonian; dense eigh for small
// spaces, Lanczos with deflation otherwise.
inline GroundStateResult exact_ground_state(const SparseMatrix& h, std::size_t k = 1) {
  const Eigen::Index dim = h.rows();
  if (h.cols() != dim) throw std::invalid_argument("exact_ground_state: matrix is not square");
  if (dim > (Eigen::Index{1} << kMaxEdSites)) {
    throw std::invalid_argument("exact_ground_state: dimension " + std::to_string(dim) + " exceeds 2^16");
  }
  std::size_t n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim) throw std::invalid_argument("exact_ground_state: dimension is not a power of 2");
  k = std::max<std::size_t>(1, std::min<std::size_t>(k, static_cast<std::size_t>(dim)));

  std::vector<double> values;
  Vector ground;
  if (dim <= kDenseEighLimit) {
    const Matrix dense = Matrix(h);
    const EighResult es = eigh(dense);
    for (std::size_t j = 0; j < k; ++j) values.push_back(es.values[static_cast<std::size_t>(dim) - 1 - j]);
    ground = es.vectors.col(dim - 1);
  } else {
    LanczosOptions opt;
    opt.krylov_dim = 120;
    opt.tolerance = 1e-12;
    const LinearMap apply = [&h](const Vector& x, Vector& y) { y.noalias() = h * x; };
    const auto pairs = lanczos_lowest_k(apply, dim, k, opt);
    for (const auto& p : pairs) values.push_back(p.value);
    ground = pairs.front().vector;
  }
  GroundStateResult out;
  std::vector<cplx> vec(ground.data(), ground.data() + ground.size());
  out.state = normalize(from_statevector(vec, n), 0).state;
  out.energy = values.front();
  out.energies = values;
  if (k >= 2) out.gap = values[1] - values[0];
  out.converged = true;
  return out;
}

struct DmrgOptions {
  std::size_t max_bond = 64;
  double cutoff = 1e-10;
  std::size_t max_sweeps = 30;
  std::size_t min_sweeps = 2;
  double energy_tolerance = 1e-10;  // relative change per sweep
  std::size_t initial_bond = 8;
  std::uint64_t seed = 1;
  double init_noise = 0.0;          // perturbation added to a warm start
  std::vector<MatrixProductState> penalty_states;  // orthogonality targets
  double penalty_weight = 0.0;
  LanczosOptions lanczos{24, 8, 1e-12};
};

namespace detail {

using Env = std::vector<Matrix>;  // indexed by MPO bond; each (bra bond x ket bond)

// Two-site MPO tensor W12[(w, w2)] as a list of nonzero 4x4 blocks.
struct PairTerm {
  std::size_t wl, wr;
  Eigen::Matrix4cd op;  // (s1' s2') x (s1 s2)
};

inline std::vector<PairTerm> pair_terms(const DenseTensor& w1, const DenseTensor& w2) {
  std::vector<PairTerm> out;
  for (std::size_t a = 0; a < w1.dim(0); ++a) {
    for (std::size_t c = 0; c < w2.dim(3); ++c) {
      Eigen::Matrix4cd op = Eigen::Matrix4cd::Zero();
      for (std::size_t b = 0; b < w1.dim(3); ++b) {
        for (std::size_t s1 = 0; s1 < 2; ++s1) {
          for (std::size_t t1 = 0; t1 < 2; ++t1) {
            const cplx x = w1.at({a, s1, t1, b});
            if (x == cplx(0.0)) continue;
            for (std::size_t s2 = 0; s2 < 2; ++s2) {
              for (std::size_t t2 = 0; t2 < 2; ++t2) {
                op(static_cast<Eigen::Index>(2 * s1 + s2), static_cast<Eigen::Index>(2 * t1 + t2)) += x * w2.at({b, s2, t2, c});
              }
            }
          }
        }
      }
      if (op.cwiseAbs().maxCoeff() > 0.0) out.push_back({a, c, op});
    }
  }
  return out;
}

inline Env left_env_step(const Env& l, const std::array<Matrix, 2>& a, const DenseTensor& w) {
  Env out(w.dim(3), Matrix::Zero(a[0].cols(), a[0].cols()));
  for (std::size_t wl = 0; wl < w.dim(0); ++wl) {
    for (std::size_t t = 0; t < 2; ++t) {
      const Matrix lt = l[wl] * a[t];
      for (std::size_t s = 0; s < 2; ++s) {
        Matrix mid;
        bool have = false;
        for (std::size_t wr = 0; wr < w.dim(3); ++wr) {
          const cplx c = w.at({wl, s, t, wr});
          if (c == cplx(0.0)) continue;
          if (!have) {
            mid = a[s].adjoint() * lt;
            have = true;
          }
          out[wr] += c * mid;
        }
      }
    }
  }
  return out;
}

inline Env right_env_step(const Env& r, const std::array<Matrix, 2>& a, const DenseTensor& w) {
  Env out(w.dim(0), Matrix::Zero(a[0].rows(), a[0].rows()));
  for (std::size_t wr = 0; wr < w.dim(3); ++wr) {
    for (std::size_t t = 0; t < 2; ++t) {
      const Matrix rt = r[wr] * a[t].transpose();
      for (std::size_t s = 0; s < 2; ++s) {
        Matrix mid;
        bool have = false;
        for (std::size_t wl = 0; wl < w.dim(0); ++wl) {
          const cplx c = w.at({wl, s, t, wr});
          if (c == cplx(0.0)) continue;
          if (!have) {
            mid = a[s].conjugate() * rt;
            have = true;
          }
          out[wl] += c * mid;
        }
      }
    }
  }
  return out;
}

inline std::array<Matrix, 2> split_site(const DenseTensor& t) {
  const auto dl = static_cast<Eigen::Index>(t.dim(0));
  const auto dr = static_cast<Eigen::Index>(t.dim(2));
  std::array<Matrix, 2> m{Matrix(dl, dr), Matrix(dl, dr)};
  for (Eigen::Index a = 0; a < dl; ++a) {
    for (int s = 0; s < 2; ++s) {
      for (Eigen::Index b = 0; b < dr; ++b) m[static_cast<std::size_t>(s)](a, b) = t[static_cast<std::size_t>((a * 2 + s) * dr + b)];
    }
  }
  return m;
}

// Overlap environments with a fixed reference state: (ref bond x ket bond).
inline Matrix overlap_left_step(const Matrix& l, const std::array<Matrix, 2>& ref, const std::array<Matrix, 2>& a) {
  return ref[0].adjoint() * l * a[0] + ref[1].adjoint() * l * a[1];
}
inline Matrix overlap_right_step(const Matrix& r, const std::array<Matrix, 2>& ref, const std::array<Matrix, 2>& a) {
  return ref[0].conjugate() * r * a[0].transpose() + ref[1].conjugate() * r * a[1].transpose();
}

class TwoSiteDmrg {
 public:
  TwoSiteDmrg(const MatrixProductOperator& h, const DmrgOptions& opt, MatrixProductState init)
      : h_(h), opt_(opt), n_(h.size()) {
    MatrixProductState c = normalize(init, 0).state;
    for (std::size_t k = 0; k < n_; ++k) sites_.push_back(split_site(c.site(k)));
    for (const auto& p : opt_.penalty_states) {
      std::vector<std::array<Matrix, 2>> ref;
      const MatrixProductState pn = normalize(p, 0).state;
      for (std::size_t k = 0; k < n_; ++k) ref.push_back(split_site(pn.site(k)));
      refs_.push_back(std::move(ref));
    }
    left_.assign(n_ + 1, Env{});
    right_.assign(n_ + 1, Env{});
    left_[0] = Env(1, Matrix::Ones(1, 1));
    right_[n_] = Env(1, Matrix::Ones(1, 1));
    ov_left_.assign(refs_.size(), std::vector<Matrix>(n_ + 1));
    ov_right_.assign(refs_.size(), std::vector<Matrix>(n_ + 1));
    for (std::size_t p = 0; p < refs_.size(); ++p) {
      ov_left_[p][0] = Matrix::Ones(1, 1);
      ov_right_[p][n_] = Matrix::Ones(1, 1);
    }
    for (std::size_t k = n_; k-- > 1;) update_right(k);
    for (std::size_t k = 0; k + 1 < n_; ++k) pairs_.push_back(pair_terms(h_.site(k), h_.site(k + 1)));
  }

  GroundStateResult run() {
    GroundStateResult out;
    double previous = std::numeric_limits<double>::infinity();
    double energy = previous;
    for (std::size_t sweep = 0; sweep < opt_.max_sweeps; ++sweep) {
      for (std::size_t i = 0; i + 1 < n_; ++i) energy = optimize_bond(i, true);
      for (std::size_t i = n_ - 1; i-- > 0;) energy = optimize_bond(i, false);
      out.sweep_log.push_back(energy);
      const double change = std::abs(previous - energy);
      previous = energy;
      if (sweep + 1 >= opt_.min_sweeps && change < opt_.energy_tolerance * std::max(1.0, std::abs(energy))) {
        out.converged = true;
        break;
      }
    }
    std::vector<DenseTensor> tensors;
    for (const auto& s : sites_) tensors.push_back(site_from_matrices(s[0], s[1]));
    out.state = normalize(MatrixProductState(std::move(tensors), true), 0).state;
    out.energy = energy;
    return out;
  }

 private:
  void update_left(std::size_t k) {  // builds left_[k+1] from site k
    left_[k + 1] = left_env_step(left_[k], sites_[k], h_.site(k));
    for (std::size_t p = 0; p < refs_.size(); ++p) {
      ov_left_[p][k + 1] = overlap_left_step(ov_left_[p][k], refs_[p][k], sites_[k]);
    }
  }
  void update_right(std::size_t k) {  // builds right_[k] from site k
    right_[k] = right_env_step(right_[k + 1], sites_[k], h_.site(k));
    for (std::size_t p = 0; p < refs_.size(); ++p) {
      ov_right_[p][k] = overlap_right_step(ov_right_[p][k + 1], refs_[p][k], sites_[k]);
    }
  }

  double optimize_bond(std::size_t i, bool moving_right) {
    const Env& l = left_[i];
    const Env& r = right_[i + 2];
    const Eigen::Index dl = sites_[i][0].rows();
    const Eigen::Index dr = sites_[i + 1][0].cols();
    const Eigen::Index block = dl * dr;
    const auto& terms = pairs_[i];

    // theta stored as 4 blocks (s1 s2) of dl x dr, row-major within a block
    auto unpack = [&](const Vector& x, std::size_t s) {
      return Eigen::Map<const Matrix>(x.data() + static_cast<Eigen::Index>(s) * block, dl, dr);
    };
    std::vector<Vector> penalty_vecs;
    for (std::size_t p = 0; p < refs_.size(); ++p) {
      Vector phi(4 * block);
      const Matrix& lo = ov_left_[p][i];
      const Matrix& ro = ov_right_[p][i + 2];
      for (std::size_t s1 = 0; s1 < 2; ++s1) {
        for (std::size_t s2 = 0; s2 < 2; ++s2) {
          const Matrix m = lo.adjoint() * refs_[p][i][s1] * refs_[p][i + 1][s2] * ro.conjugate();
          Eigen::Map<Matrix>(phi.data() + static_cast<Eigen::Index>(2 * s1 + s2) * block, dl, dr) = m;
        }
      }
      penalty_vecs.push_back(std::move(phi));
    }

    const LinearMap apply = [&](const Vector& x, Vector& y) {
      y.setZero(x.size());
      const std::size_t wl_dim = l.size();
      // X[w][t] = L[w] * theta[t]
      std::vector<std::array<Matrix, 4>> lx(wl_dim);
      std::vector<bool> have(wl_dim, false);
      std::vector<std::array<Matrix, 4>> acc(r.size());
      std::vector<bool> acc_used(r.size(), false);
      for (const auto& term : terms) {
        if (!have[term.wl]) {
          for (std::size_t t = 0; t < 4; ++t) lx[term.wl][t] = l[term.wl] * unpack(x, t);
          have[term.wl] = true;
        }
        if (!acc_used[term.wr]) {
          for (auto& m : acc[term.wr]) m = Matrix::Zero(dl, dr);
          acc_used[term.wr] = true;
        }
        for (Eigen::Index so = 0; so < 4; ++so) {
          for (Eigen::Index si = 0; si < 4; ++si) {
            const cplx c = term.op(so, si);
            if (c == cplx(0.0)) continue;
            acc[term.wr][static_cast<std::size_t>(so)].noalias() += c * lx[term.wl][static_cast<std::size_t>(si)];
          }
        }
      }
      for (std::size_t wr = 0; wr < r.size(); ++wr) {
        if (!acc_used[wr]) continue;
        const Matrix rt = r[wr].transpose();
        for (std::size_t so = 0; so < 4; ++so) {
          Eigen::Map<Matrix>(y.data() + static_cast<Eigen::Index>(so) * block, dl, dr).noalias() += acc[wr][so] * rt;
        }
      }
      for (const auto& phi : penalty_vecs) y += opt_.penalty_weight * phi.dot(x) * phi;
    };

    Vector theta(4 * block);
    for (std::size_t s1 = 0; s1 < 2; ++s1) {
      for (std::size_t s2 = 0; s2 < 2; ++s2) {
        Eigen::Map<Matrix>(theta.data() + static_cast<Eigen::Index>(2 * s1 + s2) * block, dl, dr) =
            sites_[i][s1] * sites_[i + 1][s2];
      }
    }
    const EigenPair ep = lanczos_lowest(apply, theta, {}, opt_.lanczos);

    // (dl*2) x (2*dr) matrix for the split
    Matrix big(2 * dl, 2 * dr);
    for (std::size_t s1 = 0; s1 < 2; ++s1) {
      for (std::size_t s2 = 0; s2 < 2; ++s2) {
        const Matrix m = unpack(ep.vector, 2 * s1 + s2);
        for (Eigen::Index a = 0; a < dl; ++a) {
          for (Eigen::Index b = 0; b < dr; ++b) big(a * 2 + static_cast<Eigen::Index>(s1), static_cast<Eigen::Index>(s2) * dr + b) = m(a, b);
        }
      }
    }
    SvdResult svd = svd_truncated(big, opt_.max_bond, opt_.cutoff);
    const Eigen::Index kept = static_cast<Eigen::Index>(svd.s.size());
    double snorm = 0.0;
    for (double s : svd.s) snorm += s * s;
    snorm = std::sqrt(snorm);
    const Eigen::VectorXcd sv = Eigen::Map<const RealVector>(svd.s.data(), kept).cast<cplx>() / snorm;
    Matrix left_m = svd.u;
    Matrix right_m = svd.vh;
    if (moving_right) {
      right_m = sv.asDiagonal() * right_m;
    } else {
      left_m = left_m * sv.asDiagonal();
    }
    for (std::size_t s = 0; s < 2; ++s) {
      sites_[i][s] = Matrix(dl, kept);
      for (Eigen::Index a = 0; a < dl; ++a) sites_[i][s].row(a) = left_m.row(a * 2 + static_cast<Eigen::Index>(s));
      sites_[i + 1][s] = right_m.middleCols(static_cast<Eigen::Index>(s) * dr, dr);
    }
    if (moving_right) {
      update_left(i);
    } else {
      update_right(i + 1);
    }
    return ep.value;
  }

  const MatrixProductOperator& h_;
  DmrgOptions opt_;
  std::size_t n_;
  std::vector<std::array<Matrix, 2>> sites_;
  std::vector<std::vector<std::array<Matrix, 2>>> refs_;
  std::vector<Env> left_, right_;
  std::vector<std::vector<Matrix>> ov_left_, ov_right_;
  std::vector<std::vector<PairTerm>> pairs_;
};

inline MatrixProductState perturbed(const MatrixProductState& psi, double magnitude, RandomStream& rng) {
  std::vector<DenseTensor> sites = psi.sites();
  for (auto& t : sites) {
    for (auto& x : t.data()) x += magnitude * cplx(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
  }
  return MatrixProductState(std::move(sites), true);
}

}  // namespace detail

// Two-site DMRG. Energies are Lanczos eigenvalues of the final bond of each sweep.
inline GroundStateResult dmrg_ground_state(const MatrixProductOperator& h, const DmrgOptions& opt,
                                           const std::optional<MatrixProductState>& init = std::nullopt) {
  if (opt.max_bond < 2) throw std::invalid_argument("dmrg_ground_state: max_bond must be >= 2");
  if (h.size() < 2) throw std::invalid_argument("dmrg_ground_state: need at least two sites");
  RandomStream rng(derive_seed(opt.seed, "dmrg-init"));
  MatrixProductState start;
  if (init) {
    if (init->size() != h.size()) throw std::invalid_argument("dmrg_ground_state: initial state size mismatch");
    start = opt.init_noise > 0.0 ? detail::perturbed(*init, opt.init_noise, rng) : *init;
  } else {
    start = MatrixProductState::random(h.size(), std::min(opt.initial_bond, opt.max_bond), true, rng, -1.0, 1.0);
  }
  detail::TwoSiteDmrg solver(h, opt, std::move(start));
  return solver.run();
}

// First gap: ED for small chains, otherwise DMRG with an energy penalty on the
// ground state (weight 10|E0|).
inline double energy_gap(const MatrixProductOperator& h, const GroundStateResult& ground, const DmrgOptions& opt,
                         const std::function<SparseMatrix()>& dense = {}, std::size_t ed_limit = 14) {
  if (dense && h.size() <= ed_limit) {
    const auto ed = exact_ground_state(dense(), 2);
    return *ed.gap;
  }
  DmrgOptions excited = opt;
  excited.penalty_states = {ground.state};
  excited.penalty_weight = 10.0 * std::max(1.0, std::abs(ground.energy));
  excited.seed = derive_seed(opt.seed, "dmrg-excited");
  const auto e1 = dmrg_ground_state(h, excited);
  return e1.energy - ground.energy;
}

// Ordered product state with an excitation every `order` sites, both ends excited.
inline Bitstring ordered_pattern(std::size_t n, std::size_t order) {
  if (order < 2 || order > 4) throw std::invalid_argument("ordered pattern period must be 2, 3, or 4");
  if (n < 1 || (n - 1) % order != 0) {
    throw std::invalid_argument("chain length " + std::to_string(n) + " cannot host an end-pinned Z" +
                                std::to_string(order) + " pattern");
  }
  Bitstring b(n);
  for (std::size_t k = 0; k < n; k += order) b.set(k, true);
  return b;
}

inline double phase_overlap(const MatrixProductState& psi, std::size_t order) {
  const Bitstring pattern = ordered_pattern(psi.size(), order);
  return std::norm(amplitude(psi, pattern)) / norm_squared(psi);
}

struct SweepPoint {
  double parameter = 0.0;
  GroundStateResult result;
  double energy = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double svn = 0.0;
  double magnetization = 0.0;
  double overlap = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

struct SweepLine {
  std::string label;
  double fixed_value = 0.0;       // e.g. R_b/a, or gamma for an XY line
  std::vector<double> grid;       // strictly increasing
  std::vector<SweepPoint> points;
};

struct SweepOptions {
  DmrgOptions dmrg;
  std::size_t order = 2;          // pattern used for the overlap column; 0 disables
  double warm_noise = 1e-8;
  bool compute_gap = true;
  std::size_t ed_gap_limit = 14;
};

using MpoFactory = std::function<MatrixProductOperator(double)>;
using DenseFactory = std::function<SparseMatrix(double)>;

// Left-to-right scan warm-starting each point from the previous solution.
inline SweepLine parameter_sweep(const MpoFactory& mpo, const DenseFactory& dense, std::span<const double> grid,
                                 const SweepOptions& opt) {
  if (grid.empty()) throw std::invalid_argument("parameter_sweep: empty grid");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("parameter_sweep: grid must be strictly increasing");
  }
  SweepLine line;
  line.grid.assign(grid.begin(), grid.end());
  std::optional<MatrixProductState> previous;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const MatrixProductOperator h = mpo(grid[k]);
    DmrgOptions o = opt.dmrg;
    o.seed = derive_seed(opt.dmrg.seed, "sweep-point", k);
    o.init_noise = previous ? opt.warm_noise : 0.0;
    SweepPoint pt;
    pt.parameter = grid[k];
    pt.result = dmrg_ground_state(h, o, previous);
    pt.energy = pt.result.energy;
    pt.converged = pt.result.converged;
    const std::size_t n = h.size();
    pt.svn = bipartite_entropy(pt.result.state, n / 2);
    pt.magnetization = magnetization(pt.result.state);
    if (opt.order != 0 && (n - 1) % opt.order == 0) pt.overlap = phase_overlap(pt.result.state, opt.order);
    if (opt.compute_gap) {
      std::function<SparseMatrix()> d;
      if (dense) d = [&dense, &grid, k]() { return dense(grid[k]); };
      pt.gap = energy_gap(h, pt.result, o, d, opt.ed_gap_limit);
      pt.result.gap = pt.gap;
    }
    previous = pt.result.state;
    line.points.push_back(std::move(pt));
  }
  return line;
}

inline SweepLine adiabatic_sweep(const RydbergParams& base, double rb_over_a, std::span<const double> delta_grid,
                                 std::size_t n, const SweepOptions& opt) {
  auto params_at = [base, rb_over_a](double d) {
    RydbergParams p = RydbergParams::dimensionless(d, rb_over_a, base.transverse_axis, base.truncation_range);
    return p;
  };
  SweepLine line = parameter_sweep([&](double d) { return rydberg_mpo(params_at(d), n); },
                                   [&](double d) { return rydberg_dense(params_at(d), n); }, delta_grid, opt);
  line.label = "rydberg";
  line.fixed_value = rb_over_a;
  return line;
}

// One row per grid point. NaN fields (gap, overlap) are written empty.
inline std::string sweep_csv(const SweepLine& line, const std::string& parameter_name = "delta_over_omega") {
  auto num = [](double x) { return std::isnan(x) ? std::string() : format_double(x); };
  std::string out = parameter_name + ",energy,gap,svn,magnetization,overlap,converged\n";
  for (const auto& p : line.points) {
    out += format_double(p.parameter) + "," + format_double(p.energy) + "," + num(p.gap) + "," + format_double(p.svn) +
           "," + format_double(p.magnetization) + "," + num(p.overlap) + "," + (p.converged ? "1" : "0") + "\n";
  }
  return out;
}

struct CriticalPointEstimate {
  bool found = false;
  bool boundary = false;              // SvN maximum sits on a grid end
  double location = std::numeric_limits<double>::quiet_NaN();  // SvN maximum
  std::size_t index = 0;
  std::optional<double> gap_minimum;  // interior gap minimum, if any
  std::optional<double> magnetization_slope_extremum;
  double spread = 0.0;                // max - min over available locators
  bool disagreement = false;          // locators differ by more than 2 grid steps
  std::string method = "none";        // "entropy_maximum", "entropy_inflection" or "none"
};

inline CriticalPointEstimate locate_critical_point(const SweepLine& line) {
  CriticalPointEstimate est;
  const auto& pts = line.points;
  const std::size_t m = pts.size();
  if (m == 0) return est;
  std::size_t imax = 0;
  for (std::size_t k = 1; k < m; ++k) {
    if (pts[k].svn > pts[imax].svn) imax = k;
  }
  est.index = imax;
  est.location = pts[imax].parameter;
  est.boundary = imax == 0 || imax + 1 == m;
  est.found = !est.boundary;
  if (est.found) est.method = "entropy_maximum";
  double svn_idx = static_cast<double>(imax);
  // A monotone entropy (e.g. a symmetric cat state on the ordered side) has
  // its crossover at the steepest interior step.
  if (est.boundary && m >= 4) {
    std::size_t steep = 0;
    double best = -1.0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const double slope = std::abs((pts[k + 1].svn - pts[k].svn) / (pts[k + 1].parameter - pts[k].parameter));
      if (slope > best) {
        best = slope;
        steep = k;
      }
    }
    if (steep > 0 && steep + 2 < m) {
      est.found = true;
      est.method = "entropy_inflection";
      est.index = steep;
      est.location = 0.5 * (pts[steep].parameter + pts[steep + 1].parameter);
      svn_idx = static_cast<double>(steep) + 0.5;
    }
  }

  std::vector<double> positions{est.location};
  std::optional<std::size_t> gap_idx;
  if (m >= 3) {
    std::size_t gmin = 0;
    bool any = false;
    for (std::size_t k = 0; k < m; ++k) {
      if (std::isnan(pts[k].gap)) continue;
      if (!any || pts[k].gap < pts[gmin].gap) gmin = k;
      any = true;
    }
    if (any && gmin > 0 && gmin + 1 < m) {
      gap_idx = gmin;
      est.gap_minimum = pts[gmin].parameter;
      positions.push_back(pts[gmin].parameter);
    }
  }
  std::optional<double> slope_pos;
  double slope_idx = 0.0;
  if (m >= 2) {
    double best = -1.0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const double dp = pts[k + 1].parameter - pts[k].parameter;
      const double slope = std::abs((pts[k + 1].magnetization - pts[k].magnetization) / dp);
      if (slope > best) {
        best = slope;
        slope_pos = 0.5 * (pts[k].parameter + pts[k + 1].parameter);
        slope_idx = static_cast<double>(k) + 0.5;
      }
    }
    est.magnetization_slope_extremum = slope_pos;
    positions.push_back(*slope_pos);
  }
  const auto [lo, hi] = std::minmax_element(positions.begin(), positions.end());
  est.spread = *hi - *lo;
  if (gap_idx && std::abs(static_cast<double>(*gap_idx) - svn_idx) > 2.0) est.disagreement = true;
  if (slope_pos && std::abs(slope_idx - svn_idx) > 2.0) est.disagreement = true;
  return est;
}

}  // namespace bebm

#endif  // BEBM_GROUNDTRUTH_HPP
