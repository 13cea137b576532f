#pragma once

// Synthetic data, the degradation model, metrics and grid drivers for the
// denoising, compressed-sensing and RPCA experiments.

#include "erligme/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace erligme {

constexpr double kPsnrCap = 99.0;

/// y = Φx + n with n ~ N(0, σ²) i.i.d. from mt19937_64(seed).
inline Vec degrade(VecCRef x, const LinearOperator& phi, double sigma_noise, std::uint64_t seed) {
  require_config(sigma_noise >= 0.0, "degrade: noise level must be non-negative");
  Vec y = phi.apply(x);
  if (sigma_noise == 0.0) return y;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma_noise);
  for (Index i = 0; i < y.size(); ++i) y[i] += g(rng);
  return y;
}

/// 10·log10(N / ‖u − u_org‖²), capped at kPsnrCap.
inline double psnr(VecCRef u, VecCRef u_org) {
  require_dim(u.size() == u_org.size() && u.size() > 0, "psnr: length mismatch");
  const double err = (u - u_org).squaredNorm();
  if (err == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(double(u.size()) / err));
}

struct RpcaData {
  int shift = 0;
  Index rows = 32, cols = 25;
  Vec L, S, Y;  ///< column-major M×N
};

/// Column n (0-based) of L_s holds eight 1s in rows s·n … s·n + 7 (0-based), so
/// the 32×25 and 32×13 sizes are exactly the shifts that fit. S holds 1s on the
/// zero-support of L_s, each with probability p.
inline RpcaData synth_rpca_data(int shift, double p_noise, std::uint64_t seed) {
  require_config(shift >= 0 && shift <= 2, "synth_rpca_data: shift must be 0, 1 or 2");
  require_config(p_noise >= 0.0 && p_noise <= 1.0, "synth_rpca_data: probability out of range");
  RpcaData d;
  d.shift = shift;
  d.rows = 32;
  d.cols = shift == 2 ? 13 : 25;
  const Index mn = d.rows * d.cols;
  d.L = Vec::Zero(mn);
  d.S = Vec::Zero(mn);
  for (Index n = 0; n < d.cols; ++n)
    for (Index m = shift * n; m <= shift * n + 7; ++m) d.L[n * d.rows + m] = 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index k = 0; k < mn; ++k) {
    const double draw = u(rng);
    if (d.L[k] == 0.0 && draw < p_noise) d.S[k] = 1.0;
  }
  d.Y = d.L + d.S;
  return d;
}

/// Random axis-aligned piecewise-constant colour image with values in [0.1, 0.9].
/// Region 0 is the background; each further region paints a random rectangle.
inline Vec synth_piecewise_image(Index n, int n_regions, std::uint64_t seed, Index ch = 3) {
  require_config(n >= 8, "synth_piecewise_image: n must be at least 8");
  require_config(n_regions >= 1, "synth_piecewise_image: need at least one region");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> val(0.1, 0.9);
  std::uniform_int_distribution<Index> pos(0, n - 1);
  const Index p = n * n;
  Vec img(ch * p);
  for (Index c = 0; c < ch; ++c) img.segment(c * p, p).setConstant(val(rng));
  for (int r = 1; r < n_regions; ++r) {
    Index i0 = pos(rng), i1 = pos(rng), j0 = pos(rng), j1 = pos(rng);
    if (i0 > i1) std::swap(i0, i1);
    if (j0 > j1) std::swap(j0, j1);
    double color[3];
    for (Index c = 0; c < ch; ++c) color[c] = val(rng);
    for (Index j = j0; j <= j1; ++j)
      for (Index i = i0; i <= i1; ++i)
        for (Index c = 0; c < ch; ++c) img[c * p + j * n + i] = color[c];
  }
  return img;
}

/// Per-pixel ℓ1 norm of the stacked gradient, ‖P_grad D x‖₁ blockwise.
inline Vec grad_magnitude(VecCRef x, Index n, Index ch = 3) {
  require_dim(x.size() == ch * n * n, "grad_magnitude: image has wrong size");
  const Vec g = make_gradient(n, ch).apply(x);
  const Index p = n * n;
  Vec mag = Vec::Zero(p);
  for (Index f = 0; f < 2 * ch; ++f) mag += g.segment(f * p, p).cwiseAbs();
  return mag;
}

struct GradHistogram {
  double lo = 0.0, hi = 0.0;
  std::vector<int> truth, estimate;
  Index count = 0;  ///< qualifying pixels
  double truth_mean = 0.0, estimate_mean = 0.0;
};

/// Histograms of |Dx| over the pixels where |D x_org| ≥ threshold;
/// `bins` uniform bins over [threshold, max truth]. Values past the last
/// edge land in the last bin, values below the first edge in the first.
inline GradHistogram grad_histogram(VecCRef x_est, VecCRef x_org, Index n, Index ch = 3,
                                    double threshold = 1.0, int bins = 20) {
  require_dim(x_est.size() == x_org.size(), "grad_histogram: geometry mismatch");
  require_config(bins >= 1, "grad_histogram: need at least one bin");
  const Vec mt = grad_magnitude(x_org, n, ch);
  const Vec me = grad_magnitude(x_est, n, ch);
  GradHistogram h;
  h.truth.assign(bins, 0);
  h.estimate.assign(bins, 0);
  h.lo = threshold;
  h.hi = threshold;
  for (Index k = 0; k < mt.size(); ++k)
    if (mt[k] >= threshold) h.hi = std::max(h.hi, mt[k]);
  const double width = (h.hi - h.lo) / bins;
  auto bin_of = [&](double v) {
    if (width <= 0.0) return 0;
    const int b = static_cast<int>(std::floor((v - h.lo) / width));
    return std::clamp(b, 0, bins - 1);
  };
  for (Index k = 0; k < mt.size(); ++k) {
    if (mt[k] < threshold) continue;
    ++h.count;
    h.truth[bin_of(mt[k])]++;
    h.estimate[bin_of(me[k])]++;
    h.truth_mean += mt[k];
    h.estimate_mean += me[k];
  }
  if (h.count > 0) {
    h.truth_mean /= double(h.count);
    h.estimate_mean /= double(h.count);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Problems and runs

enum class Task { denoise, cs, rpca };

inline const char* to_string(Task t) {
  switch (t) {
    case Task::denoise: return "denoise";
    case Task::cs: return "cs";
    case Task::rpca: return "rpca";
  }
  return "?";
}

/// One observation shared by every variant of a comparison.
struct Problem {
  Task task = Task::denoise;
  std::uint64_t seed = 0;
  Index n = 0;            ///< image side (images)
  Index rows = 0, cols = 0;  ///< RPCA size
  int shift = 0;
  LinearOperator phi;     ///< on the signal (images) or on (ℓ, s) (RPCA)
  Vec y;
  Vec truth;              ///< ground-truth image, or L_s
};

inline Problem make_denoise_problem(Index n, int regions, double sigma_noise, std::uint64_t seed) {
  Problem p;
  p.task = Task::denoise;
  p.seed = seed;
  p.n = n;
  p.truth = synth_piecewise_image(n, regions, seed);
  p.phi = identity(p.truth.size());
  p.y = degrade(p.truth, p.phi, sigma_noise, seed ^ 0x9e3779b97f4a7c15ULL);
  return p;
}

inline Problem make_cs_problem(Index n, int regions, double ratio, double sigma_noise,
                               std::uint64_t seed) {
  Problem p;
  p.task = Task::cs;
  p.seed = seed;
  p.n = n;
  p.truth = synth_piecewise_image(n, regions, seed);
  p.phi = make_sensing(p.truth.size(), ratio, seed ^ 0x5851f42d4c957f2dULL);
  p.y = degrade(p.truth, p.phi, sigma_noise, seed ^ 0x9e3779b97f4a7c15ULL);
  return p;
}

/// Uses a supplied image instead of a synthetic one.
inline Problem make_image_problem(Task task, Vec truth, Index n, double ratio, double sigma_noise,
                                  std::uint64_t seed) {
  Problem p;
  p.task = task;
  p.seed = seed;
  p.n = n;
  p.truth = std::move(truth);
  p.phi = task == Task::cs ? make_sensing(p.truth.size(), ratio, seed ^ 0x5851f42d4c957f2dULL)
                           : identity(p.truth.size());
  p.y = degrade(p.truth, p.phi, sigma_noise, seed ^ 0x9e3779b97f4a7c15ULL);
  return p;
}

inline Problem make_rpca_problem(int shift, double p_noise, std::uint64_t seed) {
  RpcaData d = synth_rpca_data(shift, p_noise, seed);
  Problem p;
  p.task = Task::rpca;
  p.seed = seed;
  p.rows = d.rows;
  p.cols = d.cols;
  p.shift = shift;
  const Index mn = d.rows * d.cols;
  p.phi = hstack({identity(mn), identity(mn)}).with_tag("[I I]");
  p.y = d.Y;
  p.truth = d.L;
  return p;
}

struct RunReport {
  std::string task;
  std::string variant;
  VariantConfig cfg;
  std::uint64_t seed = 0;
  int shift = 0;
  double psnr_db = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::string stop_reason;
  double max_relative_gap = 0.0;
  double sigma = 0.0, tau = 0.0;
  double seconds = 0.0;
  std::string error;
  std::string error_kind;  ///< "solver", "config", "dimension", "capacity" or "numerical"
  double hist_truth_mean = 0.0, hist_estimate_mean = 0.0;
  std::vector<int> hist_truth, hist_estimate;
  Vec estimate;  ///< signal estimate (not serialized)
  std::vector<double> residuals;
  std::vector<double> objectives;  ///< per iteration when tracked
  std::vector<double> gaps;        ///< per iteration when tracked
};

/// Fills the geometry fields of `cfg` from the problem.
inline VariantConfig fit_to_problem(VariantConfig cfg, const Problem& p) {
  if (p.task == Task::rpca) {
    cfg.rows = p.rows;
    cfg.cols = p.cols;
  } else {
    cfg.n = p.n;
    cfg.channels = 3;
  }
  return cfg;
}

namespace detail {

inline void finish_report(RunReport& rep, const Problem& p, const ModelSpec& spec,
                          const SolveResult& res) {
  const Index sig = spec.cfg.signal_len();
  rep.estimate = res.state.x.head(sig);
  rep.psnr_db = psnr(rep.estimate, p.truth);
  rep.iterations = res.iterations;
  rep.final_residual = res.residual;
  rep.converged = res.converged;
  rep.stop_reason = res.stop_reason;
  rep.sigma = res.steps.sigma;
  rep.tau = res.steps.tau;
  rep.residuals = res.residuals;
  rep.objectives = res.objectives;
  rep.gaps = res.gaps;
  rep.max_relative_gap = max_relative_gap(spec, res.state.x);
  if (p.task != Task::rpca) {
    GradHistogram h = grad_histogram(rep.estimate, p.truth, p.n);
    rep.hist_truth = h.truth;
    rep.hist_estimate = h.estimate;
    rep.hist_truth_mean = h.truth_mean;
    rep.hist_estimate_mean = h.estimate_mean;
  }
}

}  // namespace detail

/// Solves one variant. er_ligme needs `ref`; otherwise it is ignored.
inline RunReport run_variant(const Problem& p, const VariantConfig& cfg_in,
                             const SolverConfig& scfg,
                             const std::optional<ReferenceData>& ref = std::nullopt) {
  RunReport rep;
  rep.task = to_string(p.task);
  rep.cfg = fit_to_problem(cfg_in, p);
  rep.variant = variant_label(rep.cfg.regularizer, rep.cfg.enhancement);
  rep.seed = p.seed;
  rep.shift = p.shift;
  const auto t0 = std::chrono::steady_clock::now();
  ModelSpec spec = build_model(rep.cfg, p.phi, p.y, ref);
  SolveResult res = solve(spec, scfg);
  detail::finish_report(rep, p, spec, res);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// Runs `count` independent jobs on up to `jobs` threads; job i writes slot i.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(jobs, int(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

/// Runs every configuration on the same problem. er_ligme points take their
/// reference from the matching plain solve (same regularizer, μ, λ₁);
/// missing plain points are solved first. Failures are recorded per point.
inline std::vector<RunReport> run_grid(const Problem& p, const std::vector<VariantConfig>& grid,
                                       const SolverConfig& scfg, int jobs = 1) {
  std::vector<RunReport> out(grid.size());
  if (grid.empty()) return out;

  using Key = std::tuple<int, double, double>;
  auto key_of = [](const VariantConfig& c) {
    return Key{int(c.regularizer), c.mu, c.lambda1};
  };
  auto plain_of = [](VariantConfig c) {
    c.enhancement = Enhancement::plain;
    c.theta = 0.0;
    return c;
  };

  // Phase 1: every plain point, requested or needed as a reference.
  std::map<Key, std::size_t> plain_index;
  std::vector<VariantConfig> phase1;
  std::vector<std::ptrdiff_t> phase1_slot;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i].enhancement == Enhancement::plain && !plain_index.count(key_of(grid[i]))) {
      plain_index[key_of(grid[i])] = phase1.size();
      phase1.push_back(grid[i]);
      phase1_slot.push_back(std::ptrdiff_t(i));
    }
  for (const auto& c : grid)
    if (c.enhancement == Enhancement::er_ligme && !plain_index.count(key_of(c))) {
      plain_index[key_of(c)] = phase1.size();
      phase1.push_back(plain_of(c));
      phase1_slot.push_back(-1);
    }

  auto guarded = [&](const VariantConfig& c, const std::optional<ReferenceData>& ref) {
    try {
      return run_variant(p, c, scfg, ref);
    } catch (const Error& e) {
      RunReport rep;
      rep.task = to_string(p.task);
      rep.cfg = fit_to_problem(c, p);
      rep.variant = variant_label(c.regularizer, c.enhancement);
      rep.seed = p.seed;
      rep.shift = p.shift;
      rep.error = e.what();
      rep.error_kind = error_kind(e);
      return rep;
    }
  };

  std::vector<RunReport> first(phase1.size());
  parallel_for(phase1.size(), jobs, [&](std::size_t i) { first[i] = guarded(phase1[i], std::nullopt); });
  for (std::size_t i = 0; i < phase1.size(); ++i)
    if (phase1_slot[i] >= 0) out[std::size_t(phase1_slot[i])] = first[i];

  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i].enhancement != Enhancement::plain) rest.push_back(i);
  parallel_for(rest.size(), jobs, [&](std::size_t r) {
    const std::size_t i = rest[r];
    const VariantConfig& c = grid[i];
    std::optional<ReferenceData> ref;
    if (c.enhancement == Enhancement::er_ligme) {
      const RunReport& base = first[plain_index.at(key_of(c))];
      if (!base.error.empty()) {
        out[i] = guarded(c, std::nullopt);
        out[i].error = "phase-1 failed: " + base.error;
        out[i].error_kind = base.error_kind;
        return;
      }
      ref = reference_from_solution(fit_to_problem(c, p), base.estimate, c.rho,
                                    "plain " + base.variant + " solve");
    }
    out[i] = guarded(c, ref);
  });
  return out;
}

/// Best PSNR per (variant, shift) key, as in the maximum-PSNR tables.
struct BestEntry {
  std::string variant;
  int shift = 0;
  double psnr_db = -std::numeric_limits<double>::infinity();
  double mu = 0.0, lambda1 = 0.0;
  std::size_t report = 0;
};

inline std::vector<BestEntry> max_psnr_summary(const std::vector<RunReport>& reports) {
  std::vector<BestEntry> best;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const RunReport& r = reports[i];
    if (!r.error.empty() || !std::isfinite(r.psnr_db)) continue;
    auto it = std::find_if(best.begin(), best.end(), [&](const BestEntry& b) {
      return b.variant == r.variant && b.shift == r.shift;
    });
    if (it == best.end()) {
      best.push_back({r.variant, r.shift, r.psnr_db, r.cfg.mu, r.cfg.lambda1, i});
    } else if (r.psnr_db > it->psnr_db) {
      it->psnr_db = r.psnr_db;
      it->mu = r.cfg.mu;
      it->lambda1 = r.cfg.lambda1;
      it->report = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Paper parameterizations

inline const std::vector<double>& denoise_mu_grid() {
  static const std::vector<double> g{0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  return g;
}

inline const std::vector<double>& rpca_lambda_grid() {
  static const std::vector<double> g{0.05, 0.25, 0.50, 0.75, 1.00, 1.25};
  return g;
}

/// The grid of one image task over `regs` and `enhs` (theta/rho per enhancement).
inline std::vector<VariantConfig> image_grid(Task task, const std::vector<Regularizer>& regs,
                                             const std::vector<Enhancement>& enhs,
                                             const std::vector<double>& mus, Index w,
                                             bool overlap) {
  std::vector<VariantConfig> grid;
  const double er_theta = task == Task::cs ? 4.0 : 3.5;
  for (Regularizer r : regs)
    for (Enhancement e : enhs) {
      if (e == Enhancement::ligme && r == Regularizer::DSTV) continue;
      for (double mu : mus) {
        VariantConfig c;
        c.regularizer = r;
        c.enhancement = e;
        c.mu = mu;
        c.w = w;
        c.overlap = overlap;
        if (e == Enhancement::ligme) c.theta = 0.99;
        if (e == Enhancement::er_ligme) c.theta = c.rho = er_theta;
        grid.push_back(c);
      }
    }
  return grid;
}

/// NN, L-NN, ASNN, EL-ASNN over the λ₁ grid with μ = 1, ε_s = MN·p.
inline std::vector<VariantConfig> rpca_grid(const Problem& p, double p_noise,
                                            const std::vector<double>& lambdas) {
  std::vector<VariantConfig> grid;
  const std::pair<Regularizer, Enhancement> variants[] = {
      {Regularizer::NN, Enhancement::plain},
      {Regularizer::NN, Enhancement::ligme},
      {Regularizer::ASNN, Enhancement::plain},
      {Regularizer::ASNN, Enhancement::er_ligme}};
  for (const auto& [r, e] : variants)
    for (double l : lambdas) {
      VariantConfig c;
      c.regularizer = r;
      c.enhancement = e;
      c.mu = 1.0;
      c.lambda1 = l;
      c.rows = p.rows;
      c.cols = p.cols;
      c.eps_s = double(p.rows * p.cols) * p_noise;
      if (e == Enhancement::ligme) c.theta = 0.10;
      if (e == Enhancement::er_ligme) c.theta = c.rho = 1.0;
      grid.push_back(c);
    }
  return grid;
}

}  // namespace erligme
