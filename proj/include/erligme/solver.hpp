#pragma once

// Primal-dual solver for  min ½‖ŷ − Φ̂x‖² + μΨ_B(𝔏x) + ι_{C0}(Cx).

#include "erligme/models.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace erligme {

enum class StepRule {
  conservative,  ///< σ = κ(‖Φ̂ᵀΦ̂‖ + μ‖𝔏ᵀBᵀB𝔏‖ + ‖KᵀK‖), τ = κ(μ‖BᵀB‖ + ‖KᵀK‖)
  theorem,       ///< σ = ‖(κ/2)Φ̂ᵀΦ̂‖ + μ‖KᵀK‖ + (κ−1), τ = (κ/2 + 2/κ)μ‖BᵀB‖ + (κ−1)
};

inline const char* to_string(StepRule r) {
  return r == StepRule::theorem ? "theorem" : "conservative";
}

struct Steps {
  double sigma = 0.0;
  double tau = 0.0;
  double phi_gram = 0.0;  ///< λmax(Φ̂ᵀΦ̂)
  double lb_gram = 0.0;   ///< λmax(𝔏ᵀBᵀB𝔏)
  double b_gram = 0.0;    ///< λmax(BᵀB)
  double k_gram = 0.0;    ///< λmax(𝔏ᵀ𝔏 + CᵀC)
};

namespace detail {

inline Steps gram_norms(const ModelSpec& spec) {
  Steps s;
  s.phi_gram = op_norm_estimate(spec.phi_hat).value;
  if (!spec.B.is_zero()) {
    s.lb_gram = op_norm_estimate(compose(spec.B, spec.frakL)).value;
    s.b_gram = op_norm_estimate(spec.B).value;
  }
  s.k_gram = op_norm_estimate(stack({spec.frakL, spec.C})).value;
  return s;
}

}  // namespace detail

/// Conservative steps from power-iteration norm estimates.
inline Steps default_steps(const ModelSpec& spec, double kappa = 1.1) {
  require_config(kappa > 1.0, "kappa must exceed 1");
  Steps s = detail::gram_norms(spec);
  s.sigma = kappa * (s.phi_gram + spec.mu * s.lb_gram + s.k_gram);
  s.tau = kappa * (spec.mu * s.b_gram + s.k_gram);
  return s;
}

/// Steps at the edge of the LiGME convergence condition, with margin κ − 1.
inline Steps theorem_steps(const ModelSpec& spec, double kappa = 1.1) {
  require_config(kappa > 1.0, "kappa must exceed 1");
  Steps s = detail::gram_norms(spec);
  s.sigma = 0.5 * kappa * s.phi_gram + spec.mu * s.k_gram + (kappa - 1.0);
  s.tau = (0.5 * kappa + 2.0 / kappa) * spec.mu * s.b_gram + (kappa - 1.0);
  return s;
}

inline Steps select_steps(const ModelSpec& spec, double kappa, StepRule rule) {
  return rule == StepRule::theorem ? theorem_steps(spec, kappa) : default_steps(spec, kappa);
}

struct IterInfo {
  int k = 0;
  double residual = 0.0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double max_gap = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct SolverConfig {
  double kappa = 1.1;
  double eps_stop = 1e-3;
  int max_iters = 20000;
  std::optional<double> sigma;
  std::optional<double> tau;
  StepRule rule = StepRule::conservative;
  int guard_window = 100;
  double guard_factor = 10.0;
  bool track_objective = false;
  bool track_gap = false;  ///< max relative epigraph gap per iteration
  std::function<void(const IterInfo&)> on_iter;
};

struct SolverState {
  Vec x, v, w;
};

struct SolveResult {
  SolverState state;
  bool converged = false;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  Steps steps;
  std::vector<double> residuals;
  std::vector<double> objectives;
  std::vector<double> gaps;
  double seconds = 0.0;
  std::string stop_reason;
};

/// Objective at x̂ without the indicator: ½‖Φ̂x − ŷ‖² + μΨ_B(𝔏x).
inline double objective_value(const ModelSpec& spec, VecCRef x) {
  const double data = 0.5 * (spec.phi_hat.apply(x) - spec.y_hat).squaredNorm();
  return data + spec.mu * ligme_penalty(spec.seed_prox, spec.B, spec.frakL.apply(x));
}

/// Epigraph constraint gaps |ξ − f(x)| of the C-image of x̂.
inline std::vector<EpigraphGap> tightness_report(const ModelSpec& spec, VecCRef x) {
  return spec.constraint_prox.epigraph_gaps(spec.C.apply(x));
}

inline double max_relative_gap(const ModelSpec& spec, VecCRef x) {
  double g = 0.0;
  for (const auto& e : tightness_report(spec, x)) g = std::max(g, e.relative);
  return g;
}

/// Box-clamped back-projection for the data block, inner layer for z, v = 0, w = 0.
inline SolverState initial_state(const ModelSpec& spec) {
  const VariantConfig& cfg = spec.cfg;
  const Index sig = cfg.signal_len();
  SolverState st;
  st.x = Vec::Zero(spec.dim());
  Vec back = spec.phi.adjoint(spec.y);
  st.x.head(sig) = back.head(sig).cwiseMax(cfg.box_lo).cwiseMin(cfg.box_hi);
  if (const Segment* z = spec.layout.find("z"))
    st.x.segment(z->offset, z->length) = eval_regularizer(cfg, st.x.head(sig)).inner;
  st.v = Vec::Zero(spec.frakL.out_dim());
  st.w = Vec::Zero(spec.frakL.out_dim() + spec.C.out_dim());
  return st;
}

/// Runs the iteration until ‖p_k − p_{k−1}‖ ≤ ε_stop or max_iters.
/// Throws SolverError on NaN or on a 10× residual growth over the guard window.
inline SolveResult solve(const ModelSpec& spec, const SolverConfig& cfg = {},
                         std::optional<SolverState> init = std::nullopt) {
  spec.check_dimensions();
  require_config(cfg.eps_stop > 0.0, "eps_stop must be positive");
  require_config(cfg.max_iters >= 1, "max_iters must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  SolveResult res;
  if (cfg.sigma && cfg.tau) {
    res.steps.sigma = *cfg.sigma;
    res.steps.tau = *cfg.tau;
  } else {
    res.steps = select_steps(spec, cfg.kappa, cfg.rule);
    if (cfg.sigma) res.steps.sigma = *cfg.sigma;
    if (cfg.tau) res.steps.tau = *cfg.tau;
  }
  const double sigma = res.steps.sigma, tau = res.steps.tau, mu = spec.mu;
  require_config(sigma > 0.0 && tau > 0.0, "step sizes must be positive");

  const LinearOperator& phi = spec.phi_hat;
  const LinearOperator& L = spec.frakL;
  const LinearOperator& C = spec.C;
  const bool use_v = !spec.B.is_zero();
  LinearOperator btb;
  if (use_v) {
    if (const Vec* d = spec.B.diagonal()) {
      btb = diagonal(d->cwiseAbs2(), "BtB");
    } else {
      btb = gram(spec.B);
    }
  }
  const Index n = spec.dim(), nl = L.out_dim(), nc = C.out_dim();

  SolverState st = init ? std::move(*init) : initial_state(spec);
  require_dim(st.x.size() == n && st.v.size() == nl && st.w.size() == nl + nc,
              "solve: initial state has wrong dimensions");

  const Vec phity = phi.adjoint(spec.y_hat);
  Vec lx = L.apply(st.x), lx_new(nl), grad(n), tmp_n(n), tmp_l(nl), tmp_l2(nl);
  Vec phix(phi.out_dim()), x_new(n), v_new(nl), u(nl + nc), ext(n), cx(nc);
  Vec pu(nl + nc), w_new(nl + nc);

  for (int k = 1; k <= cfg.max_iters; ++k) {
    // x-step
    phi.apply_into(st.x, phix);
    phi.adjoint_into(phix, grad);
    grad -= phity;
    tmp_l = st.w.head(nl);
    if (use_v) {
      tmp_l2 = st.v - lx;
      btb.apply_into(tmp_l2, v_new);
      tmp_l += v_new;
    }
    L.adjoint_into(tmp_l, tmp_n);
    grad += mu * tmp_n;
    C.adjoint_into(st.w.tail(nc), tmp_n);
    grad += mu * tmp_n;
    x_new = st.x - grad / sigma;
    L.apply_into(x_new, lx_new);

    // v-step
    double dv2 = 0.0;
    if (use_v) {
      tmp_l = 2.0 * lx_new - lx - st.v;
      btb.apply_into(tmp_l, tmp_l2);
      v_new = st.v + (mu / tau) * tmp_l2;
      spec.seed_prox.prox_inplace(v_new, mu / tau);
      dv2 = (v_new - st.v).squaredNorm();
      st.v.swap(v_new);
    }

    // w-step
    ext = 2.0 * x_new - st.x;
    u.head(nl) = 2.0 * lx_new - lx + st.w.head(nl);
    C.apply_into(ext, cx);
    u.tail(nc) = cx + st.w.tail(nc);
    pu = u;
    spec.seed_prox.prox_inplace(pu.head(nl), 1.0);
    spec.constraint_prox.prox_inplace(pu.tail(nc), 1.0);
    w_new = u - pu;

    const double r = std::sqrt((x_new - st.x).squaredNorm() + dv2 +
                               (w_new - st.w).squaredNorm());
    st.x.swap(x_new);
    st.w.swap(w_new);
    lx.swap(lx_new);
    res.residuals.push_back(r);
    res.iterations = k;
    res.residual = r;

    if (!std::isfinite(r) || !st.x.allFinite())
      throw SolverError("solver produced a non-finite iterate at iteration " + std::to_string(k));
    if (cfg.guard_window > 0 && k > cfg.guard_window) {
      const double past = res.residuals[k - 1 - cfg.guard_window];
      if (r > cfg.guard_factor * past && r > cfg.eps_stop)
        throw SolverError("solver diverging: residual grew from " + std::to_string(past) +
                          " to " + std::to_string(r) + " over " +
                          std::to_string(cfg.guard_window) + " iterations");
    }
    IterInfo info{k, r, std::numeric_limits<double>::quiet_NaN(), 0.0};
    if (cfg.track_objective) {
      info.objective = objective_value(spec, st.x);
      res.objectives.push_back(info.objective);
    }
    if (cfg.track_gap) {
      info.max_gap = max_relative_gap(spec, st.x);
      res.gaps.push_back(info.max_gap);
    }
    if (cfg.on_iter) {
      info.seconds = elapsed();
      cfg.on_iter(info);
    }
    if (r <= cfg.eps_stop) {
      res.converged = true;
      res.stop_reason = "converged";
      break;
    }
  }
  if (!res.converged) res.stop_reason = "max_iters";
  res.state = std::move(st);
  res.seconds = elapsed();
  return res;
}

/// Convenience: solve and return x̂ only; used as the phase-1 solver callback.
inline std::function<Vec(const ModelSpec&)> solver_callback(SolverConfig cfg = {}) {
  return [cfg](const ModelSpec& spec) { return solve(spec, cfg).state.x; };
}

// ---------------------------------------------------------------------------
// Diagnostics

struct ConvexityReport {
  double min_eigenvalue = 0.0;  ///< of Φ̂ᵀΦ̂ − μ𝔏ᵀBᵀB𝔏
  bool convex = false;
  bool exact = false;  ///< dense eigendecomposition (else power iteration)
};

/// Checks Φ̂ᵀΦ̂ − μ𝔏ᵀBᵀB𝔏 ⪰ −tol·I.
inline ConvexityReport check_overall_convexity(const ModelSpec& spec, double tol = 1e-8) {
  const Index n = spec.dim();
  const LinearOperator& phi = spec.phi_hat;
  const LinearOperator lb = compose(spec.B, spec.frakL);
  const bool no_b = spec.B.is_zero();
  auto apply_m = [&](VecCRef x) -> Vec {
    Vec y = phi.adjoint(phi.apply(x));
    if (!no_b) y -= spec.mu * lb.adjoint(lb.apply(x));
    return y;
  };
  ConvexityReport rep;
  if (2 * n <= kDenseLimit) {
    Mat m(n, n);
    Vec e = Vec::Zero(n);
    for (Index j = 0; j < n; ++j) {
      e[j] = 1.0;
      m.col(j) = apply_m(e);
      e[j] = 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues()(0);
    rep.exact = true;
  } else {
    // λmin(M) = c − λmax(cI − M) with c ≥ λmax(M).
    const double c = 1.01 * op_norm_estimate(phi).value + 1e-12;
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> g;
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = g(rng);
    v.normalize();
    double lam = 0.0;
    for (int it = 0; it < 20000; ++it) {
      Vec mv = c * v - apply_m(v);
      const double next = v.dot(mv);
      const double nv = mv.norm();
      if (nv == 0.0) break;
      const double resid = (mv - next * v).norm();
      v = mv / nv;
      lam = next;
      if (resid <= 1e-10 * std::max(1.0, std::abs(lam))) break;
    }
    rep.min_eigenvalue = c - lam;
  }
  rep.convex = rep.min_eigenvalue >= -tol;
  return rep;
}

}  // namespace erligme
