#pragma once

// Quick property checks behind `erligme check`: adjoints, dense equivalence,
// prox optimality, the convexity condition and scalar debiasing.

#include "erligme/io.hpp"

#include <random>
#include <string>
#include <vector>

namespace erligme {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline Vec random_vec(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline std::vector<std::pair<std::string, LinearOperator>> sample_operators() {
  const Index n = 6;
  std::vector<std::pair<std::string, LinearOperator>> ops;
  ops.push_back({"gradient", make_gradient(n, 3)});
  ops.push_back({"color_decorrelation", make_color_decorrelation(n)});
  ops.push_back({"patch_expansion(overlap)", make_patch_expansion(n, 3, true, 6)});
  ops.push_back({"patch_expansion", make_patch_expansion(n, 3, false, 6)});
  ops.push_back({"patch_permutation", make_grad_patch_permutation(4, 3, 3, PatchGrouping::per_channel)});
  ops.push_back({"PED(stacked)", make_patch_gradient(n, 3, true, 3, PatchGrouping::stacked_channels, false)});
  ops.push_back({"PEDC(per_channel)", make_patch_gradient(n, 3, false, 3, PatchGrouping::per_channel, true)});
  ops.push_back({"dft_pairing", make_dft_pairing(5, 4)});
  ops.push_back({"sensing", make_sensing(48, 0.5, 7)});
  LinearOperator g = make_gradient(n, 1);
  ops.push_back({"compose", compose(make_dft_pairing(12, 6), g)});
  ops.push_back({"stack", stack({g, scaled_identity(n * n, 2.0)})});
  ops.push_back({"hstack", hstack({identity(9), scale(identity(9), -1.5)})});
  ops.push_back({"block_diag", block_diag({g, make_dft_pairing(3, 2)})});
  ops.push_back({"transpose", transpose(g)});
  ops.push_back({"sum", sum(identity(n * n), compose(transpose(g), g))});
  ops.push_back({"select", select(10, 3, 4)});
  return ops;
}

}  // namespace detail

/// ⟨Ax, y⟩ = ⟨x, Aᵀy⟩ and agreement with the dense materialization.
inline std::vector<CheckResult> check_operators() {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(11);
  for (const auto& [name, op] : detail::sample_operators()) {
    const Vec x = detail::random_vec(op.in_dim(), rng);
    const Vec y = detail::random_vec(op.out_dim(), rng);
    const double lhs = op.apply(x).dot(y), rhs = x.dot(op.adjoint(y));
    const double adj_err = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
    const Mat m = materialize(op);
    const double dense_err = (m * x - op.apply(x)).norm();
    CheckResult r;
    r.name = "operator " + name;
    r.pass = adj_err <= 1e-8 && dense_err <= 1e-10;
    r.detail = "adjoint " + format_double(adj_err) + ", dense " + format_double(dense_err);
    out.push_back(r);
  }
  return out;
}

/// For p = prox_{γF}(x) and any y: γF(y) ≥ γF(p) + ⟨x − p, y − p⟩. For
/// indicators y is drawn from the set (a projected random point), and the
/// projection must be feasible and idempotent.
inline std::vector<CheckResult> check_prox() {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(12);
  std::vector<std::pair<std::string, ProxFamily>> fams;
  auto fam = [&](const std::string& name, Index dim) -> ProxFamily& {
    fams.push_back({name, ProxFamily(dim)});
    return fams.back().second;
  };
  fam("l1", 5).add_simple(0, 5, ProxKind::l1, 0.7);
  fam("l2", 5).add_simple(0, 5, ProxKind::l2, 1.3);
  fam("linf", 5).add_simple(0, 5, ProxKind::linf, 0.9);
  fam("l21", 6).add_l21(0, 6, 2, 0.8);
  fam("nuclear", 6).add_nuclear(0, 3, 2, 1, 1.1);
  fam("nuclear(3x3)", 9).add_nuclear(0, 3, 3, 1, 0.6);
  fam("box", 5).add_box(0, 5, -0.5, 0.25);
  fam("l1_ball", 5).add_l1_ball(0, 5, 1.2);
  fam("epi_l2", 5).add_epi_l2(0, 4, 1, 1.7);
  fam("epi_l1", 5).add_epi_l1(0, 4, 1);
  fam("epi_nuclear", 7).add_epi_nuclear(0, 3, 2, 1);
  fam("identity_set", 6).add_identity_set(0, 3);
  fam("weighted_mixed", 5).add_weighted_mixed(0, 5, 1, 0.5);

  for (const auto& [name, f] : fams) {
    const bool indicator = is_indicator(f.blocks().front().kind);
    double worst = 0.0, infeasible = 0.0, drift = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const double gamma = 0.2 + 1.5 * std::uniform_real_distribution<double>()(rng);
      const Vec x = 2.0 * detail::random_vec(f.dim(), rng);
      const Vec p = f.prox(x, gamma);
      if (indicator) {
        if (!std::isfinite(f.value(p, 1e-10))) infeasible = 1.0;
        drift = std::max(drift, (f.prox(p, gamma) - p).norm());
      }
      const double fp = indicator ? 0.0 : gamma * f.value(p);
      for (int s = 0; s < 20; ++s) {
        Vec y = 2.0 * detail::random_vec(f.dim(), rng);
        if (indicator) y = f.prox(y, 1.0);
        const double fy = indicator ? 0.0 : gamma * f.value(y);
        worst = std::max(worst, fp + (x - p).dot(y - p) - fy);
      }
    }
    CheckResult r;
    r.name = "prox " + name;
    r.pass = worst <= 1e-9 && infeasible == 0.0 && drift <= 1e-10;
    r.detail = "optimality violation " + format_double(worst);
    if (indicator) r.detail += ", idempotence " + format_double(drift);
    out.push_back(r);
  }
  return out;
}

/// ER-LiGME DSTV at side 8: θ = ρ keeps Φ̂ᵀΦ̂ − μ𝔏ᵀBᵀB𝔏 ⪰ O; θ > ρ is refused.
inline std::vector<CheckResult> check_convexity() {
  std::vector<CheckResult> out;
  Problem p = make_denoise_problem(8, 3, 0.1, 5);
  VariantConfig c;
  c.regularizer = Regularizer::DSTV;
  c.enhancement = Enhancement::er_ligme;
  c.n = 8;
  c.w = 2;
  c.mu = 0.3;
  c.theta = c.rho = 2.0;
  ReferenceData ref;
  ref.alpha = reference_alpha(c.rho);
  ref.z_r = Vec::Constant(regularizer_parts(c).z_len, 0.1);
  {
    const ModelSpec spec = build_model(c, p.phi, p.y, ref);
    const ConvexityReport rep = check_overall_convexity(spec);
    out.push_back({"convexity theta = rho", rep.convex && rep.exact,
                   "lambda_min " + format_double(rep.min_eigenvalue)});
  }
  c.theta = 2.5;
  bool refused = false;
  try {
    build_model(c, p.phi, p.y, ref);
  } catch (const ConfigError&) {
    refused = true;
  }
  out.push_back({"convexity theta > rho refused", refused, ""});
  return out;
}

/// ½(2 − x)² + 0.5·Ψ_B(x), Ψ = |·|: LiGME with θ = 0.99 returns 2, lasso 1.5.
inline ModelSpec scalar_model(double theta) {
  ModelSpec s;
  s.mu = 0.5;
  s.phi = identity(1);
  s.y = Vec::Constant(1, 2.0);
  s.phi_hat = s.phi;
  s.y_hat = s.y;
  s.frakL = identity(1);
  s.C = identity(1);
  s.B = theta > 0.0 ? scaled_identity(1, std::sqrt(theta / s.mu)) : zero(1, 1);
  s.seed_prox = ProxFamily(1);
  s.seed_prox.add_simple(0, 1, ProxKind::l1);
  s.constraint_prox = ProxFamily(1);
  s.constraint_prox.add_simple(0, 1, ProxKind::pass_through);
  s.layout.add("x", 1);
  s.cfg.regularizer = Regularizer::NN;
  s.cfg.rows = 1;
  s.cfg.cols = 1;
  s.cfg.box_lo = -10.0;
  s.cfg.box_hi = 10.0;
  return s;
}

inline std::vector<CheckResult> check_scalar_debiasing() {
  SolverConfig sc;
  sc.eps_stop = 1e-10;
  sc.max_iters = 200000;
  const double ligme = solve(scalar_model(0.99), sc).state.x[0];
  const double lasso = solve(scalar_model(0.0), sc).state.x[0];
  return {{"scalar LiGME x* = 2", std::abs(ligme - 2.0) <= 1e-2, "x* " + format_double(ligme)},
          {"scalar lasso x* = 1.5", std::abs(lasso - 1.5) <= 1e-3, "x* " + format_double(lasso)}};
}

inline std::vector<CheckResult> run_self_tests() {
  std::vector<CheckResult> all;
  for (auto part : {check_operators(), check_prox(), check_convexity(), check_scalar_debiasing()})
    all.insert(all.end(), part.begin(), part.end());
  return all;
}

}  // namespace erligme
