#pragma once

// Model builders: wire each regularizer/enhancement pair into a ModelSpec
// (Φ̂, ŷ, 𝔏, C, B, Ψ, ι_C) ready for the primal-dual solver.

#include "erligme/image_ops.hpp"
#include "erligme/linops.hpp"
#include "erligme/prox.hpp"
#include "erligme/transforms.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace erligme {

enum class Regularizer { DVTV, STV, DSTV, NN, ASNN };
enum class Enhancement { plain, ligme, er_ligme };
enum class BMode { scaled_identity, chen_svd };

inline const char* to_string(Regularizer r) {
  switch (r) {
    case Regularizer::DVTV: return "DVTV";
    case Regularizer::STV: return "STV";
    case Regularizer::DSTV: return "DSTV";
    case Regularizer::NN: return "NN";
    case Regularizer::ASNN: return "ASNN";
  }
  return "?";
}

inline const char* to_string(Enhancement e) {
  switch (e) {
    case Enhancement::plain: return "plain";
    case Enhancement::ligme: return "ligme";
    case Enhancement::er_ligme: return "er_ligme";
  }
  return "?";
}

inline const char* to_string(BMode m) {
  return m == BMode::chen_svd ? "chen_svd" : "scaled_identity";
}

/// Short method label used in tables: DVTV, L-DVTV, EL-DVTV, ...
inline std::string variant_label(Regularizer r, Enhancement e) {
  const std::string base = to_string(r);
  if (e == Enhancement::ligme) return "L-" + base;
  if (e == Enhancement::er_ligme) return "EL-" + base;
  return base;
}

inline bool is_image_regularizer(Regularizer r) {
  return r == Regularizer::DVTV || r == Regularizer::STV || r == Regularizer::DSTV;
}

struct VariantConfig {
  Regularizer regularizer = Regularizer::DSTV;
  Enhancement enhancement = Enhancement::plain;
  double theta = 0.0;
  double rho = 1.0;
  double mu = 0.1;
  double lambda1 = 1.0;   ///< nuclear-norm weight (NN, ASNN)
  double eps_s = 1.0;     ///< ℓ1-ball radius on the outlier block (NN, ASNN)
  Index w = 3;            ///< patch side (STV, DSTV)
  bool overlap = false;
  Index n = 8;            ///< image side
  Index channels = 3;
  Index rows = 32, cols = 25;  ///< RPCA matrix size
  BMode b_mode = BMode::scaled_identity;
  double strict_eps = 0.0;     ///< optional ε‖z‖₁ added to the outer layer
  double box_lo = 0.0, box_hi = 1.0;

  /// Length of the regularized signal (image, or ℓ for RPCA).
  Index signal_len() const {
    return is_image_regularizer(regularizer) ? channels * n * n : rows * cols;
  }
};

struct Segment {
  std::string name;
  Index offset = 0;
  Index length = 0;
};

/// Named slices of the expanded variable x̂.
struct Layout {
  std::vector<Segment> segments;

  Index dim() const {
    Index d = 0;
    for (const auto& s : segments) d = std::max(d, s.offset + s.length);
    return d;
  }
  const Segment* find(const std::string& name) const {
    for (const auto& s : segments)
      if (s.name == name) return &s;
    return nullptr;
  }
  const Segment& at(const std::string& name) const {
    const Segment* s = find(name);
    if (!s) throw ConfigError("layout has no segment '" + name + "'");
    return *s;
  }
  Layout& add(std::string name, Index length) {
    segments.push_back({std::move(name), dim(), length});
    return *this;
  }
};

struct ReferenceData {
  Vec z_r;
  double alpha = 1.0;
  std::string source;
};

struct ModelSpec {
  VariantConfig cfg;
  LinearOperator phi;      ///< observation operator on the data block of x̂
  Vec y;                   ///< raw observation
  LinearOperator phi_hat;  ///< extended observation on x̂
  Vec y_hat;
  LinearOperator frakL;
  LinearOperator C;
  LinearOperator B;
  ProxFamily seed_prox;        ///< Ψ on the 𝔏-image
  ProxFamily constraint_prox;  ///< ι_{C0} on the C-image
  double mu = 1.0;
  Layout layout;
  bool epigraphical = false;   ///< true when x̂ carries an auxiliary z block
  bool goe = false;            ///< guided observation extension applied
  double rho = 0.0;
  double theta = 0.0;

  Index dim() const { return frakL.in_dim(); }

  /// Throws unless the operator dimensions chain together.
  void check_dimensions() const {
    const Index d = dim();
    require_dim(phi_hat.in_dim() == d && C.in_dim() == d,
                "model: Φ̂, 𝔏 and C must share the input dimension");
    require_dim(phi_hat.out_dim() == y_hat.size(), "model: ŷ does not match Φ̂");
    require_dim(B.in_dim() == frakL.out_dim(), "model: B must act on the 𝔏-image");
    require_dim(seed_prox.dim() == frakL.out_dim(), "model: Ψ must act on the 𝔏-image");
    require_dim(constraint_prox.dim() == C.out_dim(), "model: ι must act on the C-image");
    seed_prox.validate();
    constraint_prox.validate();
  }
};

// ---------------------------------------------------------------------------
// Regularizer anatomy: analysis operator, inner layer and outer layer

struct RegularizerParts {
  LinearOperator analysis;  ///< A: signal → inner input
  ProxBlock inner;          ///< epigraph (or identity_set) block over [A x ; z]
  ProxFamily outer;         ///< outermost function on z
  std::optional<ProxFamily> direct;  ///< Ψ on A x when it is proximable
  Index z_len = 0;
};

/// Builds A and the layer structure of a regularizer on the signal.
inline RegularizerParts regularizer_parts(const VariantConfig& cfg) {
  RegularizerParts parts;
  const Index n = cfg.n, ch = cfg.channels;
  switch (cfg.regularizer) {
    case Regularizer::DVTV: {
      require_config(ch == 3, "DVTV needs a 3-channel image");
      const Index p = n * n;
      LinearOperator perm =
          make_grad_patch_permutation(p, 1, 3, PatchGrouping::per_channel);
      parts.analysis = compose({perm, make_gradient(n, 3), make_color_decorrelation(n)})
                           .with_tag("PDCD");
      parts.z_len = 3 * p;
      parts.inner.kind = ProxKind::epi_l2;
      parts.inner.group = 2;
      parts.inner.count = 3 * p;
      parts.inner.tau = 1.0;
      parts.inner.label = "epi_l2(gradient)";
      parts.outer = ProxFamily(parts.z_len);
      parts.outer.add_weighted_mixed(0, parts.z_len, p, 0.5);
      ProxFamily direct(6 * p);
      direct.add_l21(0, 2 * p, 2, 0.5);
      direct.add_l21(2 * p, 4 * p, 4, 1.0);
      parts.direct = direct;
      break;
    }
    case Regularizer::STV: {
      require_config(ch == 1 || ch == 3, "STV needs 1 or 3 channels");
      parts.analysis =
          make_patch_gradient(n, cfg.w, cfg.overlap, ch, PatchGrouping::stacked_channels, false);
      PatchGeometry g{n, cfg.w, cfg.overlap, 2 * ch};
      const Index np = g.patches(), rows = ch * cfg.w * cfg.w;
      parts.z_len = np;
      parts.inner.kind = ProxKind::epi_nuclear;
      parts.inner.rows = rows;
      parts.inner.cols = 2;
      parts.inner.group = 2 * rows;
      parts.inner.count = np;
      parts.inner.label = "epi_nuclear(patch)";
      parts.outer = ProxFamily(np);
      parts.outer.add_simple(0, np, ProxKind::l1);
      ProxFamily direct(parts.analysis.out_dim());
      direct.add_nuclear(0, rows, 2, np, 1.0);
      parts.direct = direct;
      break;
    }
    case Regularizer::DSTV: {
      require_config(ch == 3, "DSTV needs a 3-channel image");
      parts.analysis =
          make_patch_gradient(n, cfg.w, cfg.overlap, 3, PatchGrouping::per_channel, true);
      PatchGeometry g{n, cfg.w, cfg.overlap, 6};
      const Index np = g.patches(), rows = cfg.w * cfg.w;
      parts.z_len = 3 * np;
      parts.inner.kind = ProxKind::epi_nuclear;
      parts.inner.rows = rows;
      parts.inner.cols = 2;
      parts.inner.group = 2 * rows;
      parts.inner.count = 3 * np;
      parts.inner.label = "epi_nuclear(patch)";
      parts.outer = ProxFamily(parts.z_len);
      parts.outer.add_weighted_mixed(0, parts.z_len, np, 0.5);
      break;
    }
    case Regularizer::NN: {
      const Index mn = cfg.rows * cfg.cols;
      parts.analysis = identity(mn);
      parts.z_len = mn;
      parts.inner.kind = ProxKind::identity_set;
      parts.inner.count = mn;
      parts.inner.group = 1;
      parts.inner.label = "identity_set";
      parts.outer = ProxFamily(mn);
      parts.outer.add_nuclear(0, cfg.rows, cfg.cols, 1, cfg.lambda1);
      parts.direct = parts.outer;
      break;
    }
    case Regularizer::ASNN: {
      const Index mn = cfg.rows * cfg.cols;
      parts.analysis = make_dft_pairing(cfg.rows, cfg.cols);
      parts.z_len = mn;
      parts.inner.kind = ProxKind::epi_l2;
      parts.inner.group = 2;
      parts.inner.count = mn;
      parts.inner.tau = 1.0;
      parts.inner.label = "epi_l2(spectrum)";
      parts.outer = ProxFamily(mn);
      parts.outer.add_nuclear(0, cfg.rows, cfg.cols, 1, cfg.lambda1);
      break;
    }
  }
  if (cfg.strict_eps > 0.0) {
    // ε‖z‖₁ composes in closed form only with the ℓ1-type outer layers.
    ProxFamily outer(parts.z_len);
    for (ProxBlock b : parts.outer.blocks()) {
      require_config(b.kind == ProxKind::l1 || b.kind == ProxKind::weighted_mixed_l1_l21,
                     "strict_eps is only supported for l1-type outer layers");
      if (b.kind == ProxKind::l1) {
        b.weight += cfg.strict_eps;
      } else {
        b.l1_extra = cfg.strict_eps;
      }
      outer.add(b);
    }
    parts.outer = outer;
  }
  return parts;
}

/// Result of evaluating a regularizer directly (no relaxation).
struct RegularizerEval {
  double value = 0.0;  ///< outer(inner(A x)); includes λ₁ where applicable
  Vec inner;           ///< z = inner(A x)
  Vec analysis;        ///< A x
};

inline RegularizerEval eval_regularizer(const RegularizerParts& parts, VecCRef signal) {
  RegularizerEval r;
  r.analysis = parts.analysis.apply(signal);
  r.inner.resize(parts.z_len);
  if (parts.inner.kind == ProxKind::identity_set) {
    r.inner = r.analysis;
  } else {
    for (Index i = 0; i < parts.z_len; ++i)
      r.inner[i] = ProxFamily::inner_value(parts.inner, r.analysis.data() + i * parts.inner.group);
  }
  r.value = parts.outer.value(r.inner);
  return r;
}

inline RegularizerEval eval_regularizer(const VariantConfig& cfg, VecCRef signal) {
  require_dim(signal.size() == cfg.signal_len(), "eval_regularizer: signal has wrong length");
  return eval_regularizer(regularizer_parts(cfg), signal);
}

// ---------------------------------------------------------------------------
// Enhancement operators

/// B = diag(O, √(θ/μ) I on z, O, ...).
inline LinearOperator build_B_er(const Layout& layout, double theta, double mu) {
  require_config(theta >= 0.0, "build_B_er: theta must be non-negative");
  require_config(mu > 0.0, "build_B_er: mu must be positive");
  const Segment& z = layout.at("z");
  Vec d = Vec::Zero(layout.dim());
  d.segment(z.offset, z.length).setConstant(std::sqrt(theta / mu));
  return diagonal(std::move(d), "B_er");
}

/// Moreau-enhancement matrix for the classic LiGME variants.
///   scaled_identity: B = √(θ / (μ λmax(𝔏ᵀ𝔏))) I, valid whenever ΦᵀΦ ⪰ θI.
///   chen_svd:        B = [√(θ/μ) M̂, O] Σ† 𝔘ᵀ from the SVD 𝔏 = 𝔘 Σ 𝔅ᵀ and
///                    M̂ = Φ₁ − Φ₂Φ₂†Φ₁ with [Φ₁ | Φ₂] = Φ𝔅 (dense, small sizes).
inline LinearOperator build_B_ligme(const LinearOperator& frakL, const LinearOperator& phi,
                                    double theta, double mu, BMode mode) {
  require_config(theta >= 0.0, "build_B_ligme: theta must be non-negative");
  require_config(mu > 0.0, "build_B_ligme: mu must be positive");
  const Index nl = frakL.out_dim();
  if (theta == 0.0) return zero(nl, nl);
  if (mode == BMode::scaled_identity) {
    const NormEstimate est = op_norm_estimate(frakL, 1e-8, 20000);
    require_config(est.value > 0.0, "build_B_ligme: 𝔏 is zero");
    // Small inflation keeps the bound safe against power-iteration error.
    const double lambda = est.value * (1.0 + 1e-6);
    return scaled_identity(nl, std::sqrt(theta / (mu * lambda))).with_tag("B_ligme");
  }
  if (frakL.in_dim() + frakL.out_dim() > kDenseLimit ||
      phi.in_dim() + phi.out_dim() > kDenseLimit)
    throw CapacityError("build_B_ligme: chen_svd needs dense operators; use scaled_identity");
  const Mat l = materialize(frakL);
  const Mat f = materialize(phi);
  Eigen::BDCSVD<Mat> svd(l, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double tol = std::max(l.rows(), l.cols()) * s(0) * 1e-12;
  Index r = 0;
  while (r < s.size() && s[r] > tol) ++r;
  const Mat fb = f * svd.matrixV();
  const Mat phi1 = fb.leftCols(r);
  Mat mhat = phi1;
  if (r < fb.cols()) {
    const Mat phi2 = fb.rightCols(fb.cols() - r);
    const Mat pinv = phi2.completeOrthogonalDecomposition().pseudoInverse();
    mhat = phi1 - phi2 * (pinv * phi1);
  }
  const Mat b = std::sqrt(theta / mu) * mhat * s.head(r).cwiseInverse().asDiagonal() *
                svd.matrixU().leftCols(r).transpose();
  return dense(b, "B_chen");
}

/// Appends √ρ·I on z to Φ̂ and √ρ·z_R to ŷ.
inline ModelSpec apply_goe(const ModelSpec& spec, VecCRef z_r, double rho) {
  require_config(rho > 0.0, "apply_goe: rho must be positive");
  const Segment* z = spec.layout.find("z");
  require_config(z != nullptr, "apply_goe: model has no auxiliary z block");
  require_dim(z_r.size() == z->length, "apply_goe: reference has wrong length");
  ModelSpec out = spec;
  const double r = std::sqrt(rho);
  out.phi_hat = stack({spec.phi_hat, scale(select(spec.dim(), z->offset, z->length), r)})
                    .with_tag("Phi_hat");
  out.y_hat.resize(spec.y_hat.size() + z->length);
  out.y_hat << spec.y_hat, r * z_r;
  out.goe = true;
  out.rho = rho;
  return out;
}

/// α = 1/ρ for ρ < 1, 1 + 1/ρ otherwise.
inline double reference_alpha(double rho) {
  require_config(rho > 0.0, "reference: rho must be positive");
  return rho < 1.0 ? 1.0 / rho : 1.0 + 1.0 / rho;
}

/// z_R = α · inner(A x*) from a signal estimate x*.
inline ReferenceData reference_from_solution(const VariantConfig& cfg, VecCRef signal,
                                             double rho, std::string source = "solution") {
  ReferenceData ref;
  ref.alpha = reference_alpha(rho);
  ref.z_r = ref.alpha * eval_regularizer(cfg, signal).inner;
  ref.source = std::move(source);
  return ref;
}

// ---------------------------------------------------------------------------
// Builders

namespace detail {

/// Data block layout, observation on it, and its box/ball constraints.
struct DataPart {
  Layout layout;
  Index len = 0;
};

inline DataPart data_part(const VariantConfig& cfg) {
  DataPart d;
  if (is_image_regularizer(cfg.regularizer)) {
    d.layout.add("x", cfg.signal_len());
  } else {
    d.layout.add("l", cfg.signal_len());
    d.layout.add("s", cfg.signal_len());
  }
  d.len = d.layout.dim();
  return d;
}

/// Appends the box (and ℓ1-ball) constraints on the data block, whose image
/// in C starts at `offset`.
inline void add_data_constraints(ProxFamily& f, const VariantConfig& cfg, Index offset) {
  const Index len = cfg.signal_len();
  f.add_box(offset, len, cfg.box_lo, cfg.box_hi);
  if (!is_image_regularizer(cfg.regularizer)) f.add_l1_ball(offset + len, len, cfg.eps_s);
}

/// The epigraphically relaxed form with B = O and no GOE.
inline ModelSpec build_er_form(const VariantConfig& cfg, const LinearOperator& phi,
                               VecCRef y) {
  RegularizerParts parts = regularizer_parts(cfg);
  DataPart data = data_part(cfg);
  ModelSpec spec;
  spec.cfg = cfg;
  spec.phi = phi;
  spec.y = y;
  spec.mu = cfg.mu;
  spec.epigraphical = true;
  spec.layout = data.layout;
  spec.layout.add("z", parts.z_len);
  const Index dim = spec.layout.dim();
  const Index sig = cfg.signal_len();
  const Segment& z = spec.layout.at("z");

  LinearOperator sel_x = select(dim, 0, sig);
  LinearOperator sel_data = select(dim, 0, data.len);
  LinearOperator sel_z = select(dim, z.offset, z.length);

  spec.phi_hat = compose(phi, sel_data).with_tag("Phi_O");
  spec.y_hat = y;
  spec.frakL = identity(dim);
  spec.B = zero(dim, dim);

  std::vector<LinearOperator> rows;
  rows.push_back(compose(parts.analysis, sel_x));
  rows.push_back(sel_z);
  rows.push_back(sel_data);
  spec.C = stack(rows).with_tag("C");

  spec.seed_prox = ProxFamily(dim);
  spec.seed_prox.add_simple(0, data.len, ProxKind::pass_through);
  for (ProxBlock b : parts.outer.blocks()) {
    b.offset += z.offset;
    spec.seed_prox.add(b);
  }

  const Index a_len = parts.analysis.out_dim();
  spec.constraint_prox = ProxFamily(spec.C.out_dim());
  ProxBlock inner = parts.inner;
  inner.offset = 0;
  inner.length = (inner.kind == ProxKind::identity_set) ? 2 * inner.count
                                                        : inner.count * inner.group + inner.count;
  require_dim(inner.length == a_len + z.length, "model: inner layer does not match A");
  spec.constraint_prox.add(inner);
  add_data_constraints(spec.constraint_prox, cfg, a_len + z.length);
  spec.check_dimensions();
  return spec;
}

/// The direct form (𝔏 = A on images, 𝔏 = I for NN) with C = I.
inline ModelSpec build_direct_form(const VariantConfig& cfg, const LinearOperator& phi,
                                   VecCRef y) {
  RegularizerParts parts = regularizer_parts(cfg);
  require_config(parts.direct.has_value(),
                 std::string(to_string(cfg.regularizer)) + " has no proximable direct form");
  DataPart data = data_part(cfg);
  ModelSpec spec;
  spec.cfg = cfg;
  spec.phi = phi;
  spec.y = y;
  spec.mu = cfg.mu;
  spec.layout = data.layout;
  const Index dim = data.len;
  spec.phi_hat = phi;
  spec.y_hat = y;
  spec.C = identity(dim);
  spec.constraint_prox = ProxFamily(dim);
  add_data_constraints(spec.constraint_prox, cfg, 0);
  if (is_image_regularizer(cfg.regularizer)) {
    spec.frakL = parts.analysis;
    spec.seed_prox = *parts.direct;
  } else {
    spec.frakL = identity(dim);
    spec.seed_prox = ProxFamily(dim);
    for (ProxBlock b : parts.direct->blocks()) spec.seed_prox.add(b);
    spec.seed_prox.add_simple(cfg.signal_len(), cfg.signal_len(), ProxKind::pass_through);
  }
  spec.B = zero(spec.frakL.out_dim(), spec.frakL.out_dim());
  spec.check_dimensions();
  return spec;
}

}  // namespace detail

/// Builds the model for `cfg`. For NN and ASNN, phi acts on the stacked (ℓ, s).
/// er_ligme requires reference data.
inline ModelSpec build_model(const VariantConfig& cfg, const LinearOperator& phi, VecCRef y,
                             const std::optional<ReferenceData>& ref = std::nullopt) {
  require_config(cfg.mu > 0.0, "mu must be positive");
  require_config(cfg.theta >= 0.0, "theta must be non-negative");
  require_config(y.size() == phi.out_dim(), "observation length does not match Φ");
  const bool image = is_image_regularizer(cfg.regularizer);
  require_config(phi.in_dim() == (image ? cfg.signal_len() : 2 * cfg.signal_len()),
                 "Φ input dimension does not match the variant geometry");
  if (image) {
    require_config(cfg.n >= 2, "image side must be at least 2");
    if (cfg.regularizer != Regularizer::DVTV)
      require_config(cfg.w >= 1 && cfg.w <= cfg.n, "patch size must lie in [1, n]");
  } else {
    require_config(cfg.rows >= 1 && cfg.cols >= 1, "matrix size must be positive");
    require_config(cfg.eps_s > 0.0, "eps_s must be positive");
    require_config(cfg.lambda1 > 0.0, "lambda1 must be positive");
  }

  const Regularizer r = cfg.regularizer;
  const bool er_native = (r == Regularizer::DSTV || r == Regularizer::ASNN);
  switch (cfg.enhancement) {
    case Enhancement::plain:
      return er_native ? detail::build_er_form(cfg, phi, y) : detail::build_direct_form(cfg, phi, y);
    case Enhancement::ligme: {
      require_config(!er_native, std::string(to_string(r)) +
                                     " is not proximable; its LiGME form is unavailable");
      ModelSpec spec = detail::build_direct_form(cfg, phi, y);
      spec.theta = cfg.theta;
      if (r == Regularizer::NN) {
        const Index mn = cfg.signal_len();
        Vec d = Vec::Zero(2 * mn);
        d.head(mn).setConstant(std::sqrt(cfg.theta / cfg.mu));
        spec.B = diagonal(std::move(d), "B_nn");
      } else {
        spec.B = build_B_ligme(spec.frakL, phi, cfg.theta, cfg.mu, cfg.b_mode);
      }
      return spec;
    }
    case Enhancement::er_ligme: {
      if (cfg.theta > cfg.rho)
        throw ConfigError("convexity condition violated: theta (" + std::to_string(cfg.theta) +
                          ") must not exceed rho (" + std::to_string(cfg.rho) + ")");
      require_config(ref.has_value(), "er_ligme needs reference data z_R");
      ModelSpec spec = apply_goe(detail::build_er_form(cfg, phi, y), ref->z_r, cfg.rho);
      spec.theta = cfg.theta;
      spec.B = build_B_er(spec.layout, cfg.theta, cfg.mu);
      spec.check_dimensions();
      return spec;
    }
  }
  throw ConfigError("unknown enhancement");
}

/// The phase-1 model whose solution seeds z_R: the relaxed form with B = O.
inline ModelSpec build_reference_model(const VariantConfig& cfg, const LinearOperator& phi,
                                       VecCRef y) {
  return detail::build_er_form(cfg, phi, y);
}

/// Runs `solve` on the phase-1 model and scales its inner layer by α.
inline ReferenceData compute_reference(const VariantConfig& cfg, const LinearOperator& phi,
                                       VecCRef y, double rho,
                                       const std::function<Vec(const ModelSpec&)>& solve) {
  require_config(rho > 0.0, "compute_reference: rho must be positive");
  const ModelSpec phase1 = build_reference_model(cfg, phi, y);
  const Vec xhat = solve(phase1);
  return reference_from_solution(cfg, xhat.head(cfg.signal_len()), rho, "phase-1 relaxed solve");
}

// ---------------------------------------------------------------------------
// Penalty evaluation

/// Ψ_B(u) = Ψ(u) − min_v {Ψ(v) + ½‖B(u − v)‖²}.
/// Uses the exact Moreau-envelope formula when BᵀB is constant on every Ψ
/// block; otherwise runs `iters` proximal-gradient steps on the inner problem.
inline double ligme_penalty(const ProxFamily& psi, const LinearOperator& B, VecCRef u,
                            int iters = 20000) {
  require_dim(u.size() == psi.dim() && B.in_dim() == psi.dim(), "ligme_penalty: size mismatch");
  const double pu = psi.value(u);
  if (B.is_zero()) return pu;
  if (const Vec* d = B.diagonal()) {
    bool uniform = true;
    for (const auto& b : psi.blocks()) {
      const auto seg = d->segment(b.offset, b.length).cwiseAbs2();
      if (seg.maxCoeff() - seg.minCoeff() > 1e-15 * std::max(1.0, seg.maxCoeff())) uniform = false;
    }
    if (uniform) {
      double envelope = 0.0;
      for (const auto& b : psi.blocks()) {
        const double c = (*d)[b.offset] * (*d)[b.offset];
        ProxFamily one(b.length);
        ProxBlock bb = b;
        bb.offset = 0;
        one.add(bb);
        const Vec ub = u.segment(b.offset, b.length);
        if (c == 0.0) continue;  // inf Ψ_b = Ψ_b(0) = 0 for norms
        const Vec vb = one.prox(ub, 1.0 / c);
        envelope += one.value(vb) + 0.5 * c * (ub - vb).squaredNorm();
      }
      return pu - envelope;
    }
  }
  const double lip = op_norm_estimate(B, 1e-10, 20000).value;
  Vec v = u, vprev = u, t = u;
  double mom = 1.0;
  for (int k = 0; k < iters; ++k) {
    const Vec grad = B.adjoint(B.apply(t - u));
    vprev = v;
    v = psi.prox(t - grad / lip, 1.0 / lip);
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * mom * mom));
    t = v + ((mom - 1.0) / next) * (v - vprev);
    mom = next;
  }
  return pu - (psi.value(v) + 0.5 * B.apply(u - v).squaredNorm());
}

}  // namespace erligme
