#pragma once

// Proximity operators and projections, plus the block-structured ProxFamily
// that realizes separable sums such as Ψ ⊕ ι_C.
//
// Conventions: prox_{γf}(x) = argmin_y γ f(y) + ½‖x − y‖². Every prox at γ = 0
// returns its input. Epigraph pairs (x, ξ) are stored "x-part first": for a
// block of `count` pairs the layout is [x_1 … x_count][ξ_1 … ξ_count].

#include "erligme/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace erligme {

// ---------------------------------------------------------------------------
// In-place kernels

namespace detail {

inline void soft_threshold(double* x, Index n, double g) {
  for (Index i = 0; i < n; ++i) {
    const double a = std::abs(x[i]) - g;
    x[i] = a > 0.0 ? std::copysign(a, x[i]) : 0.0;
  }
}

inline void prox_l2(double* x, Index n, double g) {
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += x[i] * x[i];
  const double nrm = std::sqrt(s);
  const double f = 1.0 - g / std::max(nrm, g);
  for (Index i = 0; i < n; ++i) x[i] *= f;
}

/// Euclidean projection onto the ℓ1 ball of radius eps (sort-based).
inline void project_l1_ball(double* x, Index n, double eps) {
  double l1 = 0.0;
  for (Index i = 0; i < n; ++i) l1 += std::abs(x[i]);
  if (l1 <= eps) return;
  if (eps <= 0.0) {
    std::fill(x, x + n, 0.0);
    return;
  }
  std::vector<double> u(n);
  for (Index i = 0; i < n; ++i) u[i] = std::abs(x[i]);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cum += u[j];
    const double t = (cum - eps) / double(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  soft_threshold(x, n, theta);
}

/// Threshold γ* of the projection of (x, ξ) onto epi ‖·‖₁, for an infeasible
/// pair. The magnitudes a must be sorted in descending order. On the segment
/// where exactly k magnitudes exceed γ, ‖T_γ(x)‖₁ − γ − ξ = S_k − (k+1)γ − ξ.
inline double epi_l1_threshold(const std::vector<double>& a, double xi) {
  const Index n = Index(a.size());
  double cum = 0.0;
  for (Index k = 0; k <= n; ++k) {
    const double g = (cum - xi) / double(k + 1);
    const double next = (k < n) ? a[k] : 0.0;
    if (g >= next) return g;
    cum += a[k];
  }
  throw NumericalError("epi-l1 projection: no root found");
}

/// Projects (x, *xi) onto epi ‖·‖₁ in place.
inline void project_epi_l1(double* x, Index n, double* xi) {
  double l1 = 0.0;
  for (Index i = 0; i < n; ++i) l1 += std::abs(x[i]);
  if (l1 <= *xi) return;
  std::vector<double> a(n);
  for (Index i = 0; i < n; ++i) a[i] = std::abs(x[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  const double g = epi_l1_threshold(a, *xi);
  soft_threshold(x, n, g);
  *xi += g;
}

/// Projects (x, *xi) onto epi τ‖·‖₂ in place.
inline void project_epi_l2(double* x, Index n, double* xi, double tau) {
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += x[i] * x[i];
  const double nrm = std::sqrt(s);
  if (tau * nrm <= *xi) return;
  if (nrm <= -tau * *xi) {
    std::fill(x, x + n, 0.0);
    *xi = 0.0;
    return;
  }
  const double alpha = (1.0 + tau * *xi / nrm) / (1.0 + tau * tau);
  for (Index i = 0; i < n; ++i) x[i] *= alpha;
  *xi = alpha * tau * nrm;
}

/// Singular values of a rows×2 matrix together with a symmetric 2×2 map M such
/// that X·M = U diag(f(σ)) Vᵀ for a per-singular-value scale f. Only the Gram
/// matrix is needed, so no general SVD is performed.
struct TwoColumnSvd {
  double s1 = 0.0, s2 = 0.0;  // singular values, s1 ≥ s2 ≥ 0
  double c = 1.0, s = 0.0;    // right singular vectors (c, s), (−s, c)

  explicit TwoColumnSvd(const double* x, Index rows) {
    double a = 0.0, b = 0.0, d = 0.0;
    const double* u = x;
    const double* v = x + rows;
    for (Index i = 0; i < rows; ++i) {
      a += u[i] * u[i];
      b += u[i] * v[i];
      d += v[i] * v[i];
    }
    // Gram–Schmidt R factor: σ1σ2 = |r11 r22| keeps full relative accuracy in
    // σ2, unlike the square root of the small Gram eigenvalue.
    const double r11 = std::sqrt(a);
    double r22 = 0.0;
    if (r11 > 0.0) {
      const double r12 = b / r11;
      double res = 0.0;
      for (Index i = 0; i < rows; ++i) {
        const double e = v[i] - r12 * u[i] / r11;
        res += e * e;
      }
      r22 = std::sqrt(res);
    } else {
      r22 = std::sqrt(d);
    }
    const double mean = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), b);
    s1 = std::sqrt(std::max(mean + rad, 0.0));
    s2 = s1 > 0.0 ? std::min(r11 * r22 / s1, s1) : 0.0;
    const double theta = 0.5 * std::atan2(2.0 * b, a - d);
    c = std::cos(theta);
    s = std::sin(theta);
  }

  /// Replaces X by X·V diag(f1, f2) Vᵀ.
  void rescale(double* x, Index rows, double f1, double f2) const {
    const double m11 = f1 * c * c + f2 * s * s;
    const double m22 = f1 * s * s + f2 * c * c;
    const double m12 = (f1 - f2) * c * s;
    double* u = x;
    double* v = x + rows;
    for (Index i = 0; i < rows; ++i) {
      const double p = u[i], q = v[i];
      u[i] = p * m11 + q * m12;
      v[i] = p * m12 + q * m22;
    }
  }
};

inline double shrink_ratio(double sigma, double g) {
  return sigma > g ? (sigma - g) / sigma : 0.0;
}

/// Eigen-based SVD X = U diag(σ) Vᵀ used for general nuclear-norm blocks.
struct GeneralSvd {
  Mat u, v;
  Vec sigma;

  GeneralSvd(const double* data, Index rows, Index cols) {
    Eigen::Map<const Mat> x(data, rows, cols);
    Eigen::BDCSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD failed to converge");
    u = svd.matrixU();
    v = svd.matrixV();
    sigma = svd.singularValues();
  }

  void write(double* data, Index rows, Index cols, const Vec& s) const {
    Eigen::Map<Mat> x(data, rows, cols);
    x.noalias() = u * s.asDiagonal() * v.transpose();
  }
};

inline void prox_nuclear(double* x, Index rows, Index cols, double g) {
  if (g == 0.0) return;
  if (cols == 2) {
    TwoColumnSvd t(x, rows);
    t.rescale(x, rows, shrink_ratio(t.s1, g), shrink_ratio(t.s2, g));
    return;
  }
  GeneralSvd svd(x, rows, cols);
  Vec s = (svd.sigma.array() - g).max(0.0).matrix();
  svd.write(x, rows, cols, s);
}

inline double nuclear_norm(const double* x, Index rows, Index cols) {
  if (cols == 2) {
    TwoColumnSvd t(x, rows);
    return t.s1 + t.s2;
  }
  Eigen::Map<const Mat> m(x, rows, cols);
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues().sum();
}

inline void project_epi_nuclear(double* x, Index rows, Index cols, double* xi) {
  if (cols == 2) {
    TwoColumnSvd t(x, rows);
    if (t.s1 + t.s2 <= *xi) return;
    std::vector<double> a{t.s1, t.s2};
    const double g = epi_l1_threshold(a, *xi);
    t.rescale(x, rows, shrink_ratio(t.s1, g), shrink_ratio(t.s2, g));
    *xi += g;
    return;
  }
  GeneralSvd svd(x, rows, cols);
  if (svd.sigma.sum() <= *xi) return;
  std::vector<double> a(svd.sigma.data(), svd.sigma.data() + svd.sigma.size());
  const double g = epi_l1_threshold(a, *xi);
  Vec s = (svd.sigma.array() - g).max(0.0).matrix();
  svd.write(x, rows, cols, s);
  *xi += g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Value-returning catalogue

inline Vec prox_l1(VecCRef x, double gamma) {
  Vec y = x;
  if (gamma > 0.0) detail::soft_threshold(y.data(), y.size(), gamma);
  return y;
}

inline Vec prox_l2(VecCRef x, double gamma) {
  Vec y = x;
  if (gamma > 0.0) detail::prox_l2(y.data(), y.size(), gamma);
  return y;
}

inline Vec project_l1_ball(VecCRef x, double eps) {
  require_config(eps >= 0.0, "project_l1_ball: radius must be non-negative");
  Vec y = x;
  detail::project_l1_ball(y.data(), y.size(), eps);
  return y;
}

/// Moreau decomposition: prox_{γ‖·‖∞}(x) = x − γ P_{B1}(x/γ).
inline Vec prox_linf(VecCRef x, double gamma) {
  if (gamma <= 0.0) return x;
  Vec p = x / gamma;
  detail::project_l1_ball(p.data(), p.size(), 1.0);
  return x - gamma * p;
}

inline Vec prox_l21_blocks(VecCRef x, double gamma, Index block) {
  require_dim(block >= 1 && x.size() % block == 0,
              "prox_l21_blocks: block size does not divide the length");
  Vec y = x;
  if (gamma > 0.0)
    for (Index i = 0; i < y.size(); i += block) detail::prox_l2(y.data() + i, block, gamma);
  return y;
}

inline Mat prox_nuclear(const Mat& x, double gamma) {
  Mat y = x;
  if (gamma > 0.0) detail::prox_nuclear(y.data(), y.rows(), y.cols(), gamma);
  return y;
}

inline Vec project_box(VecCRef x, double a, double b) {
  require_config(a <= b, "project_box: lower bound exceeds upper bound");
  return x.cwiseMax(a).cwiseMin(b);
}

inline std::pair<Vec, double> project_epi_l2(VecCRef x, double xi, double tau) {
  require_config(tau > 0.0, "project_epi_l2: tau must be positive");
  Vec y = x;
  double t = xi;
  detail::project_epi_l2(y.data(), y.size(), &t, tau);
  return {y, t};
}

inline std::pair<Vec, double> project_epi_l1(VecCRef x, double xi) {
  Vec y = x;
  double t = xi;
  detail::project_epi_l1(y.data(), y.size(), &t);
  return {y, t};
}

inline std::pair<Mat, double> project_epi_nuclear(const Mat& x, double xi) {
  Mat y = x;
  double t = xi;
  detail::project_epi_nuclear(y.data(), y.rows(), y.cols(), &t);
  return {y, t};
}

/// prox of γ(w‖z_y‖₁ + Σ‖(z_c1, z_c2)‖₂) with the luma slice first and the
/// chroma slice stored as consecutive pairs.
inline Vec prox_weighted_l1_l21(VecCRef z, double gamma, Index luma_len,
                                double weight = 0.5) {
  require_dim(luma_len >= 0 && luma_len <= z.size() && (z.size() - luma_len) % 2 == 0,
              "prox_weighted_l1_l21: chroma slice must hold pairs");
  Vec y = z;
  if (gamma > 0.0) {
    detail::soft_threshold(y.data(), luma_len, gamma * weight);
    for (Index i = luma_len; i < y.size(); i += 2) detail::prox_l2(y.data() + i, 2, gamma);
  }
  return y;
}

/// Projection onto {(x, y) | x = y}.
inline std::pair<Vec, Vec> project_identity_set(VecCRef x, VecCRef y) {
  require_dim(x.size() == y.size(), "project_identity_set: length mismatch");
  Vec m = 0.5 * (x + y);
  return {m, m};
}

// ---------------------------------------------------------------------------
// Block-structured families

enum class ProxKind {
  l1,
  l2,
  linf,
  l21,
  nuclear,
  box,
  l1_ball,
  epi_l2,
  epi_l1,
  epi_nuclear,
  identity_set,
  weighted_mixed_l1_l21,
  pass_through,
};

inline const char* kind_name(ProxKind k) {
  switch (k) {
    case ProxKind::l1: return "l1";
    case ProxKind::l2: return "l2";
    case ProxKind::linf: return "linf";
    case ProxKind::l21: return "l21";
    case ProxKind::nuclear: return "nuclear";
    case ProxKind::box: return "box";
    case ProxKind::l1_ball: return "l1_ball";
    case ProxKind::epi_l2: return "epi_l2";
    case ProxKind::epi_l1: return "epi_l1";
    case ProxKind::epi_nuclear: return "epi_nuclear";
    case ProxKind::identity_set: return "identity_set";
    case ProxKind::weighted_mixed_l1_l21: return "weighted_mixed_l1_l21";
    case ProxKind::pass_through: return "pass_through";
  }
  return "?";
}

/// Indicator kinds ignore γ and the weight.
inline bool is_indicator(ProxKind k) {
  switch (k) {
    case ProxKind::box:
    case ProxKind::l1_ball:
    case ProxKind::epi_l2:
    case ProxKind::epi_l1:
    case ProxKind::epi_nuclear:
    case ProxKind::identity_set:
      return true;
    default:
      return false;
  }
}

inline bool is_epigraph(ProxKind k) {
  return k == ProxKind::epi_l2 || k == ProxKind::epi_l1 || k == ProxKind::epi_nuclear;
}

/// One block of a separable function. Which parameters matter depends on kind:
///   l21              group (inner block length)
///   nuclear          rows, cols, count (matrices stored back to back)
///   box              lo, hi
///   l1_ball          radius
///   epi_l2 / epi_l1  group (vector length), count (pairs), tau (epi_l2)
///   epi_nuclear      rows, cols, count
///   identity_set     count (two halves of this length)
///   weighted_mixed   luma_len, luma_weight, l1_extra (extra ε‖·‖₁ term)
struct ProxBlock {
  Index offset = 0;
  Index length = 0;
  ProxKind kind = ProxKind::pass_through;
  double weight = 1.0;
  double lo = 0.0, hi = 1.0;
  double radius = 1.0;
  double tau = 1.0;
  Index rows = 0, cols = 0;
  Index group = 1;
  Index count = 1;
  Index luma_len = 0;
  double luma_weight = 0.5;
  double l1_extra = 0.0;
  std::string label;
};

struct EpigraphGap {
  std::string label;
  double raw = 0.0;       ///< max |ξ − f(x)| over pairs
  double relative = 0.0;  ///< raw / max(‖ξ‖∞, tiny)
};

class ProxFamily {
 public:
  ProxFamily() = default;
  explicit ProxFamily(Index dim) : dim_(dim) {}

  Index dim() const { return dim_; }
  const std::vector<ProxBlock>& blocks() const { return blocks_; }

  ProxFamily& add(ProxBlock b) {
    blocks_.push_back(std::move(b));
    return *this;
  }

  // Builders; each appends a block at `offset`.
  ProxFamily& add_simple(Index offset, Index length, ProxKind k, double weight = 1.0,
                         std::string label = {}) {
    ProxBlock b;
    b.offset = offset;
    b.length = length;
    b.kind = k;
    b.weight = weight;
    b.label = label.empty() ? kind_name(k) : std::move(label);
    return add(std::move(b));
  }
  ProxFamily& add_l21(Index offset, Index length, Index group, double weight = 1.0) {
    ProxBlock b;
    b.offset = offset;
    b.length = length;
    b.kind = ProxKind::l21;
    b.group = group;
    b.weight = weight;
    b.label = "l21";
    return add(std::move(b));
  }
  ProxFamily& add_nuclear(Index offset, Index rows, Index cols, Index count,
                          double weight = 1.0) {
    ProxBlock b;
    b.offset = offset;
    b.length = rows * cols * count;
    b.kind = ProxKind::nuclear;
    b.rows = rows;
    b.cols = cols;
    b.count = count;
    b.weight = weight;
    b.label = "nuclear";
    return add(std::move(b));
  }
  ProxFamily& add_box(Index offset, Index length, double lo, double hi) {
    require_config(lo <= hi, "box: lower bound exceeds upper bound");
    ProxBlock b;
    b.offset = offset;
    b.length = length;
    b.kind = ProxKind::box;
    b.lo = lo;
    b.hi = hi;
    b.label = "box";
    return add(std::move(b));
  }
  ProxFamily& add_l1_ball(Index offset, Index length, double radius) {
    require_config(radius > 0.0, "l1_ball: radius must be positive");
    ProxBlock b;
    b.offset = offset;
    b.length = length;
    b.kind = ProxKind::l1_ball;
    b.radius = radius;
    b.label = "l1_ball";
    return add(std::move(b));
  }
  ProxFamily& add_epi_l2(Index offset, Index group, Index count, double tau = 1.0,
                         std::string label = "epi_l2") {
    require_config(tau > 0.0, "epi_l2: tau must be positive");
    ProxBlock b;
    b.offset = offset;
    b.length = count * group + count;
    b.kind = ProxKind::epi_l2;
    b.group = group;
    b.count = count;
    b.tau = tau;
    b.label = std::move(label);
    return add(std::move(b));
  }
  ProxFamily& add_epi_l1(Index offset, Index group, Index count,
                         std::string label = "epi_l1") {
    ProxBlock b;
    b.offset = offset;
    b.length = count * group + count;
    b.kind = ProxKind::epi_l1;
    b.group = group;
    b.count = count;
    b.label = std::move(label);
    return add(std::move(b));
  }
  ProxFamily& add_epi_nuclear(Index offset, Index rows, Index cols, Index count,
                              std::string label = "epi_nuclear") {
    ProxBlock b;
    b.offset = offset;
    b.length = count * rows * cols + count;
    b.kind = ProxKind::epi_nuclear;
    b.rows = rows;
    b.cols = cols;
    b.group = rows * cols;
    b.count = count;
    b.label = std::move(label);
    return add(std::move(b));
  }
  ProxFamily& add_identity_set(Index offset, Index count) {
    ProxBlock b;
    b.offset = offset;
    b.length = 2 * count;
    b.kind = ProxKind::identity_set;
    b.count = count;
    b.label = "identity_set";
    return add(std::move(b));
  }
  ProxFamily& add_weighted_mixed(Index offset, Index length, Index luma_len,
                                 double luma_weight = 0.5, double weight = 1.0) {
    ProxBlock b;
    b.offset = offset;
    b.length = length;
    b.kind = ProxKind::weighted_mixed_l1_l21;
    b.luma_len = luma_len;
    b.luma_weight = luma_weight;
    b.weight = weight;
    b.label = "weighted_mixed";
    return add(std::move(b));
  }

  /// Checks that the blocks are well formed, disjoint and cover [0, dim).
  void validate() const {
    std::vector<const ProxBlock*> order;
    for (const auto& b : blocks_) order.push_back(&b);
    std::sort(order.begin(), order.end(),
              [](const ProxBlock* a, const ProxBlock* b) { return a->offset < b->offset; });
    Index pos = 0;
    for (const ProxBlock* b : order) {
      require_config(b->length > 0, "prox family: empty block '" + b->label + "'");
      if (b->offset < pos)
        throw ConfigError("prox family: block '" + b->label + "' overlaps its predecessor");
      if (b->offset > pos)
        throw ConfigError("prox family: gap before block '" + b->label + "'");
      check_shape(*b);
      pos = b->offset + b->length;
    }
    if (pos != dim_)
      throw ConfigError("prox family: blocks cover " + std::to_string(pos) + " of " +
                        std::to_string(dim_) + " entries");
  }

  /// prox_{γF}(x) for the separable F = Σ blocks.
  Vec prox(VecCRef x, double gamma) const {
    Vec y = x;
    prox_inplace(y, gamma);
    return y;
  }

  void prox_inplace(VecRef y, double gamma) const {
    require_dim(y.size() == dim_, "prox family: input has wrong length");
    for (const auto& b : blocks_) apply_block(b, y.data() + b.offset, gamma);
  }

  /// F(x); indicators contribute +∞ when violated beyond `tol`.
  double value(VecCRef x, double tol = 1e-9) const {
    require_dim(x.size() == dim_, "prox family: input has wrong length");
    double total = 0.0;
    for (const auto& b : blocks_) total += block_value(b, x.data() + b.offset, tol);
    return total;
  }

  /// True when some block is a real (γ-scaled) function.
  bool scalable() const {
    for (const auto& b : blocks_)
      if (!is_indicator(b.kind) && b.kind != ProxKind::pass_through) return true;
    return false;
  }

  /// Per-epigraph-block gaps ξ − f(x).
  std::vector<EpigraphGap> epigraph_gaps(VecCRef x) const {
    std::vector<EpigraphGap> out;
    for (const auto& b : blocks_) {
      if (!is_epigraph(b.kind)) continue;
      const double* base = x.data() + b.offset;
      const double* xi = base + b.count * b.group;
      EpigraphGap g;
      g.label = b.label;
      double scale = 0.0;
      for (Index i = 0; i < b.count; ++i) {
        const double f = inner_value(b, base + i * b.group);
        g.raw = std::max(g.raw, std::abs(xi[i] - f));
        scale = std::max(scale, std::abs(xi[i]));
      }
      g.relative = g.raw / std::max(scale, 1e-300);
      out.push_back(g);
    }
    return out;
  }

  /// Inner-layer value f(x_i) of one pair in an epigraph block.
  static double inner_value(const ProxBlock& b, const double* x) {
    switch (b.kind) {
      case ProxKind::epi_l2: {
        double s = 0.0;
        for (Index k = 0; k < b.group; ++k) s += x[k] * x[k];
        return b.tau * std::sqrt(s);
      }
      case ProxKind::epi_l1: {
        double s = 0.0;
        for (Index k = 0; k < b.group; ++k) s += std::abs(x[k]);
        return s;
      }
      case ProxKind::epi_nuclear:
        return detail::nuclear_norm(x, b.rows, b.cols);
      default:
        return 0.0;
    }
  }

 private:
  void check_shape(const ProxBlock& b) const {
    auto bad = [&](const std::string& why) {
      throw ConfigError("prox family: block '" + b.label + "' " + why);
    };
    switch (b.kind) {
      case ProxKind::l21:
        if (b.group < 1 || b.length % b.group != 0) bad("length is not a multiple of group");
        break;
      case ProxKind::nuclear:
        if (b.rows < 1 || b.cols < 1 || b.rows * b.cols * b.count != b.length)
          bad("does not hold count rows×cols matrices");
        break;
      case ProxKind::epi_l2:
      case ProxKind::epi_l1:
        if (b.group < 1 || b.count * (b.group + 1) != b.length) bad("has inconsistent pairs");
        break;
      case ProxKind::epi_nuclear:
        if (b.rows * b.cols != b.group || b.count * (b.group + 1) != b.length)
          bad("has inconsistent matrix pairs");
        break;
      case ProxKind::identity_set:
        if (2 * b.count != b.length) bad("does not hold two equal halves");
        break;
      case ProxKind::weighted_mixed_l1_l21:
        if (b.luma_len < 0 || b.luma_len > b.length || (b.length - b.luma_len) % 2 != 0)
          bad("chroma slice must hold pairs");
        break;
      case ProxKind::box:
        if (b.lo > b.hi) bad("has lower bound above upper bound");
        break;
      default:
        break;
    }
  }

  static void apply_block(const ProxBlock& b, double* x, double gamma) {
    const double g = gamma * b.weight;
    switch (b.kind) {
      case ProxKind::pass_through:
        return;
      case ProxKind::l1:
        if (g > 0.0) detail::soft_threshold(x, b.length, g);
        return;
      case ProxKind::l2:
        if (g > 0.0) detail::prox_l2(x, b.length, g);
        return;
      case ProxKind::linf: {
        if (g <= 0.0) return;
        std::vector<double> p(x, x + b.length);
        for (double& v : p) v /= g;
        detail::project_l1_ball(p.data(), b.length, 1.0);
        for (Index i = 0; i < b.length; ++i) x[i] -= g * p[i];
        return;
      }
      case ProxKind::l21:
        if (g > 0.0)
          for (Index i = 0; i < b.length; i += b.group) detail::prox_l2(x + i, b.group, g);
        return;
      case ProxKind::nuclear:
        if (g > 0.0)
          for (Index i = 0; i < b.count; ++i)
            detail::prox_nuclear(x + i * b.rows * b.cols, b.rows, b.cols, g);
        return;
      case ProxKind::weighted_mixed_l1_l21:
        if (g > 0.0) {
          // ε‖·‖₁ + ‖·‖₂ on a pair: soft threshold, then group shrink.
          if (b.l1_extra > 0.0)
            detail::soft_threshold(x + b.luma_len, b.length - b.luma_len, g * b.l1_extra);
          detail::soft_threshold(x, b.luma_len, g * (b.luma_weight + b.l1_extra));
          for (Index i = b.luma_len; i < b.length; i += 2) detail::prox_l2(x + i, 2, g);
        }
        return;
      case ProxKind::box:
        for (Index i = 0; i < b.length; ++i) x[i] = std::min(std::max(x[i], b.lo), b.hi);
        return;
      case ProxKind::l1_ball:
        detail::project_l1_ball(x, b.length, b.radius);
        return;
      case ProxKind::epi_l2: {
        double* xi = x + b.count * b.group;
        for (Index i = 0; i < b.count; ++i)
          detail::project_epi_l2(x + i * b.group, b.group, xi + i, b.tau);
        return;
      }
      case ProxKind::epi_l1: {
        double* xi = x + b.count * b.group;
        for (Index i = 0; i < b.count; ++i)
          detail::project_epi_l1(x + i * b.group, b.group, xi + i);
        return;
      }
      case ProxKind::epi_nuclear: {
        double* xi = x + b.count * b.group;
        for (Index i = 0; i < b.count; ++i)
          detail::project_epi_nuclear(x + i * b.group, b.rows, b.cols, xi + i);
        return;
      }
      case ProxKind::identity_set: {
        double* y = x + b.count;
        for (Index i = 0; i < b.count; ++i) {
          if (x[i] != y[i]) x[i] = y[i] = 0.5 * (x[i] + y[i]);
        }
        return;
      }
    }
  }

  static double block_value(const ProxBlock& b, const double* x, double tol) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (b.kind) {
      case ProxKind::pass_through:
        return 0.0;
      case ProxKind::l1: {
        double s = 0.0;
        for (Index i = 0; i < b.length; ++i) s += std::abs(x[i]);
        return b.weight * s;
      }
      case ProxKind::l2: {
        double s = 0.0;
        for (Index i = 0; i < b.length; ++i) s += x[i] * x[i];
        return b.weight * std::sqrt(s);
      }
      case ProxKind::linf: {
        double s = 0.0;
        for (Index i = 0; i < b.length; ++i) s = std::max(s, std::abs(x[i]));
        return b.weight * s;
      }
      case ProxKind::l21: {
        double total = 0.0;
        for (Index i = 0; i < b.length; i += b.group) {
          double s = 0.0;
          for (Index k = 0; k < b.group; ++k) s += x[i + k] * x[i + k];
          total += std::sqrt(s);
        }
        return b.weight * total;
      }
      case ProxKind::nuclear: {
        double total = 0.0;
        for (Index i = 0; i < b.count; ++i)
          total += detail::nuclear_norm(x + i * b.rows * b.cols, b.rows, b.cols);
        return b.weight * total;
      }
      case ProxKind::weighted_mixed_l1_l21: {
        double luma = 0.0, chroma = 0.0;
        for (Index i = 0; i < b.luma_len; ++i) luma += std::abs(x[i]);
        double extra = 0.0;
        for (Index i = b.luma_len; i < b.length; i += 2) {
          chroma += std::hypot(x[i], x[i + 1]);
          extra += std::abs(x[i]) + std::abs(x[i + 1]);
        }
        return b.weight * ((b.luma_weight + b.l1_extra) * luma + chroma + b.l1_extra * extra);
      }
      case ProxKind::box:
        for (Index i = 0; i < b.length; ++i)
          if (x[i] < b.lo - tol || x[i] > b.hi + tol) return inf;
        return 0.0;
      case ProxKind::l1_ball: {
        double s = 0.0;
        for (Index i = 0; i < b.length; ++i) s += std::abs(x[i]);
        return s <= b.radius + tol ? 0.0 : inf;
      }
      case ProxKind::epi_l2:
      case ProxKind::epi_l1:
      case ProxKind::epi_nuclear: {
        const double* xi = x + b.count * b.group;
        for (Index i = 0; i < b.count; ++i)
          if (inner_value(b, x + i * b.group) > xi[i] + tol) return inf;
        return 0.0;
      }
      case ProxKind::identity_set:
        for (Index i = 0; i < b.count; ++i)
          if (std::abs(x[i] - x[b.count + i]) > tol) return inf;
        return 0.0;
    }
    return 0.0;
  }

  Index dim_ = 0;
  std::vector<ProxBlock> blocks_;
};

/// Separable product prox: dispatches each block of `family` to its kind.
inline Vec prox_product(const ProxFamily& family, VecCRef x, double gamma) {
  family.validate();
  return family.prox(x, gamma);
}

}  // namespace erligme
