#pragma once

// Image-domain analysis operators.
//
// Vectorization: an n×n image with `ch` channels is stored channel-major,
// column-major inside a channel: index = c·n² + j·n + i for row i, column j.
// A gradient vector stacks, per channel, the vertical then the horizontal
// difference image: index = (2c + d)·n² + pixel, d = 0 vertical, 1 horizontal.

#include "erligme/linops.hpp"

#include <array>
#include <cmath>
#include <string>

namespace erligme {

/// Forward differences with a zero last row: (x_i − x_{i+1}, ..., 0).
inline LinearOperator make_diff_d0(Index n) {
  require_dim(n >= 2, "make_diff_d0: n must be at least 2");
  auto fwd = [n](VecCRef x, VecRef y) {
    for (Index i = 0; i + 1 < n; ++i) y[i] = x[i] - x[i + 1];
    y[n - 1] = 0.0;
  };
  auto adj = [n](VecCRef y, VecRef x) {
    x[0] = y[0];
    for (Index j = 1; j + 1 < n; ++j) x[j] = y[j] - y[j - 1];
    x[n - 1] = -y[n - 2];
  };
  return LinearOperator(n, n, fwd, adj, "D0");
}

namespace detail {

// Vertical and horizontal differences of one n×n plane, written to v and h.
inline void dvh_forward(const double* x, double* v, double* h, Index n) {
  for (Index j = 0; j < n; ++j) {
    const double* col = x + j * n;
    double* vc = v + j * n;
    for (Index i = 0; i + 1 < n; ++i) vc[i] = col[i] - col[i + 1];
    vc[n - 1] = 0.0;
  }
  for (Index j = 0; j + 1 < n; ++j) {
    const double* a = x + j * n;
    const double* b = x + (j + 1) * n;
    double* hc = h + j * n;
    for (Index i = 0; i < n; ++i) hc[i] = a[i] - b[i];
  }
  double* last = h + (n - 1) * n;
  for (Index i = 0; i < n; ++i) last[i] = 0.0;
}

inline void dvh_adjoint(const double* v, const double* h, double* x, Index n) {
  for (Index j = 0; j < n; ++j) {
    const double* vc = v + j * n;
    double* col = x + j * n;
    col[0] = vc[0];
    for (Index i = 1; i + 1 < n; ++i) col[i] = vc[i] - vc[i - 1];
    col[n - 1] = -vc[n - 2];
  }
  for (Index j = 0; j < n; ++j) {
    double* col = x + j * n;
    const double* cur = h + j * n;
    const double* prev = h + (j - 1) * n;
    for (Index i = 0; i < n; ++i) {
      double s = (j + 1 < n) ? cur[i] : 0.0;
      if (j >= 1) s -= prev[i];
      col[i] += s;
    }
  }
}

}  // namespace detail

/// D_vh = [I ⊗ D0; D0 ⊗ I] on a single n×n plane.
inline LinearOperator make_dvh(Index n) {
  require_dim(n >= 2, "make_dvh: n must be at least 2");
  const Index p = n * n;
  auto fwd = [n, p](VecCRef x, VecRef y) {
    detail::dvh_forward(x.data(), y.data(), y.data() + p, n);
  };
  auto adj = [n, p](VecCRef y, VecRef x) {
    detail::dvh_adjoint(y.data(), y.data() + p, x.data(), n);
  };
  return LinearOperator(p, 2 * p, fwd, adj, "Dvh");
}

/// D = diag(D_vh, ..., D_vh) over `ch` channels.
inline LinearOperator make_gradient(Index n, Index ch = 3) {
  require_dim(n >= 2 && ch >= 1, "make_gradient: bad geometry");
  const Index p = n * n;
  auto fwd = [n, p, ch](VecCRef x, VecRef y) {
    for (Index c = 0; c < ch; ++c)
      detail::dvh_forward(x.data() + c * p, y.data() + 2 * c * p,
                          y.data() + (2 * c + 1) * p, n);
  };
  auto adj = [n, p, ch](VecCRef y, VecRef x) {
    for (Index c = 0; c < ch; ++c)
      detail::dvh_adjoint(y.data() + 2 * c * p, y.data() + (2 * c + 1) * p,
                          x.data() + c * p, n);
  };
  return LinearOperator(ch * p, 2 * ch * p, fwd, adj, "D");
}

/// Orthonormal 3-point DCT; row 0 is the luma direction.
inline const std::array<std::array<double, 3>, 3>& dct3_matrix() {
  static const std::array<std::array<double, 3>, 3> m = [] {
    const double a = 1.0 / std::sqrt(3.0);
    const double b = 1.0 / std::sqrt(2.0);
    const double c = 1.0 / std::sqrt(6.0);
    return std::array<std::array<double, 3>, 3>{
        {{a, a, a}, {b, 0.0, -b}, {c, -2.0 * c, c}}};
  }();
  return m;
}

/// C_D = C0 ⊗ I: RGB planes to one luma and two chroma planes.
inline LinearOperator make_color_decorrelation(Index n) {
  require_dim(n >= 1, "make_color_decorrelation: n must be positive");
  const Index p = n * n;
  auto apply = [p](VecCRef x, VecRef y, bool transposed) {
    const auto& m = dct3_matrix();
    for (Index k = 0; k < p; ++k) {
      const double r = x[k], g = x[p + k], b = x[2 * p + k];
      for (int o = 0; o < 3; ++o) {
        y[o * p + k] = transposed ? m[0][o] * r + m[1][o] * g + m[2][o] * b
                                  : m[o][0] * r + m[o][1] * g + m[o][2] * b;
      }
    }
  };
  auto fwd = [apply](VecCRef x, VecRef y) { apply(x, y, false); };
  auto adj = [apply](VecCRef x, VecRef y) { apply(x, y, true); };
  return LinearOperator(3 * p, 3 * p, fwd, adj, "CD");
}

/// Patch geometry shared by the expansion and permutation operators.
struct PatchGeometry {
  Index n = 0;       ///< image side
  Index w = 1;       ///< patch side
  bool overlap = false;
  Index fields = 2;  ///< planes in the gradient vector (2 per channel)

  Index patches() const { return overlap ? n * n : (n / w) * (n / w); }
  Index patch_len() const { return w * w; }
  Index in_dim() const { return fields * n * n; }
  Index out_dim() const { return fields * patches() * patch_len(); }
};

namespace detail {

/// src[p·w² + q] = pixel read by slot q of patch p, or −1 outside the image.
inline std::vector<Index> patch_sources(const PatchGeometry& g) {
  const Index n = g.n, w = g.w, np = g.patches(), q2 = g.patch_len();
  const Index half = (w - 1) / 2;
  std::vector<Index> src(np * q2, -1);
  for (Index p = 0; p < np; ++p) {
    Index pi, pj;
    if (g.overlap) {
      pi = p % n - half;
      pj = p / n - half;
    } else {
      const Index per = n / w;
      pi = (p % per) * w;
      pj = (p / per) * w;
    }
    for (Index b = 0; b < w; ++b)
      for (Index a = 0; a < w; ++a) {
        const Index i = pi + a, j = pj + b;
        if (i >= 0 && i < n && j >= 0 && j < n) src[p * q2 + b * w + a] = j * n + i;
      }
  }
  return src;
}

inline void check_patch_args(Index n, Index w, bool overlap) {
  require_dim(n >= 1 && w >= 1 && w <= n, "make_patch_expansion: need 1 ≤ w ≤ n");
  if (!overlap)
    require_config(n % w == 0, "make_patch_expansion: patch size " + std::to_string(w) +
                                   " does not divide image side " + std::to_string(n));
}

}  // namespace detail

/// Duplicates every gradient sample into each w×w patch containing it.
/// Output layout: [field][patch][q], q = b·w + a for in-patch row a, column b.
/// Overlapping patches are centred on every pixel, zero-padded at the border
/// and weighted 1/w²; non-overlapping patches tile the image (w must divide n).
inline LinearOperator make_patch_expansion(Index n, Index w, bool overlap,
                                           Index fields = 6) {
  detail::check_patch_args(n, w, overlap);
  require_dim(fields >= 1, "make_patch_expansion: need at least one field");
  PatchGeometry g{n, w, overlap, fields};
  const Index np = g.patches(), q2 = g.patch_len(), plane = n * n;
  const double weight = overlap ? 1.0 / double(w * w) : 1.0;
  auto src = std::make_shared<std::vector<Index>>(detail::patch_sources(g));
  const Index span = np * q2;
  auto fwd = [src, fields, plane, span, weight](VecCRef x, VecRef y) {
    for (Index f = 0; f < fields; ++f) {
      const double* xf = x.data() + f * plane;
      double* yf = y.data() + f * span;
      for (Index k = 0; k < span; ++k) {
        const Index s = (*src)[k];
        yf[k] = s < 0 ? 0.0 : weight * xf[s];
      }
    }
  };
  auto adj = [src, fields, plane, span, weight](VecCRef y, VecRef x) {
    x.setZero();
    for (Index f = 0; f < fields; ++f) {
      double* xf = x.data() + f * plane;
      const double* yf = y.data() + f * span;
      for (Index k = 0; k < span; ++k) {
        const Index s = (*src)[k];
        if (s >= 0) xf[s] += weight * yf[k];
      }
    }
  };
  return LinearOperator(g.in_dim(), g.out_dim(), fwd, adj,
                        overlap ? "E(overlap)" : "E");
}

/// How the permutation groups channels into local gradient matrices.
enum class PatchGrouping {
  /// One w²×2 matrix per (channel, patch): all luma blocks first, then the
  /// chroma blocks interleaved per patch (patch 0 chroma 1, patch 0 chroma 2, ...).
  per_channel,
  /// One (ch·w²)×2 matrix per patch stacking all channels.
  stacked_channels,
};

namespace detail {

/// dst[k] = output slot of input k for the permutation below.
inline std::vector<Index> grad_patch_destinations(Index npatch, Index w, Index ch,
                                                  PatchGrouping grouping) {
  const Index q2 = w * w;
  std::vector<Index> dst(ch * 2 * npatch * q2);
  for (Index c = 0; c < ch; ++c)
    for (Index d = 0; d < 2; ++d)
      for (Index p = 0; p < npatch; ++p)
        for (Index q = 0; q < q2; ++q) {
          const Index in = ((c * 2 + d) * npatch + p) * q2 + q;
          if (grouping == PatchGrouping::per_channel) {
            const Index block = (c == 0) ? p : npatch + p * (ch - 1) + (c - 1);
            dst[in] = block * 2 * q2 + d * q2 + q;
          } else {
            dst[in] = p * 2 * ch * q2 + d * ch * q2 + c * q2 + q;
          }
        }
  return dst;
}

}  // namespace detail

/// Reorders an expanded gradient ([channel][d][patch][q]) into column-major
/// local gradient matrices whose columns are the vertical and horizontal
/// differences.
inline LinearOperator make_grad_patch_permutation(Index npatch, Index w, Index ch,
                                                  PatchGrouping grouping) {
  require_dim(npatch >= 1 && w >= 1 && ch >= 1, "make_grad_patch_permutation: bad sizes");
  const Index total = ch * 2 * npatch * w * w;
  auto dst = std::make_shared<std::vector<Index>>(
      detail::grad_patch_destinations(npatch, w, ch, grouping));
  auto fwd = [dst, total](VecCRef x, VecRef y) {
    for (Index k = 0; k < total; ++k) y[(*dst)[k]] = x[k];
  };
  auto adj = [dst, total](VecCRef y, VecRef x) {
    for (Index k = 0; k < total; ++k) x[k] = y[(*dst)[k]];
  };
  return LinearOperator(total, total, fwd, adj, "P");
}

/// Convenience: the full patch-gradient analysis operator P·E·D (optionally
/// preceded by C_D) for an n×n colour image. P·E is evaluated as one gather.
inline LinearOperator make_patch_gradient(Index n, Index w, bool overlap, Index ch,
                                          PatchGrouping grouping, bool decorrelate) {
  detail::check_patch_args(n, w, overlap);
  require_dim(ch >= 1, "make_patch_gradient: need at least one channel");
  PatchGeometry g{n, w, overlap, 2 * ch};
  const Index np = g.patches(), span = np * g.patch_len(), plane = n * n;
  const Index total = g.out_dim();
  const double weight = overlap ? 1.0 / double(w * w) : 1.0;
  const std::vector<Index> src = detail::patch_sources(g);
  const std::vector<Index> dst = detail::grad_patch_destinations(np, w, ch, grouping);
  // Nonzero outputs in ascending order with the gradient sample each one reads.
  auto gather = std::make_shared<std::vector<std::pair<Index, Index>>>();
  {
    std::vector<Index> from(total, -1);
    for (Index f = 0; f < 2 * ch; ++f)
      for (Index k = 0; k < span; ++k)
        if (src[k] >= 0) from[dst[f * span + k]] = f * plane + src[k];
    for (Index o = 0; o < total; ++o)
      if (from[o] >= 0) gather->emplace_back(o, from[o]);
  }

  auto fwd = [gather, weight](VecCRef x, VecRef y) {
    y.setZero();
    const double* xp = x.data();
    double* yp = y.data();
    for (const auto& [o, i] : *gather) yp[o] = weight * xp[i];
  };
  auto adj = [gather, weight](VecCRef y, VecRef x) {
    x.setZero();
    const double* yp = y.data();
    double* xp = x.data();
    for (const auto& [o, i] : *gather) xp[i] += weight * yp[o];
  };
  LinearOperator pe(g.in_dim(), total, fwd, adj, "PE");
  LinearOperator op = compose(pe, make_gradient(n, ch));
  if (decorrelate) {
    require_dim(ch == 3, "make_patch_gradient: decorrelation needs 3 channels");
    op = compose(op, make_color_decorrelation(n));
  }
  return op.with_tag(decorrelate ? "PEDCD" : "PED");
}

}  // namespace erligme
