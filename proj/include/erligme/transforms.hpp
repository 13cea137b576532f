#pragma once

// Fast orthonormal transforms: column-wise DFT pairing and the randomized
// subsampled sensing operator.

#include "erligme/linops.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

namespace erligme {

namespace detail {

using CVec = std::vector<std::complex<double>>;

// kissfft plans are cached inside the object and are not thread safe.
inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

}  // namespace detail

/// T: an M×N matrix (column-major) to consecutive (real, imaginary) pairs of
/// the column-wise unitary DFT with kernel exp(−2πj·mk/M). Pair (m, n) sits at
/// offset 2(n·M + m).
inline LinearOperator make_dft_pairing(Index m, Index n) {
  require_dim(m >= 1 && n >= 1, "make_dft_pairing: sizes must be positive");
  const double scale = 1.0 / std::sqrt(double(m));
  auto fwd = [m, n, scale](VecCRef x, VecRef y) {
    auto& fft = detail::fft_engine();
    detail::CVec in(m), out(m);
    for (Index c = 0; c < n; ++c) {
      for (Index i = 0; i < m; ++i) in[i] = {x[c * m + i], 0.0};
      fft.fwd(out, in);
      for (Index i = 0; i < m; ++i) {
        y[2 * (c * m + i)] = scale * out[i].real();
        y[2 * (c * m + i) + 1] = scale * out[i].imag();
      }
    }
  };
  auto adj = [m, n](VecCRef y, VecRef x) {
    auto& fft = detail::fft_engine();
    const double s = std::sqrt(double(m));
    detail::CVec in(m), out(m);
    for (Index c = 0; c < n; ++c) {
      for (Index i = 0; i < m; ++i)
        in[i] = {y[2 * (c * m + i)], y[2 * (c * m + i) + 1]};
      fft.inv(out, in);  // includes the 1/M factor
      for (Index i = 0; i < m; ++i) x[c * m + i] = s * out[i].real();
    }
  };
  return LinearOperator(m * n, 2 * m * n, fwd, adj, "T");
}

namespace detail {

/// In-place orthonormal Walsh–Hadamard transform of length 2^k (self-inverse).
inline void fwht(double* a, Index len) {
  for (Index h = 1; h < len; h <<= 1)
    for (Index i = 0; i < len; i += 2 * h)
      for (Index j = i; j < i + h; ++j) {
        const double u = a[j], v = a[j + h];
        a[j] = u + v;
        a[j + h] = u - v;
      }
  const double s = 1.0 / std::sqrt(double(len));
  for (Index i = 0; i < len; ++i) a[i] *= s;
}

/// Orthonormal DCT-II of arbitrary length via a 2m-point FFT.
class Dct {
 public:
  explicit Dct(Index m) : m_(m), tw_(m) {
    constexpr double pi = 3.14159265358979323846;
    for (Index k = 0; k < m; ++k)
      tw_[k] = std::polar(1.0, -pi * double(k) / (2.0 * double(m)));
  }

  Index size() const { return m_; }

  void forward(const double* x, double* y) const {
    if (m_ == 1) {
      y[0] = x[0];
      return;
    }
    CVec v(2 * m_), f(2 * m_);
    for (Index i = 0; i < m_; ++i) {
      v[i] = x[i];
      v[2 * m_ - 1 - i] = x[i];
    }
    fft_engine().fwd(f, v);
    const double s0 = std::sqrt(1.0 / double(m_)), s = std::sqrt(2.0 / double(m_));
    for (Index k = 0; k < m_; ++k)
      y[k] = 0.5 * (tw_[k] * f[k]).real() * (k == 0 ? s0 : s);
  }

  // Transpose (DCT-III).
  void inverse(const double* y, double* x) const {
    if (m_ == 1) {
      x[0] = y[0];
      return;
    }
    CVec c(2 * m_, {0.0, 0.0}), out(2 * m_);
    const double s0 = std::sqrt(1.0 / double(m_)), s = std::sqrt(2.0 / double(m_));
    for (Index k = 0; k < m_; ++k) c[k] = std::conj(tw_[k]) * (y[k] * (k == 0 ? s0 : s));
    fft_engine().inv(out, c);  // scaled by 1/(2m)
    for (Index i = 0; i < m_; ++i) x[i] = double(2 * m_) * out[i].real();
  }

 private:
  Index m_;
  std::vector<std::complex<double>> tw_;
};

/// DCT_m ⊗ WHT_{2^k} applied in place to a vector of length m·2^k.
inline void kron_transform(const Dct& dct, Index pow2, double* a, bool transpose) {
  const Index m = dct.size();
  // Each contiguous run of length pow2 is one WHT block (self-adjoint).
  for (Index b = 0; b < m; ++b) fwht(a + b * pow2, pow2);
  if (m == 1) return;
  std::vector<double> col(m), out(m);
  for (Index j = 0; j < pow2; ++j) {
    for (Index b = 0; b < m; ++b) col[b] = a[b * pow2 + j];
    if (transpose) {
      dct.inverse(col.data(), out.data());
    } else {
      dct.forward(col.data(), out.data());
    }
    for (Index b = 0; b < m; ++b) a[b * pow2 + j] = out[b];
  }
}

}  // namespace detail

/// Φ = S·Φ̃ with Φ̃ = (DCT_m ⊗ WHT_{2^k})·diag(±1) for n = m·2^k, m odd, and S
/// keeping ⌊ratio·n⌋ distinct rows drawn uniformly (kept in ascending order).
/// At ratio = 1 every row is kept in natural order.
inline LinearOperator make_sensing(Index n, double ratio, std::uint64_t seed) {
  require_dim(n >= 1, "make_sensing: n must be positive");
  require_config(ratio > 0.0 && ratio <= 1.0, "make_sensing: ratio must lie in (0, 1]");
  const Index rows = static_cast<Index>(std::floor(ratio * double(n)));
  require_config(rows >= 1, "make_sensing: ratio keeps no rows");

  Index pow2 = 1, odd = n;
  while (odd % 2 == 0) {
    odd /= 2;
    pow2 *= 2;
  }
  std::mt19937_64 rng(seed);
  auto signs = std::make_shared<Vec>(n);
  for (Index i = 0; i < n; ++i) (*signs)[i] = (rng() & 1ULL) ? 1.0 : -1.0;

  auto keep = std::make_shared<std::vector<Index>>(n);
  std::iota(keep->begin(), keep->end(), Index{0});
  if (rows < n) {
    for (Index i = n - 1; i > 0; --i) {
      const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap((*keep)[i], (*keep)[j]);
    }
    keep->resize(rows);
    std::sort(keep->begin(), keep->end());
  }
  auto dct = std::make_shared<const detail::Dct>(odd);

  auto fwd = [pow2, signs, keep, dct](VecCRef x, VecRef y) {
    Vec t = signs->cwiseProduct(x);
    detail::kron_transform(*dct, pow2, t.data(), false);
    for (std::size_t r = 0; r < keep->size(); ++r) y[Index(r)] = t[(*keep)[r]];
  };
  auto adj = [n, pow2, signs, keep, dct](VecCRef y, VecRef x) {
    Vec t = Vec::Zero(n);
    for (std::size_t r = 0; r < keep->size(); ++r) t[(*keep)[r]] = y[Index(r)];
    detail::kron_transform(*dct, pow2, t.data(), true);
    x = signs->cwiseProduct(t);
  };
  return LinearOperator(n, rows, fwd, adj, "S*Phi");
}

}  // namespace erligme
