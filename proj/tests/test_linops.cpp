#include "erligme/image_ops.hpp"
#include "erligme/transforms.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace erligme;

namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(Index(xs.size()));
  Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

/// Worst relative ⟨Ax, y⟩ − ⟨x, Aᵀy⟩ over `pairs` random pairs.
double adjoint_error(const LinearOperator& op, int pairs = 20, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < pairs; ++t) {
    const Vec x = oracle::gaussian(op.in_dim(), rng);
    const Vec y = oracle::gaussian(op.out_dim(), rng);
    const double lhs = op.apply(x).dot(y), rhs = x.dot(op.adjoint(y));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)}));
  }
  return worst;
}

/// Column-by-column oracle of the forward and adjoint maps against materialize().
double dense_error(const LinearOperator& op) {
  const Mat m = materialize(op);
  const Mat fwd = oracle::dense_of([&](const Vec& x) { return Vec(op.apply(x)); }, op.in_dim());
  const Mat adj = oracle::dense_of([&](const Vec& y) { return Vec(op.adjoint(y)); }, op.out_dim());
  return std::max((m - fwd).lpNorm<Eigen::Infinity>(), (m.transpose() - adj).lpNorm<Eigen::Infinity>());
}

Mat dense_gradient(Index n, Index ch) {
  const Mat dv = oracle::kron(Mat::Identity(n, n), oracle::d0(n));
  const Mat dh = oracle::kron(oracle::d0(n), Mat::Identity(n, n));
  Mat dvh(2 * n * n, n * n);
  dvh << dv, dh;
  return oracle::kron(Mat::Identity(ch, ch), dvh);
}

}  // namespace

TEST(DiffD0, Examples) {
  const LinearOperator d = make_diff_d0(3);
  EXPECT_EQ((d.apply(v({1, 2, 4})) - v({-1, -2, 0})).norm(), 0.0);
  EXPECT_EQ(d.apply(v({7, 7, 7})).norm(), 0.0);
  EXPECT_EQ((d.adjoint(v({1, 0, 0})) - v({1, -1, 0})).norm(), 0.0);
  EXPECT_THROW(make_diff_d0(1), DimensionError);
}

TEST(Gradient, MatchesKroneckerConstruction) {
  for (Index n : {2, 3, 5}) {
    const Mat want = dense_gradient(n, 3);
    EXPECT_EQ((materialize(make_gradient(n, 3)) - want).lpNorm<Eigen::Infinity>(), 0.0) << n;
  }
  Vec bright = Vec::Zero(4);
  bright[2] = 1.0;  // row 0, column 1 of a 2×2 image
  EXPECT_EQ((make_gradient(2, 1).apply(bright) - dense_gradient(2, 1) * bright).norm(), 0.0);
  EXPECT_EQ(make_gradient(4, 3).apply(Vec::Constant(48, 0.3)).norm(), 0.0);
}

TEST(ColorDecorrelation, GrayPixelAndOrthonormality) {
  const LinearOperator cd = make_color_decorrelation(2);
  const Vec gray = Vec::Constant(12, 0.4);
  const Vec y = cd.apply(gray);
  for (Index k = 0; k < 4; ++k) EXPECT_NEAR(y[k], std::sqrt(3.0) * 0.4, 1e-15);
  EXPECT_LE(y.tail(8).norm(), 1e-15);

  std::mt19937_64 rng(2);
  const Vec x = oracle::gaussian(12, rng);
  EXPECT_NEAR(cd.apply(x).norm(), x.norm(), 1e-12);
  EXPECT_LE((cd.adjoint(cd.apply(x)) - x).norm(), 1e-12);
}

TEST(PatchExpansion, NonOverlappingIsPermutation) {
  const LinearOperator e = make_patch_expansion(4, 2, false, 2);
  ASSERT_EQ(e.in_dim(), e.out_dim());
  Vec x(e.in_dim());
  for (Index i = 0; i < x.size(); ++i) x[i] = double(i);
  Vec y = e.apply(x);
  EXPECT_DOUBLE_EQ(y.norm(), x.norm());
  std::sort(y.data(), y.data() + y.size());
  EXPECT_EQ((y - x).norm(), 0.0);
  EXPECT_THROW(make_patch_expansion(5, 2, false, 2), ConfigError);
}

TEST(PatchExpansion, OverlappingInteriorCounts) {
  const Index n = 6, w = 3;
  const LinearOperator e = make_patch_expansion(n, w, true, 1);
  Vec x = Vec::Zero(n * n);
  const Index interior = 2 * n + 3;
  x[interior] = 1.0;
  const Vec y = e.apply(x);
  int copies = 0;
  for (Index k = 0; k < y.size(); ++k)
    if (y[k] != 0.0) {
      ++copies;
      EXPECT_DOUBLE_EQ(y[k], 1.0 / 9.0);
    }
  EXPECT_EQ(copies, 9);
  EXPECT_NEAR(e.adjoint(y)[interior], 9.0 / 81.0, 1e-15);
}

TEST(GradPatchPermutation, PermutationProperties) {
  for (auto grouping : {PatchGrouping::per_channel, PatchGrouping::stacked_channels}) {
    const LinearOperator p = make_grad_patch_permutation(5, 2, 3, grouping);
    Vec x(p.in_dim());
    for (Index i = 0; i < x.size(); ++i) x[i] = double(i) * 0.5;
    Vec y = p.apply(x);
    EXPECT_EQ((p.adjoint(y) - x).norm(), 0.0);
    std::sort(y.data(), y.data() + y.size());
    EXPECT_EQ((y - x).norm(), 0.0);
  }
}

TEST(GradPatchPermutation, SmallBlockLayout) {
  // 2×2 image, w = 1, one channel: patch p holds (d^v_p, d^h_p).
  const Index n = 2;
  const LinearOperator pe = compose(
      make_grad_patch_permutation(n * n, 1, 1, PatchGrouping::per_channel),
      compose(make_patch_expansion(n, 1, false, 2), make_gradient(n, 1)));
  const Vec x = v({1, 3, 4, 9});  // column-major: (0,0)=1 (1,0)=3 (0,1)=4 (1,1)=9
  const Vec g = dense_gradient(n, 1) * x;
  const Vec y = pe.apply(x);
  for (Index p = 0; p < n * n; ++p) {
    EXPECT_EQ(y[2 * p], g[p]);
    EXPECT_EQ(y[2 * p + 1], g[n * n + p]);
  }
}

TEST(PatchGradient, FusedMatchesComposition) {
  const Index n = 4, w = 3;
  for (bool overlap : {true, false}) {
    const Index wn = overlap ? w : 2;
    for (auto grouping : {PatchGrouping::per_channel, PatchGrouping::stacked_channels}) {
      for (bool dec : {false, true}) {
        const PatchGeometry g{n, wn, overlap, 6};
        LinearOperator ref = compose({make_grad_patch_permutation(g.patches(), wn, 3, grouping),
                                      make_patch_expansion(n, wn, overlap, 6), make_gradient(n, 3)});
        if (dec) ref = compose(ref, make_color_decorrelation(n));
        const LinearOperator fused = make_patch_gradient(n, wn, overlap, 3, grouping, dec);
        EXPECT_LE((materialize(fused) - materialize(ref)).lpNorm<Eigen::Infinity>(), 1e-15);
      }
    }
  }
}

TEST(DftPairing, ConstantColumnAndParseval) {
  const LinearOperator t = make_dft_pairing(4, 1);
  const Vec y = t.apply(Vec::Ones(4));
  EXPECT_NEAR(y[0], 2.0, 1e-14);
  EXPECT_NEAR(y[1], 0.0, 1e-14);
  EXPECT_LE(y.tail(6).norm(), 1e-14);

  std::mt19937_64 rng(3);
  const LinearOperator t2 = make_dft_pairing(7, 5);
  const Vec x = oracle::gaussian(35, rng);
  EXPECT_NEAR(t2.apply(x).norm(), x.norm(), 1e-10);
}

TEST(DftPairing, PairNormsMatchDenseDft) {
  const Index m = 6, n = 3;
  std::mt19937_64 rng(4);
  const Vec x = oracle::gaussian(m * n, rng);
  const Eigen::MatrixXcd w = oracle::dft(m);
  const Mat l = Eigen::Map<const Mat>(x.data(), m, n);
  const Mat amp = (w * l.cast<std::complex<double>>()).cwiseAbs();
  const Vec y = make_dft_pairing(m, n).apply(x);
  for (Index c = 0; c < n; ++c)
    for (Index i = 0; i < m; ++i)
      EXPECT_NEAR(std::hypot(y[2 * (c * m + i)], y[2 * (c * m + i) + 1]), amp(i, c), 1e-12);
}

TEST(DftPairing, CircularShiftKeepsPairNorms) {
  const Index m = 8;
  std::mt19937_64 rng(5);
  const Vec x = oracle::gaussian(m, rng);
  Vec shifted(m);
  for (Index i = 0; i < m; ++i) shifted[(i + 3) % m] = x[i];
  const LinearOperator t = make_dft_pairing(m, 1);
  const Vec a = t.apply(x), b = t.apply(shifted);
  for (Index i = 0; i < m; ++i)
    EXPECT_NEAR(std::hypot(a[2 * i], a[2 * i + 1]), std::hypot(b[2 * i], b[2 * i + 1]), 1e-12);
  EXPECT_GT((a - b).norm(), 1e-3);
}

TEST(Sensing, FullSamplingIsOrthonormal) {
  std::mt19937_64 rng(6);
  for (Index n : {48, 64, 75}) {
    const LinearOperator phi = make_sensing(n, 1.0, 9);
    const Vec x = oracle::gaussian(n, rng);
    EXPECT_NEAR(phi.apply(x).norm(), x.norm(), 1e-10) << n;
    EXPECT_LE((phi.adjoint(phi.apply(x)) - x).norm(), 1e-10) << n;
  }
}

TEST(Sensing, RowCountAndDeterminism) {
  const Index n = 3 * 128 * 128;
  const LinearOperator phi = make_sensing(n, 0.4, 1);
  EXPECT_EQ(phi.out_dim(), Index(std::floor(0.4 * double(n))));
  std::mt19937_64 rng(7);
  const Vec x = oracle::gaussian(192, rng);
  EXPECT_EQ((make_sensing(192, 0.4, 5).apply(x) - make_sensing(192, 0.4, 5).apply(x)).norm(), 0.0);
  EXPECT_GT((make_sensing(192, 0.4, 5).apply(x) - make_sensing(192, 0.4, 6).apply(x)).norm(), 0.0);
}

TEST(Combinators, BlockDiagAndStack) {
  const LinearOperator a = make_gradient(3, 1);
  const LinearOperator b = make_dft_pairing(4, 2);
  std::mt19937_64 rng(8);
  const Vec x1 = oracle::gaussian(a.in_dim(), rng), x2 = oracle::gaussian(b.in_dim(), rng);
  Vec x(x1.size() + x2.size());
  x << x1, x2;
  Vec want(a.out_dim() + b.out_dim());
  want << a.apply(x1), b.apply(x2);
  EXPECT_LE((block_diag({a, b}).apply(x) - want).norm(), 1e-14);

  const LinearOperator s = stack({a, identity(9)});
  const Vec y = oracle::gaussian(s.out_dim(), rng);
  const Vec adj = a.adjoint(y.head(a.out_dim())) + y.tail(9);
  EXPECT_LE((s.adjoint(y) - adj).norm(), 1e-14);
}

TEST(Combinators, ComposeMatchesDenseProduct) {
  const Index n = 4;
  const LinearOperator e = make_patch_expansion(n, 3, true, 6);
  const LinearOperator p = make_grad_patch_permutation(n * n, 3, 3, PatchGrouping::per_channel);
  const LinearOperator d = make_gradient(n, 3);
  const Mat want = materialize(p) * materialize(e) * dense_gradient(n, 3);
  EXPECT_LE((materialize(compose({p, e, d})) - want).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(Combinators, DiagonalHints) {
  const LinearOperator z = zero(3, 3);
  EXPECT_TRUE(z.is_zero());
  const LinearOperator bd = block_diag({scaled_identity(2, 0.0), zero(3, 3)});
  EXPECT_TRUE(bd.is_zero());
  const LinearOperator d = block_diag({scaled_identity(2, 2.0), identity(1)});
  ASSERT_NE(d.diagonal(), nullptr);
  EXPECT_EQ((*d.diagonal() - v({2, 2, 1})).norm(), 0.0);
}

TEST(Operators, AdjointAndDenseEquivalence) {
  const Index n = 8;
  std::vector<std::pair<std::string, LinearOperator>> ops{
      {"D0", make_diff_d0(n)},
      {"D", make_gradient(n, 3)},
      {"CD", make_color_decorrelation(n)},
      {"E overlap", make_patch_expansion(n, 3, true, 6)},
      {"E", make_patch_expansion(n, 2, false, 6)},
      {"P per_channel", make_grad_patch_permutation(16, 2, 3, PatchGrouping::per_channel)},
      {"P stacked", make_grad_patch_permutation(16, 2, 3, PatchGrouping::stacked_channels)},
      {"PEDCD", make_patch_gradient(6, 3, true, 3, PatchGrouping::per_channel, true)},
      {"PED", make_patch_gradient(n, 2, false, 3, PatchGrouping::stacked_channels, false)},
      {"T", make_dft_pairing(n, 5)},
      {"sensing", make_sensing(3 * n * n, 0.4, 3)},
      {"sensing odd", make_sensing(75, 0.5, 3)},
      {"transpose", transpose(make_gradient(n, 1))},
      {"scale", scale(make_dft_pairing(4, 4), -0.7)},
      {"sum", sum(identity(64), gram(make_gradient(n, 1)))},
      {"hstack", hstack({identity(10), make_diff_d0(10)})},
      {"select", select(20, 4, 7)},
      {"dense", dense(Mat::Random(5, 7))},
      {"diagonal", diagonal(Vec::LinSpaced(6, -1, 1))},
  };
  for (const auto& [name, op] : ops) {
    EXPECT_LE(adjoint_error(op), 1e-8) << name;
    EXPECT_LE(dense_error(op), 1e-10) << name;
  }
}

TEST(Operators, OrthonormalNormPreservation) {
  std::mt19937_64 rng(10);
  for (const LinearOperator& op : {make_color_decorrelation(5), make_sensing(64, 1.0, 2),
                                   make_dft_pairing(9, 3)}) {
    const Vec x = oracle::gaussian(op.in_dim(), rng);
    EXPECT_NEAR(op.apply(x).norm(), x.norm(), 1e-10) << op.tag();
  }
}

TEST(Operators, DenseLimit) {
  EXPECT_THROW(materialize(identity(5000)), CapacityError);
}

TEST(OpNormEstimate, KnownSpectra) {
  EXPECT_NEAR(op_norm_estimate(identity(7)).value, 1.0, 1e-12);
  EXPECT_NEAR(op_norm_estimate(dense(Mat(Eigen::Vector2d(3.0, 1.0).asDiagonal()))).value, 9.0, 1e-5);
  const Mat d = dense_gradient(8, 1);
  const double want = Eigen::SelfAdjointEigenSolver<Mat>(d.transpose() * d).eigenvalues().maxCoeff();
  const NormEstimate est = op_norm_estimate(make_dvh(8), 1e-10, 20000);
  EXPECT_NEAR(est.value, want, 1e-4 * want);
  EXPECT_TRUE(est.converged);
}

TEST(OpNormEstimate, NonConvergenceFlag) {
  const NormEstimate est = op_norm_estimate(make_gradient(8, 1), 0.0, 3);
  EXPECT_FALSE(est.converged);
  EXPECT_EQ(est.iterations, 3);
  EXPECT_GT(est.value, 0.0);
}
