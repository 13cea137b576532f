#include "erligme/prox.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace erligme;

namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(Index(xs.size()));
  Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

void expect_near(VecCRef a, VecCRef b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_LE((a - b).lpNorm<Eigen::Infinity>(), tol) << "got " << a.transpose() << "\nwant "
                                                    << b.transpose();
}

}  // namespace

TEST(ProxL1, Examples) {
  expect_near(prox_l1(v({1.5}), 1.0), v({0.5}), 1e-15);
  expect_near(prox_l1(v({-0.3}), 1.0), v({0.0}), 1e-15);
  expect_near(prox_l1(v({1.5, -2.0}), 0.0), v({1.5, -2.0}), 0.0);
}

TEST(ProxL2, Examples) {
  expect_near(prox_l2(v({3, 4}), 2.0), v({1.8, 2.4}), 1e-14);
  expect_near(prox_l2(v({0.3, 0.4}), 2.0), v({0, 0}), 0.0);
  expect_near(prox_l2(v({0, 0}), 2.0), v({0, 0}), 0.0);
}

TEST(ProjectL1Ball, Examples) {
  expect_near(project_l1_ball(v({2, 0}), 1.0), v({1, 0}), 1e-15);
  expect_near(project_l1_ball(v({0.2, 0.3}), 1.0), v({0.2, 0.3}), 0.0);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Vec x = oracle::gaussian(7, rng, 3.0);
    EXPECT_LE(project_l1_ball(x, 1.3).lpNorm<1>(), 1.3 + 1e-12);
  }
  EXPECT_THROW(project_l1_ball(v({1}), -1.0), ConfigError);
}

TEST(ProxLinf, Examples) {
  expect_near(prox_linf(v({2, 0}), 1.0), v({1, 0}), 1e-15);
  expect_near(prox_linf(v({0.3, -0.4}), 1.0), v({0, 0}), 1e-15);
  expect_near(prox_linf(v({0.3, -0.4}), 0.0), v({0.3, -0.4}), 0.0);
}

TEST(ProxL21, Examples) {
  expect_near(prox_l21_blocks(v({3, 4, 0, 0}), 2.0, 2), v({1.8, 2.4, 0, 0}), 1e-14);
  expect_near(prox_l21_blocks(Vec::Zero(6), 1.0, 3), Vec::Zero(6), 0.0);
  std::mt19937_64 rng(4);
  const Vec x = oracle::gaussian(9, rng);
  expect_near(prox_l21_blocks(x, 0.7, 1), prox_l1(x, 0.7), 1e-15);
}

TEST(ProxNuclear, Examples) {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  Mat want = Mat::Zero(2, 2);
  want(0, 0) = 2;
  EXPECT_LE((prox_nuclear(d, 1.0) - want).norm(), 1e-14);

  std::mt19937_64 rng(5);
  const Vec raw = oracle::gaussian(12, rng);
  const Mat m = Eigen::Map<const Mat>(raw.data(), 4, 3);
  const double s1 = Eigen::JacobiSVD<Mat>(m).singularValues()[0];
  EXPECT_LE(prox_nuclear(m, s1 + 0.1).norm(), 1e-14);

  const Vec s = Eigen::JacobiSVD<Mat>(m).singularValues();
  const Vec got = Eigen::JacobiSVD<Mat>(prox_nuclear(m, 0.5)).singularValues();
  for (Index k = 0; k < s.size(); ++k) EXPECT_NEAR(got[k], std::max(s[k] - 0.5, 0.0), 1e-10);
}

TEST(ProxNuclear, TwoColumnPathMatchesGeneral) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const Vec raw = oracle::gaussian(10, rng);
    const Mat m = Eigen::Map<const Mat>(raw.data(), 5, 2);
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec s = (svd.singularValues().array() - 0.8).max(0.0).matrix();
    const Mat want = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    EXPECT_LE((prox_nuclear(m, 0.8) - want).norm(), 1e-12);
  }
}

TEST(ProjectBox, Examples) {
  expect_near(project_box(v({-0.2, 0.5, 1.3}), 0, 1), v({0, 0.5, 1}), 0.0);
  expect_near(project_box(v({0.2, 0.5}), 0, 1), v({0.2, 0.5}), 0.0);
  const Vec once = project_box(v({-3, 0.1, 9}), -1, 2);
  expect_near(project_box(once, -1, 2), once, 0.0);
  EXPECT_THROW(project_box(v({0}), 1.0, 0.0), ConfigError);
}

TEST(ProjectEpiL2, Examples) {
  auto [x1, t1] = project_epi_l2(v({3, 4}), 5.0, 1.0);
  expect_near(x1, v({3, 4}), 0.0);
  EXPECT_EQ(t1, 5.0);
  auto [x2, t2] = project_epi_l2(v({3, 4}), 0.0, 1.0);
  expect_near(x2, v({1.5, 2}), 1e-14);
  EXPECT_NEAR(t2, 2.5, 1e-14);
  auto [x3, t3] = project_epi_l2(v({0.1, 0}), -1.0, 1.0);
  expect_near(x3, v({0, 0}), 0.0);
  EXPECT_EQ(t3, 0.0);
}

TEST(ProjectEpiL1, Examples) {
  auto [x1, t1] = project_epi_l1(v({2, 0}), 0.0);
  expect_near(x1, v({1, 0}), 1e-14);
  EXPECT_NEAR(t1, 1.0, 1e-14);
  auto [x2, t2] = project_epi_l1(v({1, 1}), 1.0);
  expect_near(x2, v({2.0 / 3, 2.0 / 3}), 1e-14);
  EXPECT_NEAR(t2, 4.0 / 3, 1e-14);
  auto [x3, t3] = project_epi_l1(v({0.5, 0}), 1.0);
  expect_near(x3, v({0.5, 0}), 0.0);
  EXPECT_EQ(t3, 1.0);
}

TEST(ProjectEpiNuclear, Examples) {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2;
  auto [m1, t1] = project_epi_nuclear(d, 0.0);
  Mat want = Mat::Zero(2, 2);
  want(0, 0) = 1;
  EXPECT_LE((m1 - want).norm(), 1e-14);
  EXPECT_NEAR(t1, 1.0, 1e-14);

  Mat feas = Mat::Zero(3, 2);
  feas(0, 0) = 0.25;
  feas(2, 1) = -0.5;
  auto [m2, t2] = project_epi_nuclear(feas, 1.0);
  EXPECT_LE((m2 - feas).norm(), 1e-15);
  EXPECT_EQ(t2, 1.0);

  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const Vec raw = oracle::gaussian(6, rng, 2.0);
    const Mat m = Eigen::Map<const Mat>(raw.data(), 3, 2);
    auto [p, xi] = project_epi_nuclear(m, oracle::gaussian(1, rng)[0]);
    auto [q, xi2] = project_epi_nuclear(p, xi);
    EXPECT_LE((q - p).norm() + std::abs(xi2 - xi), 1e-10);
  }
}

TEST(ProxWeightedMixed, Examples) {
  expect_near(prox_weighted_l1_l21(v({1.0}), 1.0, 1), v({0.5}), 1e-15);
  expect_near(prox_weighted_l1_l21(v({3, 4}), 2.0, 0), v({1.8, 2.4}), 1e-14);
  expect_near(prox_weighted_l1_l21(v({0.3, -1, 2}), 0.0, 1), v({0.3, -1, 2}), 0.0);
}

TEST(ProjectIdentitySet, Examples) {
  auto [a, b] = project_identity_set(v({1}), v({3}));
  expect_near(a, v({2}), 0.0);
  expect_near(b, v({2}), 0.0);
  auto [c, d] = project_identity_set(v({2}), v({2}));
  expect_near(c, v({2}), 0.0);
  auto [e, f] = project_identity_set(a, b);
  expect_near(e, a, 0.0);
  expect_near(f, b, 0.0);
}

TEST(ProxFamily, ComponentwiseLayout) {
  ProxFamily f(2);
  f.add_simple(0, 1, ProxKind::l1).add_box(1, 1, 0.0, 1.0);
  expect_near(f.prox(v({2, 1.5}), 1.0), v({1, 1}), 0.0);

  ProxFamily pass(4);
  pass.add_simple(0, 4, ProxKind::pass_through);
  expect_near(pass.prox(v({1, -2, 3, 4}), 5.0), v({1, -2, 3, 4}), 0.0);
}

TEST(ProxFamily, LayoutErrors) {
  ProxFamily gap(4);
  gap.add_simple(0, 1, ProxKind::l1).add_simple(2, 2, ProxKind::l1);
  EXPECT_THROW(gap.validate(), ConfigError);
  ProxFamily overlap(3);
  overlap.add_simple(0, 2, ProxKind::l1).add_simple(1, 2, ProxKind::l2);
  EXPECT_THROW(overlap.validate(), ConfigError);
  ProxFamily shape(5);
  shape.add_l21(0, 5, 2);
  EXPECT_THROW(shape.validate(), ConfigError);
  ProxFamily ok(4);
  ok.add_l21(0, 4, 2);
  EXPECT_NO_THROW(ok.validate());
}

TEST(ProxFamily, MatchesNumericMinimizer) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    ProxFamily f(4);
    f.add_simple(0, 2, ProxKind::l2, 0.7).add_simple(2, 2, ProxKind::linf, 1.3);
    const Vec x = oracle::gaussian(4, rng, 2.0);
    const double gamma = 0.6;
    auto h = [](const Vec& y) {
      oracle::ValueGrad a = oracle::l2(y.head(2)), b = oracle::linf(y.tail(2));
      Vec g(4);
      g << 0.7 * a.grad, 1.3 * b.grad;
      return oracle::ValueGrad{0.7 * a.value + 1.3 * b.value, g};
    };
    expect_near(f.prox(x, gamma), oracle::numeric_prox(h, gamma, x), 1e-4);
  }
}

TEST(ProxFamily, EpigraphGapsOfTightPair) {
  ProxFamily f(3);
  f.add_epi_l2(0, 2, 1);
  const auto gaps = f.epigraph_gaps(v({3, 4, 5}));
  ASSERT_EQ(gaps.size(), 1u);
  EXPECT_EQ(gaps[0].raw, 0.0);
  EXPECT_EQ(gaps[0].relative, 0.0);
}

TEST(ProxFamily, ZeroGammaIsIdentity) {
  ProxFamily f(6);
  f.add_simple(0, 2, ProxKind::l1).add_nuclear(2, 2, 2, 1);
  const Vec x = v({1, -2, 3, 0.5, -1, 2});
  expect_near(f.prox(x, 0.0), x, 0.0);
}
