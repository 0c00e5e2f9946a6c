#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace ovdd {
namespace {

using testing::Gen;

TEST(GridShape, RejectsEmptyExtents) {
  EXPECT_THROW(GridShape(0, 3), std::invalid_argument);
  EXPECT_THROW(GridShape(3, 0), std::invalid_argument);
  EXPECT_THROW(GridShape(-1, 2), std::invalid_argument);
  const GridShape g(3, 5);
  EXPECT_EQ(g.size(), 15);
  EXPECT_TRUE(g.contains(2, 4));
  EXPECT_FALSE(g.contains(3, 0));
  EXPECT_FALSE(g.contains(0, -1));
}

TEST(Inner, ZeroFieldsGiveZero) {
  EXPECT_EQ(inner(ScalarFieldd::Zero(2, 2), ScalarFieldd::Zero(2, 2)), 0.0);
}

TEST(Inner, SumsEntriesAgainstOnes) {
  ScalarFieldd u(2, 2);
  u << 1, 3, 2, 4;
  EXPECT_EQ(inner(u, ScalarFieldd::Ones(2, 2)), 10.0);
}

TEST(Inner, RejectsShapeMismatch) {
  EXPECT_THROW(inner(ScalarFieldd::Zero(2, 2), ScalarFieldd::Zero(2, 3)), std::invalid_argument);
}

TEST(Inner, SymmetricBilinearAndCauchySchwarz) {
  Gen gen(11);
  for (int t = 0; t < 100; ++t) {
    const GridShape g = gen.shape(1, 12);
    const ScalarFieldd u = gen.field(g.rows, g.cols), v = gen.field(g.rows, g.cols),
                       w = gen.field(g.rows, g.cols);
    const double a = gen.uniform(), b = gen.uniform();
    EXPECT_EQ(inner(u, v), inner(v, u));
    const ScalarFieldd combo = a * u + b * w;
    EXPECT_NEAR(inner(combo, v), a * inner(u, v) + b * inner(w, v), 1e-12 * g.size());
    EXPECT_LE(std::abs(inner(u, v)), pnorm(u, 2) * pnorm(v, 2) * (1 + 1e-12));
  }
}

TEST(Pnorm, SinglePixelVector) {
  VectorFieldd p(3, 3);
  p[0](1, 2) = 3;
  p[1](1, 2) = 4;
  EXPECT_DOUBLE_EQ(pnorm(p, 1), 5.0);
  EXPECT_DOUBLE_EQ(pnorm(p, 2), 5.0);
}

TEST(Pnorm, TensorMagnitudeIsRootOfChannelSquares) {
  TensorFieldd P(2, 2);
  for (auto& c : P.channel) c(0, 1) = 1;
  const ScalarFieldd m = magnitude(P);
  EXPECT_DOUBLE_EQ(m(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(m(1, 1), 0.0);
}

TEST(Pnorm, RejectsOtherExponents) {
  EXPECT_THROW(pnorm(ScalarFieldd::Ones(2, 2), 3), std::invalid_argument);
  EXPECT_THROW(pnorm(VectorFieldd(2, 2), 0), std::invalid_argument);
}

TEST(Pnorm, TwoNormSquaredMatchesSummedMagnitudes) {
  Gen gen(12);
  for (int t = 0; t < 50; ++t) {
    const GridShape g = gen.shape(1, 10);
    const auto P = gen.multi<4>(g.rows, g.cols);
    double oracle = 0;
    for (Index k = 0; k < g.size(); ++k) {
      double sq = 0;
      for (int c = 0; c < 4; ++c) sq += P[c](k) * P[c](k);
      oracle += sq;
    }
    EXPECT_NEAR(std::pow(pnorm(P, 2), 2), oracle, 1e-12 * oracle);
  }
}

TEST(Pnorm, OneNormDominatesTwoNorm) {
  Gen gen(13);
  for (int t = 0; t < 100; ++t) {
    const GridShape g = gen.shape(1, 10);
    const auto p = gen.multi<2>(g.rows, g.cols);
    const ScalarFieldd u = gen.field(g.rows, g.cols);
    EXPECT_GE(pnorm(p, 1), pnorm(p, 2) * (1 - 1e-12));
    EXPECT_GE(pnorm(u, 1), pnorm(u, 2) * (1 - 1e-12));
    EXPECT_GT(pnorm(u, 2), 0.0);
  }
  EXPECT_EQ(pnorm(VectorFieldd(3, 3), 1), 0.0);
  EXPECT_EQ(pnorm(ScalarFieldd::Zero(3, 3), 2), 0.0);
}

TEST(ProjectBox01, ClampsAndKeepsInterior) {
  ScalarFieldd u(1, 3);
  u << 0.5, -0.2, 1.7;
  const ScalarFieldd v = project_box01(u);
  EXPECT_EQ(v(0, 0), 0.5);
  EXPECT_EQ(v(0, 1), 0.0);
  EXPECT_EQ(v(0, 2), 1.0);
}

TEST(ProjectBall, RadialScalingAndInterior) {
  VectorFieldd p(1, 1);
  p[0](0, 0) = 3;
  p[1](0, 0) = 4;
  const VectorFieldd q = project_ball(p, 1.0);
  EXPECT_DOUBLE_EQ(q[0](0, 0), 0.6);
  EXPECT_DOUBLE_EQ(q[1](0, 0), 0.8);
  ScalarFieldd s(1, 1);
  s << 0.5;
  EXPECT_EQ(project_ball(s, 1.0)(0, 0), 0.5);
  s << -3;
  EXPECT_EQ(project_ball(s, 2.0)(0, 0), -2.0);
}

TEST(ProjectBall, RejectsNonpositiveRadius) {
  EXPECT_THROW(project_ball(ScalarFieldd::Ones(2, 2), 0.0), std::invalid_argument);
  EXPECT_THROW(project_ball(VectorFieldd(2, 2), -1.0), std::invalid_argument);
}

TEST(Projections, IdempotentNonexpansiveAndFeasible) {
  Gen gen(14);
  for (int t = 0; t < 100; ++t) {
    const GridShape g = gen.shape(1, 9);
    const double r = gen.uniform(0.1, 3.0);

    const ScalarFieldd u = gen.field(g.rows, g.cols, -3, 3), v = gen.field(g.rows, g.cols, -3, 3);
    const ScalarFieldd bu = project_box01(u), bv = project_box01(v);
    EXPECT_TRUE((project_box01(bu) == bu).all());
    EXPECT_LE(pnorm(ScalarFieldd(bu - bv), 2), pnorm(ScalarFieldd(u - v), 2) * (1 + 1e-12));
    EXPECT_TRUE((bu >= 0).all() && (bu <= 1).all());

    const ScalarFieldd su = project_ball(u, r), sv = project_ball(v, r);
    EXPECT_TRUE((project_ball(su, r) == su).all());
    EXPECT_LE(pnorm(ScalarFieldd(su - sv), 2), pnorm(ScalarFieldd(u - v), 2) * (1 + 1e-12));
    EXPECT_TRUE((su.abs() <= r).all());

    const auto x = gen.multi<4>(g.rows, g.cols, -3, 3), y = gen.multi<4>(g.rows, g.cols, -3, 3);
    const auto px = project_ball(x, r), py = project_ball(y, r);
    const auto ppx = project_ball(px, r);
    for (int c = 0; c < 4; ++c) EXPECT_TRUE(((ppx[c] - px[c]).abs() <= 1e-15 * r).all());
    EXPECT_LE(pnorm(px - py, 2), pnorm(x - y, 2) * (1 + 1e-12));
    EXPECT_TRUE((magnitude(px) <= r * (1 + 1e-15)).all());
  }
}

TEST(Psnr, IdenticalImagesGiveInfinity) {
  const ScalarFieldd u = ScalarFieldd::Constant(4, 4, 0.3);
  EXPECT_EQ(psnr(u, u), std::numeric_limits<double>::infinity());
}

TEST(Psnr, UniformOffsetOfTenthIsTwentyDecibels) {
  const ScalarFieldd u = ScalarFieldd::Constant(5, 3, 0.3);
  EXPECT_NEAR(psnr(ScalarFieldd(u + 0.1), u), 20.0, 1e-12);
}

TEST(Psnr, MatchesDirectMse) {
  Gen gen(15);
  for (int t = 0; t < 20; ++t) {
    const GridShape g = gen.shape(1, 16);
    const ScalarFieldd a = gen.field(g.rows, g.cols, 0, 1), b = gen.field(g.rows, g.cols, 0, 1);
    double sum = 0;
    for (Index k = 0; k < g.size(); ++k) sum += (a(k) - b(k)) * (a(k) - b(k));
    EXPECT_NEAR(psnr(a, b), 10 * std::log10(double(g.size()) / sum), 1e-10);
  }
  EXPECT_THROW(psnr(ScalarFieldd::Zero(2, 2), ScalarFieldd::Zero(3, 2)), std::invalid_argument);
}

TEST(AllFinite, DetectsNanAndInf) {
  ScalarFieldd u = ScalarFieldd::Zero(2, 2);
  EXPECT_TRUE(all_finite(u));
  u(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(all_finite(u));
  VectorFieldd p(2, 2);
  p[1](0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(all_finite(p));
}

TEST(ParallelFor, VisitsEveryItemOnceAndRethrows) {
  for (int workers : {1, 2, 8}) {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), workers, [&](std::size_t k) { hits[k] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  EXPECT_THROW(parallel_for(10, 4,
                            [](std::size_t k) {
                              if (k == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

}  // namespace
}  // namespace ovdd
