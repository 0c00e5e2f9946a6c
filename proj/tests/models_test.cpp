#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace ovdd {
namespace {

using testing::Gen;

Model<double> random_model(Gen& gen, const GridShape& g, int kind) {
  ScalarFieldd f = gen.field(g.rows, g.cols, 0, 1);
  if (kind == 0) return make_chan_vese(f, gen.uniform(0.5, 10), 0.6, 0.1);
  if (kind == 1) return make_tv_l1(f, gen.uniform(0.5, 10), BlurKernel(gen.integer(1, 2)));
  return make_hessian_l1(f, gen.uniform(0.5, 10));
}

// Integrands written out pixel by pixel, independent of the operator code.
double tv_at(const ScalarFieldd& u, Index i, Index j) {
  const double a = i + 1 < u.rows() ? u(i + 1, j) - u(i, j) : 0.0;
  const double b = j + 1 < u.cols() ? u(i, j + 1) - u(i, j) : 0.0;
  return std::hypot(a, b);
}

TEST(Model, ValidatesParameters) {
  const ScalarFieldd f = ScalarFieldd::Constant(3, 3, 0.5);
  EXPECT_THROW(make_chan_vese(f, 0.0, 0.6, 0.1), std::invalid_argument);
  EXPECT_THROW(make_chan_vese(f, 1.0, 0.3, 0.3), std::invalid_argument);
  EXPECT_THROW(make_tv_l1(f, -1.0, BlurKernel(1)), std::invalid_argument);
  ScalarFieldd bad = f;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(make_hessian_l1(bad, 1.0), std::invalid_argument);
}

TEST(Model, ChanVeseRegionField) {
  Gen gen(41);
  const ScalarFieldd f = gen.field(4, 5, 0, 1);
  const auto m = make_chan_vese(f, 2.0, 0.7, 0.2);
  for (Index k = 0; k < f.size(); ++k)
    EXPECT_NEAR(m.g()(k), (f(k) - 0.7) * (f(k) - 0.7) - (f(k) - 0.2) * (f(k) - 0.2), 1e-15);
}

TEST(Energy, ChanVeseZeroAndInfeasible) {
  Gen gen(42);
  const auto m = make_chan_vese(gen.field(5, 5, 0, 1), 10.0, 0.6, 0.1);
  EXPECT_EQ(energy(m, ScalarFieldd::Zero(5, 5)), 0.0);
  ScalarFieldd u = ScalarFieldd::Constant(5, 5, 0.5);
  u(2, 3) = 1.5;
  EXPECT_EQ(energy(m, u), std::numeric_limits<double>::infinity());
  EXPECT_FALSE(integrand(m, u).feasible);
}

TEST(Energy, ChanVeseHandExample) {
  ScalarFieldd f(2, 2), u(2, 2);
  f << 1, 0, 0, 1;
  u << 1, 0, 0, 1;
  const auto m = make_chan_vese(f, 1.0, 1.0, 0.0);
  // g = -1 where f = 1, fidelity -2; TV = sqrt(2) + 1 + 1.
  EXPECT_NEAR(energy(m, u), std::sqrt(2.0), 1e-15);
}

TEST(Energy, TvL1ConstantMatchesData) {
  // Data generated by the model's own blur, so only TV could contribute.
  const ScalarFieldd c = ScalarFieldd::Constant(6, 6, 0.4);
  const auto m = make_tv_l1(blur(c, BlurKernel(1)), 3.0, BlurKernel(1));
  EXPECT_NEAR(energy(m, c), 0.0, 1e-15);
}

TEST(Integrand, TvL1ZeroImageGivesAlphaAbsData) {
  Gen gen(43);
  const ScalarFieldd f = gen.field(5, 4, -1, 1);
  const auto m1 = make_tv_l1(f, 1.0, BlurKernel(2));
  EXPECT_TRUE((integrand(m1, ScalarFieldd::Zero(5, 4)).values == f.abs()).all());
  const auto m3 = make_tv_l1(f, 3.0, BlurKernel(2));
  EXPECT_LE((integrand(m3, ScalarFieldd::Zero(5, 4)).values - 3.0 * f.abs()).abs().maxCoeff(), 1e-15);
}

TEST(Integrand, ChanVeseConstantGivesLinearTerm) {
  Gen gen(44);
  const auto m = make_chan_vese(gen.field(4, 4, 0, 1), 10.0, 0.6, 0.1);
  const ScalarFieldd u = ScalarFieldd::Constant(4, 4, 0.3);
  EXPECT_LE((integrand(m, u).values - 10.0 * 0.3 * m.g()).abs().maxCoeff(), 1e-15);
}

TEST(Integrand, MatchesHandWrittenPointwiseFormulas) {
  Gen gen(45);
  for (int t = 0; t < 30; ++t) {
    const GridShape g = gen.shape(1, 8);
    const ScalarFieldd u = gen.field(g.rows, g.cols, 0, 1);
    const auto cv = random_model(gen, g, 0);
    const auto tv = random_model(gen, g, 1);
    const int l = tv.as<TvL1<double>>().kernel.half_width;
    const ScalarFieldd Au = testing::blur_brute(u, l);
    const ScalarFieldd Tc = integrand(cv, u).values, Tt = integrand(tv, u).values;
    for (Index j = 0; j < g.cols; ++j)
      for (Index i = 0; i < g.rows; ++i) {
        EXPECT_NEAR(Tc(i, j), cv.alpha() * u(i, j) * cv.g()(i, j) + tv_at(u, i, j), 1e-14);
        EXPECT_NEAR(Tt(i, j), tv.alpha() * std::abs(Au(i, j) - tv.data()(i, j)) + tv_at(u, i, j),
                    1e-14);
      }
  }
}

TEST(Integrand, SumsToEnergyForAllModels) {
  Gen gen(46);
  for (int t = 0; t < 60; ++t) {
    const GridShape g = gen.shape(1, 16);
    const auto m = random_model(gen, g, t % 3);
    const ScalarFieldd u = gen.field(g.rows, g.cols, 0, 1);
    const ScalarFieldd T = integrand(m, u).values;
    double sum = 0;
    for (Index k = 0; k < T.size(); ++k) sum += T(k);
    const double e = energy(m, u);
    EXPECT_LE(std::abs(sum - e), 1e-12 * std::max(1.0, std::abs(e)));
  }
}

TEST(Energy, LowerBounds) {
  Gen gen(47);
  for (int t = 0; t < 60; ++t) {
    const GridShape g = gen.shape(1, 10);
    const auto m = random_model(gen, g, t % 3);
    const ScalarFieldd u = gen.field(g.rows, g.cols, 0, 1);
    if (t % 3 == 0) {
      EXPECT_GE(energy(m, u), -m.alpha() * m.g().abs().sum() - 1e-12);
    } else {
      EXPECT_GE(energy(m, u), 0.0);
    }
  }
}

TEST(LocalEnergy, SumsToGlobalEnergyAndIgnoresExtension) {
  Gen gen(48);
  for (int t = 0; t < 60; ++t) {
    const GridShape g = gen.shape(2, 14);
    const auto m = random_model(gen, g, t % 3);
    const OverlapLayout L(partition_rect(g, gen.integer(1, int(std::min<Index>(4, g.rows))),
                                         gen.integer(1, int(std::min<Index>(4, g.cols)))),
                          stencil_of(m));
    const ScalarFieldd u = gen.field(g.rows, g.cols, 0, 1);
    const auto x = restrict_to(L, u);
    double sum = 0;
    for (int s = 0; s < L.size(); ++s) {
      const double e = local_energy(m, L, s, x.part(s));
      sum += e;
      // Any other values outside the essential domain give the same value.
      const Rect& b = L.box(s);
      const ScalarFieldd other =
          L.mask(s).select(x.part(s), gen.field(b.rows, b.cols, 0, 1));
      EXPECT_EQ(local_energy(m, L, s, other), e);
    }
    const double e = energy(m, u);
    EXPECT_LE(std::abs(sum - e), 1e-12 * std::max(1.0, std::abs(e)));
  }
}

TEST(LocalEnergy, SingleSubdomainEqualsEnergy) {
  Gen gen(49);
  for (int kind = 0; kind < 3; ++kind) {
    const auto m = random_model(gen, GridShape(6, 7), kind);
    const OverlapLayout L(partition_rect(m.grid(), 1, 1), stencil_of(m));
    const ScalarFieldd u = gen.field(6, 7, 0, 1);
    EXPECT_EQ(local_energy(m, L, 0, u), energy(m, u));
  }
}

TEST(LocalEnergy, RejectsLayoutThatDoesNotCoverTheModel) {
  const auto m = make_tv_l1(ScalarFieldd(ScalarFieldd::Constant(6, 6, 0.5)), 1.0, BlurKernel(2));
  const OverlapLayout L(partition_rect(m.grid(), 2, 2), ForwardOne{});
  EXPECT_THROW(local_energy(m, L, 0, ScalarFieldd(ScalarFieldd::Zero(L.box(0).rows, L.box(0).cols))),
               std::logic_error);
}

TEST(StencilOf, MapsModelsToStencils) {
  const ScalarFieldd f = ScalarFieldd::Constant(3, 3, 0.5);
  EXPECT_TRUE(std::holds_alternative<ForwardOne>(stencil_of(make_chan_vese(f, 1.0, 0.6, 0.1))));
  const StencilSpec b = stencil_of(make_tv_l1(f, 1.0, BlurKernel(3)));
  ASSERT_TRUE(std::holds_alternative<Band>(b));
  EXPECT_EQ(std::get<Band>(b).half_width, 3);
  EXPECT_TRUE(std::holds_alternative<BackwardForward>(stencil_of(make_hessian_l1(f, 1.0))));
}

// Perturbation oracle on the documented examples: pixels whose perturbation
// changes the integrand somewhere on the region, computed from the global
// integrand alone.
PixelMask perturbation_domain(const Model<double>& m, const PixelMask& region, Gen& gen) {
  const GridShape g = m.grid();
  PixelMask d = PixelMask::Constant(g.rows, g.cols, false);
  for (Index k = 0; k < g.size(); ++k) d(k) = (testing::influence_of(m, k, gen) && region).any();
  return d;
}

TEST(EssentialDomain, AgreesWithPerturbationOracleOnExamples) {
  Gen gen(50);
  const GridShape g(4, 4);
  const ScalarFieldd f = gen.field(4, 4, 0, 1);
  PixelMask block = PixelMask::Constant(4, 4, false);
  block.block(0, 0, 2, 2).setConstant(true);
  PixelMask single = PixelMask::Constant(4, 4, false);
  single(1, 1) = true;
  const auto cv = make_chan_vese(f, 2.0, 0.6, 0.1);
  const auto tv = make_tv_l1(f, 2.0, BlurKernel(1));
  const auto hs = make_hessian_l1(f, 2.0);
  EXPECT_TRUE((perturbation_domain(cv, block, gen) == essential_domain(g, block, ForwardOne{})).all());
  EXPECT_TRUE((perturbation_domain(tv, block, gen) == essential_domain(g, block, Band{1})).all());
  EXPECT_TRUE(
      (perturbation_domain(hs, single, gen) == essential_domain(g, single, BackwardForward{})).all());
  // The Hessian integrand at the first pixel depends on that pixel only.
  PixelMask corner = PixelMask::Constant(4, 4, false);
  corner(0, 0) = true;
  const PixelMask dc = perturbation_domain(hs, corner, gen);
  EXPECT_EQ(dc.count(), 1);
  EXPECT_TRUE((dc == essential_domain(g, corner, BackwardForward{})).all());
}

TEST(SaltPepper, ZeroFractionIsIdentity) {
  Gen gen(51);
  const ScalarFieldd u = gen.field(9, 7, 0, 1);
  EXPECT_TRUE((salt_pepper(u, 0.0, 3) == u).all());
}

TEST(SaltPepper, FullFractionGivesBinaryImage) {
  Gen gen(52);
  const ScalarFieldd v = salt_pepper(gen.field(16, 16, 0.2, 0.8), 1.0, 9);
  EXPECT_TRUE(((v == 0.0) || (v == 1.0)).all());
  const double ones = (v == 1.0).cast<double>().mean();
  EXPECT_GT(ones, 0.35);
  EXPECT_LT(ones, 0.65);
}

TEST(SaltPepper, CorruptedFractionConcentrates) {
  // Values strictly inside (0, 1) so every corrupted pixel is visible.
  const ScalarFieldd u = ScalarFieldd::Constant(256, 256, 0.5);
  for (std::uint64_t seed : {1ULL, 2ULL, 12345ULL}) {
    const double frac = (salt_pepper(u, 0.2, seed) != 0.5).cast<double>().mean();
    EXPECT_NEAR(frac, 0.2, 0.01);
  }
}

TEST(SaltPepper, DeterministicPerSeed) {
  Gen gen(53);
  const ScalarFieldd u = gen.field(20, 30, 0, 1);
  EXPECT_TRUE((salt_pepper(u, 0.3, 77) == salt_pepper(u, 0.3, 77)).all());
  EXPECT_FALSE((salt_pepper(u, 0.3, 77) == salt_pepper(u, 0.3, 78)).all());
  EXPECT_THROW(salt_pepper(u, 1.5, 1), std::invalid_argument);
  EXPECT_THROW(salt_pepper(u, -0.1, 1), std::invalid_argument);
}

TEST(Threshold, TieGoesToOneAndBinaryIsFixed) {
  ScalarFieldd u(1, 4);
  u << 0.5, 0.49, 0.51, 1.0;
  const ScalarFieldd b = threshold_half(u);
  EXPECT_EQ(b(0, 0), 1.0);
  EXPECT_EQ(b(0, 1), 0.0);
  EXPECT_EQ(b(0, 2), 1.0);
  EXPECT_TRUE((threshold_half(b) == b).all());
}

}  // namespace
}  // namespace ovdd
