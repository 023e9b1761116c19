#include <gtest/gtest.h>

#include <cmath>

#include "bashelf/levels.hpp"

namespace bashelf {
namespace {

double offset(const std::vector<Sublevel>& levels, int F, int mF) {
  return levels.at(ground_index(F, mF)).energy_offset;
}

TEST(GroundManifold, HasThreePlusFiveSublevels) {
  for (double b : {0.0, 0.5, 8.9, 100.0}) {
    const auto levels = build_ground_manifold(b);
    ASSERT_EQ(levels.size(), 8u);
    int f1 = 0, f2 = 0;
    for (const auto& s : levels) {
      EXPECT_EQ(s.term, Term::S12);
      EXPECT_LE(std::abs(s.mF), s.F);
      (s.F == 1 ? f1 : f2)++;
    }
    EXPECT_EQ(f1, 3);
    EXPECT_EQ(f2, 5);
  }
}

TEST(GroundManifold, ZeroFieldSplittingIsHyperfineConstant) {
  const auto levels = build_ground_manifold(0.0);
  for (int m = -1; m <= 1; ++m) EXPECT_DOUBLE_EQ(offset(levels, 1, m), offset(levels, 1, 0));
  for (int m = -2; m <= 2; ++m) EXPECT_DOUBLE_EQ(offset(levels, 2, m), offset(levels, 2, 0));
  EXPECT_DOUBLE_EQ(offset(levels, 2, 0) - offset(levels, 1, 0), 8.037e9);
}

TEST(GroundManifold, ZeemanShiftAtBiasField) {
  const auto levels = build_ground_manifold(8.9);
  const double expected = 0.5 * 1.399624e6 * 8.9;  // g_F * muB/h * B
  EXPECT_NEAR(offset(levels, 2, 1) - offset(levels, 2, 0), expected, 1e-6);
  EXPECT_NEAR(expected, 6.23e6, 0.01e6);
  // g_F = -1/2 for F=1
  EXPECT_NEAR(offset(levels, 1, 1) - offset(levels, 1, 0), -expected, 1e-6);
}

TEST(GroundManifold, ZeemanAntisymmetryAndClockInsensitivity) {
  for (double b = 0.0; b <= 20.0; b += 0.37) {
    const auto levels = build_ground_manifold(b);
    for (int F : {1, 2})
      for (int m = 1; m <= F; ++m)
        EXPECT_NEAR(offset(levels, F, m) - offset(levels, F, 0), -(offset(levels, F, -m) - offset(levels, F, 0)),
                    1e-6);
    EXPECT_DOUBLE_EQ(offset(levels, 2, 0) - offset(levels, 1, 0), 8.037e9);
  }
}

TEST(GroundManifold, NegativeFieldIsDomainError) {
  EXPECT_THROW(build_ground_manifold(-0.1), DomainError);
  EXPECT_THROW(ground_index(1, 2), DomainError);
}

TEST(D52Regime, CrossoverIsStrict) {
  EXPECT_TRUE(d52_regime(8.9).regime_valid);
  EXPECT_FALSE(d52_regime(0.0).regime_valid);
  EXPECT_FALSE(d52_regime(1.0).regime_valid);
  EXPECT_TRUE(d52_regime(1.0 + 1e-9).regime_valid);
  EXPECT_THROW(d52_regime(-1.0), DomainError);
}

TEST(D52Regime, EffectiveManifoldEnergies) {
  const auto m = d52_regime(8.9);
  EXPECT_EQ(m.J_eff, 4);
  EXPECT_EQ(m.target_mJ, -2);
  EXPECT_DOUBLE_EQ(m.energy(-2), 1.2 * 1.399624e6 * 8.9 * -2);
  EXPECT_DOUBLE_EQ(m.energy(3), -m.energy(-3));
  EXPECT_THROW(m.energy(5), DomainError);
  EXPECT_THROW(d52_regime(0.5).energy(0), DomainError);
}

Sublevel s(int F, int mF) { return {Term::S12, F, mF, 0.0}; }
Sublevel p(int F, int mF) { return {Term::P12, F, mF, 0.0}; }

TEST(TransitionAllowed, Examples) {
  EXPECT_FALSE(transition_allowed(s(2, 0), p(2, 0), Polarization::Pi));
  EXPECT_TRUE(transition_allowed(s(2, 1), p(2, 1), Polarization::Pi));
  EXPECT_FALSE(transition_allowed(s(1, 0), p(2, 1), Polarization::Pi));
  EXPECT_TRUE(transition_allowed(s(1, 0), p(2, 0), Polarization::Pi));
  EXPECT_TRUE(transition_allowed(s(2, 0), p(2, 1), Polarization::SigmaPlus));
  EXPECT_TRUE(transition_allowed(s(2, 0), p(1, 0), Polarization::Pi));
}

TEST(TransitionAllowed, WrongTermsThrow) {
  EXPECT_THROW(transition_allowed(p(2, 0), s(2, 0), Polarization::Pi), DomainError);
  EXPECT_THROW(transition_allowed(s(2, 0), {Term::D52, 2, 0, 0.0}, Polarization::Pi), DomainError);
}

TEST(TransitionAllowed, MirrorSymmetry) {
  const std::pair<Polarization, Polarization> mirror[] = {
      {Polarization::Pi, Polarization::Pi},
      {Polarization::SigmaPlus, Polarization::SigmaMinus},
      {Polarization::SigmaMinus, Polarization::SigmaPlus}};
  for (int F : {1, 2})
    for (int Fp : {1, 2})
      for (int m = -F; m <= F; ++m)
        for (int mp = -Fp; mp <= Fp; ++mp)
          for (const auto& [q, q_mirror] : mirror)
            EXPECT_EQ(transition_allowed(s(F, m), p(Fp, mp), q), transition_allowed(s(F, -m), p(Fp, -mp), q_mirror))
                << F << ' ' << m << " -> " << Fp << ' ' << mp;
}

TEST(TransitionAllowed, PiDarkStateIsUniqueWithinFPrimeTwo) {
  // Under pi light to F'=2 only (F=2, mF=0) has no allowed excitation.
  int dark = 0;
  for (int F : {1, 2})
    for (int m = -F; m <= F; ++m)
      if (!transition_allowed(s(F, m), p(2, m), Polarization::Pi)) {
        ++dark;
        EXPECT_EQ(F, 2);
        EXPECT_EQ(m, 0);
      }
  EXPECT_EQ(dark, 1);
}

TEST(Constants, Values) {
  const AtomicConstants c;
  EXPECT_EQ(c.ground_hf_splitting, 8.037e9);
  EXPECT_EQ(c.d52_hf_splitting_34, 5.0e5);
  EXPECT_EQ(c.d52_lifetime, 35.0);
  EXPECT_EQ(c.p12_branch_to_d32, 0.25);
  EXPECT_EQ(kAllTerms.size(), 4u);
}

}  // namespace
}  // namespace bashelf
