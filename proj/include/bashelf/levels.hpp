#pragma once

// Atomic structure of 137Ba+: ground hyperfine/Zeeman sublevels, the
// effective J=4 description of D5/2 in a bias field, and S1/2 -> P1/2
// selection rules.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <vector>

#include "bashelf/error.hpp"

namespace bashelf {

enum class Term { S12, P12, D32, D52 };

inline constexpr std::array<Term, 4> kAllTerms{Term::S12, Term::P12, Term::D32, Term::D52};

inline const char* to_string(Term t) {
  switch (t) {
    case Term::S12: return "S1/2";
    case Term::P12: return "P1/2";
    case Term::D32: return "D3/2";
    case Term::D52: return "D5/2";
  }
  return "?";
}

enum class Polarization { Pi, SigmaPlus, SigmaMinus };

constexpr int delta_m(Polarization q) noexcept {
  switch (q) {
    case Polarization::Pi: return 0;
    case Polarization::SigmaPlus: return 1;
    case Polarization::SigmaMinus: return -1;
  }
  return 0;
}

// Bohr magneton over Planck constant, Hz per gauss.
inline constexpr double kBohrHzPerGauss = 1.399624e6;

struct Wavelengths {
  double cooling_nm = 493.0;
  double repump_nm = 650.0;
  double shelf_um = 1.76;
};

struct AtomicConstants {
  double nuclear_spin = 1.5;
  double ground_hf_splitting = 8.037e9;  // Hz
  double d52_hf_splitting_34 = 5.0e5;    // Hz, F=3 <-> F=4
  double d52_lifetime = 35.0;            // s
  double p12_branch_to_d32 = 0.25;
  Wavelengths qubit_wavelengths{};
  double b_crossover = 1.0;   // gauss; effective J=4 regime strictly above
  double g_j_eff = 6.0 / 5.0; // D5/2 fine-structure g_J, configurable
};

struct Sublevel {
  Term term = Term::S12;
  int F = 0;
  int mF = 0;
  double energy_offset = 0.0;  // Hz, relative to the term's hyperfine centroid

  friend bool operator==(const Sublevel& a, const Sublevel& b) {
    return a.term == b.term && a.F == b.F && a.mF == b.mF;
  }
};

inline constexpr std::size_t kGroundCount = 8;

// Ground sublevel ordering: F=1 (mF = -1..1) then F=2 (mF = -2..2).
constexpr std::size_t ground_index(int F, int mF) {
  if (F == 1 && mF >= -1 && mF <= 1) return static_cast<std::size_t>(mF + 1);
  if (F == 2 && mF >= -2 && mF <= 2) return static_cast<std::size_t>(3 + mF + 2);
  throw DomainError("ground_index: no S1/2 sublevel with F=" + std::to_string(F) +
                    ", mF=" + std::to_string(mF));
}

inline constexpr std::size_t kClockLower = ground_index(1, 0);  // |1>: F=1, mF=0
inline constexpr std::size_t kClockUpper = ground_index(2, 0);  // |0>: F=2, mF=0

// Landé g_F for the S1/2 (J=1/2, I=3/2) hyperfine levels.
constexpr double ground_g_factor(int F) { return F == 2 ? 0.5 : -0.5; }

inline std::vector<Sublevel> build_ground_manifold(double b_gauss,
                                                   const AtomicConstants& constants = {}) {
  if (!(b_gauss >= 0.0)) throw DomainError("build_ground_manifold: B must be >= 0");
  const double hf = constants.ground_hf_splitting;
  std::vector<Sublevel> levels;
  levels.reserve(kGroundCount);
  for (int F : {1, 2}) {
    // 3:5 degeneracy weighting keeps the centroid at zero.
    const double hf_offset = F == 1 ? -5.0 / 8.0 * hf : 3.0 / 8.0 * hf;
    for (int mF = -F; mF <= F; ++mF) {
      const double zeeman = ground_g_factor(F) * kBohrHzPerGauss * b_gauss * mF;
      levels.push_back({Term::S12, F, mF, hf_offset + zeeman});
    }
  }
  return levels;
}

struct EffectiveDManifold {
  int J_eff = 4;
  int target_mJ = -2;
  bool regime_valid = false;
  double b_gauss = 0.0;
  double g_j_eff = 6.0 / 5.0;

  // Linear Zeeman energy of |J=4, mJ> in Hz. Only meaningful when regime_valid.
  double energy(int mJ) const {
    if (!regime_valid) throw DomainError("EffectiveDManifold: mJ levels undefined below crossover field");
    if (std::abs(mJ) > J_eff) throw DomainError("EffectiveDManifold: |mJ| > 4");
    return g_j_eff * kBohrHzPerGauss * b_gauss * mJ;
  }
};

inline EffectiveDManifold d52_regime(double b_gauss, const AtomicConstants& constants = {}) {
  if (!(b_gauss >= 0.0)) throw DomainError("d52_regime: B must be >= 0");
  EffectiveDManifold m;
  m.regime_valid = b_gauss > constants.b_crossover;
  m.b_gauss = b_gauss;
  m.g_j_eff = constants.g_j_eff;
  return m;
}

// S1/2 -> P1/2 electric-dipole selection rules, including the vanishing
// F=F', mF=0 -> mF'=0 pi component.
inline bool transition_allowed(const Sublevel& lower, const Sublevel& upper, Polarization q) {
  if (lower.term != Term::S12 || upper.term != Term::P12)
    throw DomainError("transition_allowed: expects S1/2 lower and P1/2 upper sublevels");
  if (std::abs(lower.mF) > lower.F || std::abs(upper.mF) > upper.F) return false;
  if (std::abs(upper.F - lower.F) > 1) return false;
  if (upper.mF - lower.mF != delta_m(q)) return false;
  if (lower.F == upper.F && lower.mF == 0 && upper.mF == 0) return false;
  if (lower.F == 0 && upper.F == 0) return false;
  return true;
}

}  // namespace bashelf
