#pragma once

#include <numbers>

// SI values, CODATA 2018.
namespace nvcoh::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double mu0 = 1.25663706212e-6;          // T^2 m^3 / J
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double planck = 6.62607015e-34;         // J s
inline constexpr double bohr_magneton = 9.2740100783e-24;    // J / T
inline constexpr double nuclear_magneton = 5.0507837461e-27; // J / T
inline constexpr double boltzmann = 1.380649e-23;        // J / K

inline constexpr double g_nv = 2.0;           // NV electron g-factor as used in the dephasing formulas
inline constexpr double g_p1 = 2.0024;        // substitutional nitrogen (P1) electron
inline constexpr double g_c13 = 1.404824;     // 13C nuclear g-factor (mu = 0.702412 mu_N, I = 1/2)
inline constexpr double g_electron_free = 2.0028; // NV ground state, used for Zeeman splittings

inline constexpr double gauss = 1e-4;         // T

/// NV electron Zeeman shift per gauss, Hz/G (~2.8 MHz/G).
inline constexpr double nv_gyromagnetic_hz_per_gauss = g_electron_free * bohr_magneton * gauss / planck;

/// 13C gyromagnetic ratio in kHz/G, the value entering the revival-period formula.
inline constexpr double c13_gyromagnetic_khz_per_gauss = 1.071;

/// Diamond atomic density, cm^-3. One ppb of it is 1.76e14 cm^-3.
inline constexpr double diamond_atoms_per_cm3 = 1.76e23;
inline constexpr double ppb_to_per_cm3 = diamond_atoms_per_cm3 * 1e-9;

/// Tetrahedral angle between <111> axes (109.47 deg); cosine magnitude is 1/3.
inline constexpr double cos_tetrahedral = 1.0 / 3.0;

}  // namespace nvcoh::constants
