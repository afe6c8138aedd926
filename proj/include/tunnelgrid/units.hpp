#pragma once

// Unit system used throughout: energy meV, mass amu, length Angstrom,
// mass-weighted length amu^(1/2)*Angstrom.

namespace tunnelgrid::units {

// CODATA 2018 exact / recommended values (SI).
inline constexpr double hbar_si = 1.054571817e-34;     // J s
inline constexpr double planck_si = 6.62607015e-34;    // J s
inline constexpr double amu_si = 1.66053906660e-27;    // kg
inline constexpr double angstrom_si = 1e-10;           // m
inline constexpr double electronvolt_si = 1.602176634e-19;  // J
inline constexpr double mev_si = electronvolt_si * 1e-3;    // J

/// hbar^2 in meV * amu * Angstrom^2 (about 4.1801).
inline constexpr double hbar2 = hbar_si * hbar_si / (amu_si * angstrom_si * angstrom_si) / mev_si;

/// Energy of a 1 GHz photon in meV (about 4.1357e-3).
inline constexpr double mev_per_ghz = planck_si * 1e9 / mev_si;

inline constexpr double mev_per_ev = 1e3;

// Reference masses (amu).
inline constexpr double mass_h = 1.008;
inline constexpr double mass_d = 2.014;
inline constexpr double mass_v = 50.942;
inline constexpr double mass_nb = 92.906;
inline constexpr double mass_ta = 180.948;

}  // namespace tunnelgrid::units
