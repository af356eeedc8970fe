#pragma once

namespace phlim::units {

// CODATA 2018; c is exact by definition of the metre.
inline constexpr double kHbarJs = 1.054571817e-34;
inline constexpr double kSpeedOfLightMps = 299792458.0;

/// Conversion bundle between internal natural units (hbar = c = 1, wave
/// numbers in k_ref) and SI. beta and direction are dimensionless and never
/// touch these constants.
struct UnitScale {
  double k_ref_per_m = 1.0; // k_ref expressed in 1/m
  double hbar = kHbarJs;
  double c = kSpeedOfLightMps;

  double wavenumber_si(double k_nat) const { return k_nat * k_ref_per_m; }
  double wavenumber_nat(double k_si) const { return k_si / k_ref_per_m; }
  double length_si(double r_nat) const { return r_nat / k_ref_per_m; }
  double length_nat(double r_si) const { return r_si * k_ref_per_m; }
  double energy_si(double e_nat) const { return e_nat * hbar * c * k_ref_per_m; }
  double momentum_si(double p_nat) const { return p_nat * hbar * k_ref_per_m; }
  double mass_si(double m_nat) const { return m_nat * hbar * k_ref_per_m / c; }
  double time_si(double t_nat) const { return t_nat / (c * k_ref_per_m); }
};

} // namespace phlim::units
