// units.hpp: physical constants and the unit conventions used throughout.
//
// Energies are E/h in GHz, frequencies are w/2pi in GHz, time in ns, flux in
// units of the flux quantum, capacitance in fF, inductance in pH.

#pragma once

#include <numbers>

namespace dtc::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018 exact SI values.
inline constexpr double planck_h = 6.62607015e-34;        // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double hbar = planck_h / two_pi;
inline constexpr double flux_quantum = planck_h / (2.0 * elementary_charge);  // Wb
inline constexpr double reduced_flux_quantum = flux_quantum / two_pi;

inline constexpr double femto = 1e-15;
inline constexpr double pico = 1e-12;
inline constexpr double giga = 1e9;
inline constexpr double micro = 1e-6;

/// E/h in GHz -> joules.
constexpr double ghz_to_joule(double e_ghz) { return e_ghz * planck_h * giga; }

/// Joules -> E/h in GHz.
constexpr double joule_to_ghz(double e_joule) { return e_joule / (planck_h * giga); }

/// Charging energy e^2/2C (as E/h in GHz) of a capacitance given in fF.
constexpr double charging_energy_ghz(double c_ff) {
    return joule_to_ghz(elementary_charge * elementary_charge / (2.0 * c_ff * femto));
}

/// Cyclic frequency in GHz -> angular frequency in rad/s.
constexpr double ghz_to_angular(double f_ghz) { return two_pi * f_ghz * giga; }

}  // namespace dtc::units
