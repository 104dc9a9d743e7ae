// noise.hpp: closed-form relaxation and dephasing budgets: coupler relaxation into the flux
// bias line, Purcell decay of the qubits through the coupler, 1/f flux-noise echo dephasing and
// coupler-mediated decay into a waveguide. Rates in 1/s, frequencies in GHz.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dtc/analytics.hpp"
#include "dtc/circuit.hpp"
#include "dtc/errors.hpp"
#include "dtc/units.hpp"

namespace dtc {

/// Relaxation into the bias line, Gamma = 2 hbar xi^2 M^2 w^3 / (Phi0^2 Z0).
inline double biasline_rate(double xi, double M_pH, double omega_ghz, double Z0_ohm) {
    if (!(Z0_ohm > 0.0)) throw DomainError("bias-line impedance must be positive");
    const double w = units::ghz_to_angular(omega_ghz);
    const double m = M_pH * units::pico;
    return 2.0 * units::hbar * xi * xi * m * m * w * w * w / (units::flux_quantum * units::flux_quantum * Z0_ohm);
}

/// Single-transmon approximation M^2 E12'^2 / (Z0 phi0^4 C_j), E12' in GHz, C_j in fF.
inline double biasline_rate_approx(double E12p_ghz, double M_pH, double C_ff, double Z0_ohm) {
    const double e = units::ghz_to_joule(E12p_ghz);
    const double m = M_pH * units::pico;
    const double phi0 = units::reduced_flux_quantum;
    return m * m * e * e / (Z0_ohm * std::pow(phi0, 4) * C_ff * units::femto);
}

struct BiasLineRelaxation {
    double gamma_1 = 0.0, gamma_2 = 0.0;  // per coupler transmon, xi_j with omega_j
    double gamma_plus = 0.0, gamma_minus = 0.0;  // xi mapped onto the hybrid modes
    double gamma_bright = 0.0;             // correlated worst case, sum of both
    double approx_1 = 0.0, approx_2 = 0.0;  // single-transmon approximation
    double omega_plus = 0.0, omega_minus = 0.0;
    std::string regime;  // "uncorrelated" (delta >> |gC - gL|) or "correlated"
};

/// Bias-line relaxation of the coupler at `flux`. A positive omega_override (GHz) replaces the
/// mode frequencies in the rate.
inline BiasLineRelaxation biasline_relaxation(const CircuitParams& p, const FluxPoint& flux, double omega_override = 0.0) {
    const DerivedParams d = derive_params(p, flux);
    BiasLineRelaxation r;
    const BogoliubovFrequencies bf = bogoliubov_full(d);
    r.omega_plus = bf.omega_plus;
    r.omega_minus = bf.omega_minus;
    const double delta = 0.5 * std::abs(d.omega[1] - d.omega[2]);
    r.regime = delta > std::abs(d.gC() - d.gL) ? "uncorrelated" : "correlated";
    auto w = [&](double x) { return omega_override > 0.0 ? omega_override : x; };
    r.gamma_1 = biasline_rate(d.xi[1], p.M_pH, w(d.omega[1]), p.Z0_ohm);
    r.gamma_2 = biasline_rate(d.xi[2], p.M_pH, w(d.omega[2]), p.Z0_ohm);
    // the upper hybrid mode inherits the higher bare transmon
    const bool one_up = d.omega[1] >= d.omega[2];
    r.gamma_plus = biasline_rate(one_up ? d.xi[1] : d.xi[2], p.M_pH, w(bf.omega_plus), p.Z0_ohm);
    r.gamma_minus = biasline_rate(one_up ? d.xi[2] : d.xi[1], p.M_pH, w(bf.omega_minus), p.Z0_ohm);
    r.gamma_bright = r.gamma_plus + r.gamma_minus;
    r.approx_1 = biasline_rate_approx(d.E12p, p.M_pH, d.CS[1], p.Z0_ohm);
    r.approx_2 = biasline_rate_approx(d.E12p, p.M_pH, d.CS[2], p.Z0_ohm);
    return r;
}

/// Purcell rate in the simplified form Gamma_coupler (g/Delta)^2.
inline double purcell_simple(double gamma_coupler, double g_over_delta_sq) { return gamma_coupler * g_over_delta_sq; }

struct PurcellRates {
    double gamma_a = 0.0, gamma_b = 0.0;                // beta-weighted two-channel form
    double gamma_a_simple = 0.0, gamma_b_simple = 0.0;  // Gamma_1j g^2 / (w_q - w_j)^2
    double beta = 0.0;
    double validity = 0.0;
    bool dispersive_warning = false;
};

/// Purcell decay of both qubits through the coupler, each coupler transmon (and hybrid mode)
/// relaxing with lifetime coupler_T1_us.
inline PurcellRates purcell(const CircuitParams& p, const FluxPoint& flux, double coupler_T1_us) {
    if (!(coupler_T1_us > 0.0)) throw DomainError("coupler T1 must be positive");
    const DerivedParams d = derive_params(p, flux);
    const double g1 = 1.0 / (coupler_T1_us * units::micro);
    const CouplerEigen ce = coupler_eigen_corot(d);
    PurcellRates r;
    r.beta = ce.beta;
    r.validity = dispersive_validity(d);
    r.dispersive_warning = r.validity > 0.1;
    const double b2 = ce.beta * ce.beta;
    const double wa = d.omega[0], wb = d.omega[3];
    r.gamma_a = d.ga() * d.ga() * (g1 * b2 / std::pow(wa - ce.omega_plus, 2) + g1 * (1.0 - b2) / std::pow(wa - ce.omega_minus, 2));
    r.gamma_b = d.gb() * d.gb() * (g1 * b2 / std::pow(wb - ce.omega_minus, 2) + g1 * (1.0 - b2) / std::pow(wb - ce.omega_plus, 2));
    r.gamma_a_simple = purcell_simple(g1, std::pow(d.ga() / (wa - d.omega[1]), 2));
    r.gamma_b_simple = purcell_simple(g1, std::pow(d.gb() / (wb - d.omega[2]), 2));
    return r;
}

/// Hahn-echo 1/f dephasing, Gamma = sqrt(A_Phi ln 2) |d omega / d Phi|, with sqrt(A_Phi) in
/// micro-Phi0 and the slope as d f / d Phi_e in GHz per Phi0. Returns 1/s.
inline double echo_dephasing_rate(double sqrt_A_phi_micro, double slope_ghz_per_phi0) {
    return sqrt_A_phi_micro * units::micro * std::sqrt(std::log(2.0)) * units::ghz_to_angular(std::abs(slope_ghz_per_phi0));
}

/// Largest slope of a cosine dispersion with the given peak-to-peak swing over one flux quantum.
inline double slope_from_peak_to_peak(double peak_to_peak_ghz) { return units::pi * peak_to_peak_ghz; }

struct FluxDephasing {
    double slope_plus = 0.0, slope_minus = 0.0;  // d omega_pm / d Phi_e, GHz per Phi0
    // coupler rate from the largest slope; the value of the square-root law itself, also quoted
    // with s^-1/2 units for a Gaussian decay
    double gamma_echo = 0.0;
    double T_echo_us = 0.0;  // 1/gamma_echo read as a lifetime
    double purcell_factor_a = 0.0, purcell_factor_b = 0.0;  // (g_j/Delta_j)^2
    double geff_factor = 0.0;                    // g_a g_b / (2 Delta^2 - 2 delta^2)
    double qubit_Tphi_us = 0.0;                  // coupler echo time over the largest Purcell factor
    double geff_Tphi_us = 0.0;                   // coupler echo time over the g_eff factor
};

/// Echo dephasing from 1/f flux noise; slopes by central difference (step 1e-4 Phi0).
inline FluxDephasing flux_dephasing(const CircuitParams& p, double phi_e, double sqrt_A_phi_micro, double step = 1e-4) {
    auto modes = [&](double x) { return bogoliubov_full(derive_params(p, invert_flux(p, x))); };
    const BogoliubovFrequencies hi = modes(phi_e + step), lo = modes(phi_e - step);
    FluxDephasing r;
    r.slope_plus = (hi.omega_plus - lo.omega_plus) / (2.0 * step);
    r.slope_minus = (hi.omega_minus - lo.omega_minus) / (2.0 * step);
    const double slope = std::max(std::abs(r.slope_plus), std::abs(r.slope_minus));
    r.gamma_echo = echo_dephasing_rate(sqrt_A_phi_micro, slope);
    r.T_echo_us = r.gamma_echo > 0.0 ? 1e6 / r.gamma_echo : std::numeric_limits<double>::infinity();
    const DerivedParams d = derive_params(p, invert_flux(p, phi_e));
    const double wbar = 0.5 * (d.omega[1] + d.omega[2]), delta = 0.5 * (d.omega[1] - d.omega[2]);
    const double Da = d.omega[0] - wbar, Db = d.omega[3] - wbar;
    r.purcell_factor_a = std::pow(d.ga() / Da, 2);
    r.purcell_factor_b = std::pow(d.gb() / Db, 2);
    const double D2 = 0.5 * (Da * Da + Db * Db);
    r.geff_factor = std::abs(d.ga() * d.gb() / (2.0 * D2 - 2.0 * delta * delta));
    const double pf = std::max(r.purcell_factor_a, r.purcell_factor_b);
    r.qubit_Tphi_us = pf > 0.0 ? r.T_echo_us / pf : std::numeric_limits<double>::infinity();
    r.geff_Tphi_us = r.geff_factor > 0.0 ? r.T_echo_us / r.geff_factor : std::numeric_limits<double>::infinity();
    return r;
}

struct WaveguideCoupling {
    double g_on = 0.0;           // NaN when delta = 0; resonant effective coupling g_a (gC - gL) / 2 delta, GHz
    double gamma_off = 0.0;      // dispersive decay of qubit a, 1/s
    double gamma_off_beta = 0.0; // beta-weighted form, 1/s
};

/// Qubit a coupled to a bath through coupler transmon 2, which decays at gamma_bath (1/s).
inline WaveguideCoupling waveguide_coupling(const CircuitParams& p, const FluxPoint& flux, double gamma_bath) {
    const DerivedParams d = derive_params(p, flux);
    WaveguideCoupling r;
    const double j = d.gC() - d.gL;
    const double delta = 0.5 * (d.omega[1] - d.omega[2]);
    const double Da = d.omega[0] - 0.5 * (d.omega[1] + d.omega[2]);
    // undefined for a symmetric coupler, where the two transmons hybridize fully
    r.g_on = std::abs(delta) > 1e-9 ? d.ga() * j / (2.0 * delta) : std::numeric_limits<double>::quiet_NaN();
    const double den = Da * Da - delta * delta - j * j;
    if (std::abs(den) < 1e-9) throw PreconditionError("qubit a resonant with a coupler mode; dispersive rate undefined");
    r.gamma_off = gamma_bath * j * j * d.ga() * d.ga() / (den * den);
    const CouplerEigen ce = coupler_eigen_corot(d);
    const double b2 = ce.beta * ce.beta;
    r.gamma_off_beta = gamma_bath * d.ga() * d.ga() * b2 * (1.0 - b2) *
                       (1.0 / std::pow(d.omega[0] - ce.omega_plus, 2) + 1.0 / std::pow(d.omega[0] - ce.omega_minus, 2));
    return r;
}

struct NoiseBudget {
    FluxPoint flux;
    BiasLineRelaxation biasline;
    PurcellRates purcell;
    FluxDephasing dephasing;
    WaveguideCoupling waveguide;
};

inline NoiseBudget noise_budget(const CircuitParams& p, double phi_e, double coupler_T1_us, double gamma_bath) {
    NoiseBudget b;
    b.flux = invert_flux(p, phi_e);
    b.biasline = biasline_relaxation(p, b.flux);
    b.purcell = purcell(p, b.flux, coupler_T1_us);
    b.dephasing = flux_dephasing(p, phi_e, p.A_phi);
    b.waveguide = waveguide_coupling(p, b.flux, gamma_bath);
    return b;
}

}  // namespace dtc
