// presets.hpp: circuit design solvers that turn the published target quantities (junction
// energies, coupling rates, plasma frequencies) into complete circuits, and the named parameter
// sets used by the reproduction recipes.

#pragma once

#include <cmath>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <Eigen/Dense>

#include "dtc/circuit.hpp"
#include "dtc/errors.hpp"

namespace dtc {

/// Flux (Phi0, in [0, 0.5)) where gC = gL, from the derived parameters alone.
inline double analytic_decoupling_flux(const CircuitParams& p) {
    auto f = [&](double phi) {
        const DerivedParams d = derive_params(p, phi);
        return d.gC() - d.gL;
    };
    const double hi = forward_flux(p, 0.25);  // gL = 0 there
    const double flo = f(0.0), fhi = f(hi);
    if ((flo < 0.0) == (fhi < 0.0)) throw PreconditionError("gC - gL does not change sign on [0, phi(gL = 0)]");
    std::uintmax_t iters = 100;
    auto tol = [](double a, double b) { return std::abs(b - a) < 1e-12; };
    const auto r = boost::math::tools::toms748_solve(f, 0.0, hi, flo, fhi, tol, iters);
    return 0.5 * (r.first + r.second);
}

/// Static-coupling design of the Fig. 2 kind: a mirror-symmetric chain with given coupler
/// junctions and C12, maximal inductive coupling gL(0), qubit-coupler coupling g at the point
/// where gC = gL, and qubit plasma frequency omega_q. The unknowns are the coupler shunt branch
/// and the qubit-coupler capacitance.
struct StaticDesign {
    double E1 = 7.5, E2 = 7.5, E12 = 1.46;  // GHz
    double gL_max = 0.31;                   // gL at phi_e = 0, GHz
    double g = 0.25;                        // g_a = g_b at the decoupling point, GHz
    double omega_q = 4.7;                   // qubit plasma frequency, GHz
    double C12 = 1.0;                       // coupler-coupler capacitance, fF
    double C_qubit = 70.0;                  // qubit shunt branch, fF
};

inline CircuitParams design_static(const StaticDesign& t) {
    Eigen::Vector2d x(80.0, 12.0);  // C1 = C2, Ca1 = Cb2
    auto build = [&](const Eigen::Vector2d& v) {
        BranchCapacitances b;
        b.Ca = b.Cb = t.C_qubit;
        b.C1 = b.C2 = v(0);
        b.Ca1 = b.Cb2 = v(1);
        b.C12 = t.C12;
        CircuitParams p = CircuitParams::from_branches(t.E1, t.E2, t.E12, 10.0, 10.0, b);
        const DerivedParams d0 = derive_params(p, FluxPoint{0.0, 0.0});
        p.Ea = p.Eb = t.omega_q * t.omega_q / (8.0 * d0.EC[0]);
        return p;
    };
    auto residual = [&](const Eigen::Vector2d& v) {
        const CircuitParams p = build(v);
        const DerivedParams d0 = derive_params(p, FluxPoint{0.0, 0.0});
        const DerivedParams ds = derive_params(p, analytic_decoupling_flux(p));
        return Eigen::Vector2d(d0.gL - t.gL_max, ds.ga() - t.g);
    };
    for (int it = 0; it < 60; ++it) {
        const Eigen::Vector2d r = residual(x);
        if (r.norm() < 1e-12) break;
        Eigen::Matrix2d jac;
        for (int k = 0; k < 2; ++k) {
            Eigen::Vector2d xh = x;
            const double h = 1e-6 * x(k);
            xh(k) += h;
            jac.col(k) = (residual(xh) - r) / h;
        }
        Eigen::Vector2d step = jac.fullPivLu().solve(-r);
        // keep capacitances positive
        while ((x + step).minCoeff() <= 0.0) step *= 0.5;
        x += step;
    }
    if (residual(x).norm() > 1e-9) throw NumericalError("static design did not converge", residual(x).norm());
    CircuitParams p = build(x);
    p.validate();
    return p;
}

/// Parametric design of the Fig. 4 kind: lab-frame circuit chosen so that the frame rotating
/// at omega_d = omega_b - omega_a sees the same parameters for every qubit detuning. Frequencies
/// and gC refer to the static bias phi_e12 = offset; gL_max to phi_e = 0.
struct ParametricDesign {
    double omega_a = 4.7;   // GHz
    double omega_1 = 3.6;   // GHz
    double omega_2p = 3.6;  // rotating-frame omega_2, GHz
    double detuning = 0.08; // omega_b - omega_a = omega_d, GHz
    double g = 0.25;        // g_a = g_b, GHz
    double gC = 0.02;       // GHz
    double gL_max = 0.31;   // GHz
    double offset = -0.25;  // static junction flux, Phi0
    double C_qubit = 70.0, C_coupler = 80.0;  // shunt branches, fF
};

inline CircuitParams design_parametric(const ParametricDesign& t) {
    BranchCapacitances c;
    c.Ca = c.Cb = t.C_qubit;
    c.C1 = c.C2 = t.C_coupler;
    c.Ca1 = c.Cb2 = 10.0;
    c.C12 = 1.0;
    const double w[4] = {t.omega_a, t.omega_1, t.omega_2p + t.detuning, t.omega_a + t.detuning};
    CircuitParams p = CircuitParams::from_branches(10.0, 10.0, 1.0, 10.0, 10.0, c);
    for (int it = 0; it < 500; ++it) {
        const DerivedParams d = derive_params(p, flux_from_junction(p, t.offset));
        const DerivedParams d0 = derive_params(p, FluxPoint{0.0, 0.0});
        double err = 0.0;
        for (int j = 0; j < 4; ++j) err = std::max(err, std::abs(d.omega[j] - w[j]));
        err = std::max({err, std::abs(d.ga() - t.g), std::abs(d.gb() - t.g), std::abs(d.gC() - t.gC),
                        std::abs(d0.gL - t.gL_max)});
        if (err < 1e-11) {
            p.validate();
            return p;
        }
        // plasma frequency scales as sqrt(EJ); couplings roughly linearly in their capacitance
        p.Ea *= std::pow(w[0] / d.omega[0], 2);
        p.Eb *= std::pow(w[3] / d.omega[3], 2);
        const double s = std::sin(units::two_pi * t.offset);
        const double e1p = d.E1p * std::pow(w[1] / d.omega[1], 2) - d.E12p;
        const double e2p = d.E2p * std::pow(w[2] / d.omega[2], 2) - d.E12p;
        p.E1 = std::sqrt(e1p * e1p + p.E12 * p.E12 * s * s);
        p.E2 = std::sqrt(e2p * e2p + p.E12 * p.E12 * s * s);
        p.E12 *= t.gL_max / d0.gL;
        BranchCapacitances b = p.branches();
        b.Ca1 *= t.g / d.ga();
        b.Cb2 *= t.g / d.gb();
        b.C12 *= t.gC / d.gC();
        p.set_branches(b);
    }
    throw NumericalError("parametric design did not converge");
}

/// Coupler-only circuit of the basis cross-validation (E_j = 13 GHz, E12 = 1.3 GHz,
/// C_j = 100 fF, C12 = 0). Qubit entries are inert placeholders.
inline CircuitParams preset_figA2() {
    BranchCapacitances c;
    c.Ca = c.Cb = 100.0;
    c.C1 = c.C2 = 100.0;
    c.Ca1 = c.Cb2 = 0.0;
    c.C12 = 0.0;
    return CircuitParams::from_branches(13.0, 13.0, 1.3, 13.0, 13.0, c);
}

/// Coupler below the qubits (E1 = E2 = 7.5 GHz, E12 = 1.46 GHz).
inline StaticDesign design_fig2a() { return StaticDesign{}; }

/// Coupler above the qubits (E1 = E2 = 23 GHz, E12 = 2.56 GHz).
inline StaticDesign design_fig2b() {
    StaticDesign t;
    t.E1 = t.E2 = 23.0;
    t.E12 = 2.56;
    t.C12 = 4.0;
    return t;
}

}  // namespace dtc
