#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dtc/circuit.hpp"
#include "dtc/presets.hpp"

using namespace dtc;

namespace {

CircuitParams chain(double C12, double Cq, double E12 = 1.46) {
    BranchCapacitances b;
    b.Ca = b.Cb = 70.0;
    b.C1 = b.C2 = 85.0;
    b.Ca1 = b.Cb2 = Cq;
    b.C12 = C12;
    return CircuitParams::from_branches(7.5, 7.5, E12, 11.0, 11.0, b);
}

// plain bisection on the monotone forward map
double bisect_junction_flux(const CircuitParams& p, double phi_e) {
    double lo = -0.5, hi = 0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (forward_flux(p, mid) < phi_e ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST(circuit, charging_energy_of_100fF) {
    EXPECT_NEAR(units::charging_energy_ghz(100.0), 0.193709, 1e-5);
}

TEST(circuit, flux_round_trip) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const CircuitParams p = chain(1.0, 11.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double phi = u(rng);
        const FluxPoint f = invert_flux(p, phi);
        worst = std::max(worst, std::abs(forward_flux(p, f.phi_e12) - phi));
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(circuit, inversion_matches_bisection) {
    const CircuitParams p = chain(1.0, 11.0, 2.5);
    for (double phi : {-0.49, -0.3, -0.01, 0.0, 0.1, 0.25, 0.37, 0.499})
        EXPECT_NEAR(invert_flux(p, phi).phi_e12, bisect_junction_flux(p, phi), 1e-12) << phi;
}

TEST(circuit, inversion_is_periodic) {
    const CircuitParams p = chain(1.0, 11.0);
    EXPECT_NEAR(invert_flux(p, 0.2).phi_e12, invert_flux(p, 1.2).phi_e12, 1e-12);
    EXPECT_NEAR(invert_flux(p, -0.3).phi_e12, invert_flux(p, 0.7).phi_e12, 1e-12);
}

TEST(circuit, inversion_rejects_non_monotone_split) {
    CircuitParams p = chain(1.0, 11.0);
    p.E12 = 4.0;  // 4/7.5 + 4/7.5 > 1
    EXPECT_THROW(invert_flux(p, 0.1), DomainError);
    EXPECT_THROW(p.validate(), DomainError);
}

TEST(circuit, dressed_energy_identity) {
    const CircuitParams p = chain(1.0, 11.0);
    for (double x : {0.0, 0.07, 0.19, 0.25, 0.33, 0.48}) {
        const DerivedParams d = derive_params(p, flux_from_junction(p, x));
        const double s = std::sin(units::two_pi * x);
        EXPECT_NEAR(d.E1p * d.E1p + p.E12 * p.E12 * s * s, p.E1 * p.E1, 1e-12);
        EXPECT_NEAR(d.E2p * d.E2p + p.E12 * p.E12 * s * s, p.E2 * p.E2, 1e-12);
    }
}

TEST(circuit, inductive_coupling_even_and_periodic) {
    const CircuitParams p = chain(1.0, 11.0);
    for (double phi : {0.05, 0.17, 0.31, 0.44}) {
        const double g = derive_params(p, phi).gL;
        EXPECT_NEAR(derive_params(p, -phi).gL, g, 1e-12);
        EXPECT_NEAR(derive_params(p, phi + 1.0).gL, g, 1e-12);
    }
}

TEST(circuit, inductive_coupling_changes_sign_at_quarter_junction_flux) {
    const CircuitParams p = chain(1.0, 11.0);
    EXPECT_NEAR(derive_params(p, flux_from_junction(p, 0.25)).gL, 0.0, 1e-15);
    for (double dx : {0.01, 0.08, 0.2}) {
        const DerivedParams lo = derive_params(p, flux_from_junction(p, 0.25 - dx));
        const DerivedParams hi = derive_params(p, flux_from_junction(p, 0.25 + dx));
        EXPECT_NEAR(lo.E12p, -hi.E12p, 1e-12);
        EXPECT_GT(lo.gL, 0.0);
        EXPECT_LT(hi.gL, 0.0);
    }
}

TEST(circuit, no_coupling_capacitance_no_capacitive_coupling) {
    const CircuitParams p = chain(0.0, 0.0);
    const DerivedParams d = derive_params(p, 0.1);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) EXPECT_EQ(d.gcap(i, j), 0.0);
    EXPECT_NE(d.gL, 0.0);
}

TEST(circuit, fig2a_design_max_inductive_coupling) {
    const CircuitParams p = design_static(design_fig2a());
    const DerivedParams d = derive_params(p, 0.0);
    EXPECT_NEAR(d.gL, 0.31, 1e-9);
    EXPECT_NEAR(d.omega[0], 4.7, 1e-9);
    EXPECT_NEAR(derive_params(p, analytic_decoupling_flux(p)).ga(), 0.25, 1e-9);
}

TEST(circuit, flux_drive_vanishes_with_junction_coupling) {
    // without C12 both drive constants are proportional to E12'
    const CircuitParams p = chain(0.0, 11.0);
    const DerivedParams d = derive_params(p, flux_from_junction(p, 0.25));
    EXPECT_NEAR(d.gL, 0.0, 1e-15);
    EXPECT_NEAR(d.xi[1], 0.0, 1e-12);
    EXPECT_NEAR(d.xi[2], 0.0, 1e-12);
    const DerivedParams d0 = derive_params(p, 0.0);
    EXPECT_GT(std::abs(d0.xi[1]), 1e-3);
}

TEST(circuit, geometric_falloff) {
    BranchCapacitances b;
    b.Ca = b.Cb = b.C1 = b.C2 = 100.0;
    b.Ca1 = b.C12 = b.Cb2 = 5.0;
    const CircuitParams p = CircuitParams::from_branches(13.0, 13.0, 1.3, 13.0, 13.0, b);
    const FalloffReport r = geometric_falloff_check(p, FluxPoint{0.0, 0.0});
    EXPECT_TRUE(r.ordered);
    EXPECT_TRUE(r.within_band);
    EXPECT_NEAR(r.ratio_a2_a1, 0.05, 0.01);
    EXPECT_NEAR(r.ratio_ab_a2, 0.05, 0.01);
}

TEST(circuit, mirror_symmetry) {
    const CircuitParams p = design_static(design_fig2b());
    for (double phi : {0.0, 0.2, 0.4}) {
        const DerivedParams d = derive_params(p, phi);
        EXPECT_NEAR(d.ga(), d.gb(), 1e-12);
        EXPECT_NEAR(d.ga2(), d.gb1(), 1e-12);
        EXPECT_NEAR(d.omega[1], d.omega[2], 1e-12);
    }
}

TEST(circuit, small_junction_coupling_keeps_flux_on_it) {
    CircuitParams p = chain(1.0, 11.0, 1e-6);
    for (double phi : {0.1, 0.3, 0.45}) EXPECT_NEAR(invert_flux(p, phi).phi_e12, phi, 1e-6);
}

TEST(circuit, branch_round_trip) {
    const CircuitParams p = chain(1.5, 9.0);
    const BranchCapacitances b = p.branches();
    EXPECT_DOUBLE_EQ(b.C12, 1.5);
    EXPECT_DOUBLE_EQ(b.Ca1, 9.0);
    EXPECT_DOUBLE_EQ(b.C1, 85.0);
    EXPECT_NO_THROW(p.validate());
}

TEST(circuit, validation_rejects_long_range_capacitance) {
    CircuitParams p = chain(1.0, 11.0);
    p.Cmat(0, 2) = p.Cmat(2, 0) = -0.5;
    EXPECT_THROW(p.validate(), DomainError);
}

TEST(circuit, coupler_scope_leaves_qubits_empty) {
    const DerivedParams d = derive_params(preset_figA2(), 0.1, Scope::coupler_only);
    EXPECT_EQ(d.omega[0], 0.0);
    EXPECT_EQ(d.omega[3], 0.0);
    EXPECT_GT(d.omega[1], 0.0);
}
