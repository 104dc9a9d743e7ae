#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "dtc/analytics.hpp"
#include "dtc/presets.hpp"
#include "dtc/spectrum.hpp"

using namespace dtc;

namespace {

// Fig. 2a design with weaker qubit couplings: dispersive across the whole flux range
CircuitParams dispersive_design() {
    StaticDesign t = design_fig2a();
    t.g = 0.08;
    return design_static(t);
}

}  // namespace

TEST(analytics, uncoupled_modes) {
    const BogoliubovFrequencies b = bogoliubov_full(3.9, 4.3, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(b.omega_plus, 4.3);
    EXPECT_DOUBLE_EQ(b.omega_minus, 3.9);
}

TEST(analytics, exact_matches_sigma_k_route) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> w(3.0, 8.0), g(-0.4, 0.4);
    int checked = 0;
    while (checked < 100) {
        const double w1 = w(rng), w2 = w(rng), gc = g(rng), gl = g(rng);
        BogoliubovFrequencies a;
        try {
            a = bogoliubov_full(w1, w2, gc, gl);
        } catch (const DomainError&) {
            continue;
        }
        const BogoliubovFrequencies b = bogoliubov_numeric(w1, w2, gc, gl);
        EXPECT_NEAR(a.omega_plus, b.omega_plus, 1e-10);
        EXPECT_NEAR(a.omega_minus, b.omega_minus, 1e-10);
        ++checked;
    }
}

TEST(analytics, instability_is_reported) {
    EXPECT_THROW(bogoliubov_full(1.0, 1.0, 0.0, 0.6), DomainError);
    EXPECT_THROW(bogoliubov_numeric(1.0, 1.0, 0.0, 0.6), DomainError);
}

TEST(analytics, weak_inductive_coupling_splits_symmetrically) {
    const double wbar = 4.0, gl = 1e-3;
    const BogoliubovFrequencies b = bogoliubov_full(wbar, wbar, 0.0, gl);
    EXPECT_NEAR(b.omega_plus, wbar + gl, 2.0 * gl * gl / wbar);
    EXPECT_NEAR(b.omega_minus, wbar - gl, 2.0 * gl * gl / wbar);
}

TEST(analytics, symmetric_coupler_mixes_equally) {
    for (double j : {0.05, -0.2}) {
        const CouplerEigen c = coupler_eigen_corot(4.1, 4.1, 0.1 + j, 0.1);
        EXPECT_DOUBLE_EQ(c.beta, 1.0 / std::sqrt(2.0));
    }
    EXPECT_DOUBLE_EQ(coupler_eigen_corot(4.3, 4.1, 0.2, 0.2).beta, 1.0);
    EXPECT_DOUBLE_EQ(coupler_eigen_corot(4.1, 4.3, 0.2, 0.2).beta, 0.0);
}

TEST(analytics, counter_rotating_amplitude_small_coupling) {
    const double gc = 0.01, gl = 0.02;
    const CouplerEigen c = coupler_eigen_corot(4.0, 4.2, gc, gl);
    EXPECT_NEAR(c.alpha / ((gc + gl) / (2.0 * c.omega_bar)), 1.0, 0.01);
}

TEST(analytics, corotating_branch_close_to_exact) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> w(3.0, 6.0), g(0.0, 0.3);
    for (int i = 0; i < 50; ++i) {
        const double w1 = w(rng), w2 = w(rng), gc = g(rng), gl = g(rng);
        const BogoliubovFrequencies exact = bogoliubov_full(w1, w2, gc, gl);
        const CouplerEigen c = coupler_eigen_corot(w1, w2, gc, gl);
        const double bound = 2.0 * (gc + gl) * (gc + gl) / c.omega_bar;
        EXPECT_LT(std::abs(c.omega_plus - exact.omega_plus), bound);
        EXPECT_LT(std::abs(c.omega_minus - exact.omega_minus), bound);
    }
}

TEST(analytics, no_coupling_no_effective_coupling) {
    DerivedParams d = derive_params(design_static(design_fig2a()), 0.1);
    d.gcap(1, 2) = d.gcap(2, 1) = 0.0;
    d.gcap(0, 2) = d.gcap(2, 0) = d.gcap(3, 1) = d.gcap(1, 3) = 0.0;
    d.gL = 0.0;
    const EffectiveCoupling e = geff_analytic(d);
    EXPECT_EQ(e.g_co, 0.0);
    EXPECT_EQ(e.g_counter, 0.0);
    EXPECT_EQ(e.g_total_HO, e.g_co + e.g_counter);
}

TEST(analytics, harmonic_formula_matches_harmonic_numerics) {
    const CircuitParams p = dispersive_design();
    GeffOptions o;
    o.ho_order = 2;
    for (double phi : {0.0, 0.45}) {
        const FluxPoint f = invert_flux(p, phi);
        const EffectiveCoupling e = geff_analytic(derive_params(p, f));
        const double num = extract_geff(p, f, o).two_g;
        EXPECT_LT(std::abs(num / (2.0 * e.g_total_HO) - 1.0), 10.0 * e.validity * e.validity) << phi;
    }
}

TEST(analytics, zero_crossing_matches_numeric_decoupling) {
    const CircuitParams p = dispersive_design();
    auto g = [&](double phi) { return geff_analytic(derive_params(p, phi)).g_total_anh; };
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(
        g, 0.2, 0.45, [](double a, double b) { return std::abs(a - b) < 1e-9; }, iters);
    const double analytic = 0.5 * (r.first + r.second);
    GeffOptions o;
    o.spec = HilbertSpec::full_fock(4, 5, 5, 4);
    EXPECT_NEAR(find_decoupling_flux(p, o).phi_e0, analytic, 0.005);
}

TEST(analytics, anharmonic_correction_near_twenty_percent) {
    const CircuitParams p = design_static(design_fig2a());
    for (double phi : {0.0, 0.5}) {
        const EffectiveCoupling e = geff_analytic(derive_params(p, phi));
        const double rel = std::abs(e.g_total_anh / e.g_total_HO - 1.0);
        EXPECT_GT(rel, 0.1) << phi;
        EXPECT_LT(rel, 0.3) << phi;
    }
}

TEST(analytics, stark_change_bounded_by_coupling) {
    for (const StaticDesign& t : {design_fig2a(), design_fig2b()}) {
        const CircuitParams p = design_static(t);
        const double phi0 = analytic_decoupling_flux(p);
        const EffectiveCoupling ref = geff_analytic(derive_params(p, phi0));
        double change = 0.0, gmax = 0.0;
        for (int i = 0; i <= 40; ++i) {
            const EffectiveCoupling e = geff_analytic(derive_params(p, 0.5 * i / 40.0));
            change = std::max({change, std::abs(e.stark_a - ref.stark_a), std::abs(e.stark_b - ref.stark_b)});
            gmax = std::max(gmax, std::abs(e.g_total_HO));
        }
        EXPECT_LE(change, gmax) << "E1 = " << t.E1;
    }
}

TEST(analytics, counter_sign_toggle) {
    const DerivedParams d = derive_params(design_static(design_fig2a()), 0.2);
    AnalyticOptions main_text;
    main_text.main_text_counter_sign = true;
    const EffectiveCoupling a = geff_analytic(d), b = geff_analytic(d, main_text);
    EXPECT_DOUBLE_EQ(a.g_co, b.g_co);
    EXPECT_DOUBLE_EQ(a.g_counter, -b.g_counter);
}

TEST(analytics, resonance_is_a_precondition_failure) {
    DerivedParams d = derive_params(design_static(design_fig2a()), 0.1);
    d.gcap(1, 2) = d.gcap(2, 1) = d.gL = 0.0;
    d.omega[0] = d.omega[1];
    EXPECT_THROW(geff_analytic(d), PreconditionError);
}

TEST(analytics, no_drive_no_parametric_coupling) {
    const CircuitParams p = design_parametric(ParametricDesign{});
    EXPECT_EQ(gl_parametric(0.0, 0.31), 0.0);
    EXPECT_EQ(geff_parametric(p, 0.0, 0.08).g_eff_p, 0.0);
}

TEST(analytics, parametric_sign_follows_drive) {
    ParametricDesign t;
    t.detuning = 1.0;
    const CircuitParams p = design_parametric(t);
    const RotatingFrameParams a = geff_parametric(p, 0.1, 1.0), b = geff_parametric(p, -0.1, 1.0);
    EXPECT_DOUBLE_EQ(a.g_eff_p, -b.g_eff_p);
    ASSERT_LT(std::abs(a.Delta_p_a / a.omega_bar_p), 1.0);
    ASSERT_LT(std::abs(a.Delta_p_b / a.omega_bar_p), 1.0);
    ASSERT_GT(a.D2_p_a, 0.0);
    ASSERT_GT(a.D2_p_b, 0.0);
    EXPECT_LT(a.g_eff_p * a.gL_p, 0.0);
}

TEST(analytics, rotating_frame_is_detuning_independent) {
    ParametricDesign t;
    RotatingFrameParams ref;
    bool first = true;
    for (double det : {0.08, 0.3, 1.0, 2.0, 4.0}) {
        t.detuning = det;
        const RotatingFrameParams r = geff_parametric(design_parametric(t), 0.1, det);
        if (first) {
            ref = r;
            first = false;
            continue;
        }
        EXPECT_NEAR(r.Delta_p_a, ref.Delta_p_a, 1e-9);
        EXPECT_NEAR(r.Delta_p_b, ref.Delta_p_b, 1e-9);
        EXPECT_NEAR(r.delta_p, ref.delta_p, 1e-9);
        EXPECT_NEAR(r.g_eff_p, ref.g_eff_p, 1e-9);
    }
}
