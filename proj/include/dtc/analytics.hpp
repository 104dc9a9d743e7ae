// analytics.hpp: closed-form coupler diagonalization (exact Bogoliubov and the co- and
// counter-rotating branches), second-order effective qubit-qubit coupling, ac-Stark shifts
// and the rotating-frame parametric coupling.
//
// Conventions: the coupler exchange term is J = gC - gL, the pair term K = gC + gL,
// w_bar = (w1 + w2)/2, delta = (w1 - w2)/2, Delta_j = w_j - w_bar, Sigma_j = w_j + w_bar.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dtc/circuit.hpp"
#include "dtc/errors.hpp"

namespace dtc {

struct BogoliubovFrequencies {
    double omega_plus = 0.0;
    double omega_minus = 0.0;
};

/// Exact normal-mode frequencies of the two coupled coupler oscillators.
inline BogoliubovFrequencies bogoliubov_full(double w1, double w2, double gC, double gL) {
    const double wbar = 0.5 * (w1 + w2), delta = 0.5 * (w1 - w2);
    double eta2 = delta * delta * wbar * wbar + (gC + gL) * (gC + gL) * w1 * w2 - 4.0 * gC * gL * wbar * wbar;
    // exactly zero at delta = 0, gC = gL; allow rounding
    if (eta2 < 0.0 && eta2 > -1e-12 * wbar * wbar * wbar * wbar) eta2 = 0.0;
    if (eta2 < 0.0) throw DomainError("unstable coupler: eta^2 = " + std::to_string(eta2) + " < 0");
    const double eta = std::sqrt(eta2);
    const double base = 2.0 * wbar * wbar - w1 * w2 - 4.0 * gC * gL;
    const double plus2 = base + 2.0 * eta, minus2 = base - 2.0 * eta;
    if (minus2 < 0.0)
        throw DomainError("unstable coupler: omega_minus^2 radicand = " + std::to_string(minus2) + " < 0");
    return {std::sqrt(plus2), std::sqrt(minus2)};
}

inline BogoliubovFrequencies bogoliubov_full(const DerivedParams& d) {
    return bogoliubov_full(d.omega[1], d.omega[2], d.gC(), d.gL);
}

/// Positive normal-mode frequencies of a quadratic bosonic Hamiltonian
///   H = sum_j w_j a_j^dag a_j + sum_{j<k} [gX_jk (a_j + a_j^dag)(a_k + a_k^dag) + gA_jk (a_j - a_j^dag)(a_k - a_k^dag)]
/// from the eigenvalues of sigma K, with sigma = diag(1, -1, 1, -1, ...). Ascending.
inline Eigen::VectorXd quadratic_normal_modes(const Eigen::VectorXd& w, const Eigen::MatrixXd& gX,
                                              const Eigen::MatrixXd& gA) {
    const Eigen::Index n = w.size();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        k(2 * j, 2 * j) = k(2 * j + 1, 2 * j + 1) = w(j);
        for (Eigen::Index l = 0; l < n; ++l) {
            if (l == j) continue;
            const double co = gX(j, l) - gA(j, l), counter = gX(j, l) + gA(j, l);
            k(2 * j, 2 * l) = k(2 * j + 1, 2 * l + 1) = co;
            k(2 * j, 2 * l + 1) = k(2 * j + 1, 2 * l) = counter;
        }
    }
    Eigen::MatrixXd sk = k;
    for (Eigen::Index r = 1; r < 2 * n; r += 2) sk.row(r) *= -1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(sk, false);
    std::vector<double> pos;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        const auto ev = es.eigenvalues()(i);
        if (std::abs(ev.imag()) > 1e-9 * std::max(1.0, std::abs(ev.real())))
            throw DomainError("quadratic Hamiltonian is dynamically unstable (complex normal mode)");
        if (ev.real() > 0.0) pos.push_back(ev.real());
    }
    if (static_cast<Eigen::Index>(pos.size()) != n) throw DomainError("quadratic Hamiltonian is not positive");
    std::sort(pos.begin(), pos.end());
    return Eigen::Map<Eigen::VectorXd>(pos.data(), n);
}

/// The sigma-K numerical route for the coupler pair; cross-check of bogoliubov_full.
inline BogoliubovFrequencies bogoliubov_numeric(double w1, double w2, double gC, double gL) {
    Eigen::Matrix2d gx, ga;
    gx << 0.0, gC, gC, 0.0;
    ga << 0.0, gL, gL, 0.0;
    const Eigen::VectorXd m = quadratic_normal_modes(Eigen::Vector2d(w1, w2), gx, ga);
    return {m(1), m(0)};
}

/// Normal modes of the full chain at harmonic order (all capacitive pairs plus gL).
inline Eigen::VectorXd chain_normal_modes(const DerivedParams& d) {
    Eigen::Vector4d w(d.omega[0], d.omega[1], d.omega[2], d.omega[3]);
    Eigen::Matrix4d ga = Eigen::Matrix4d::Zero();
    ga(1, 2) = ga(2, 1) = d.gL;
    return quadratic_normal_modes(w, d.gcap, ga);
}

struct CouplerEigen {
    double omega_plus = 0.0, omega_minus = 0.0;  // co-rotating branch
    double beta = 0.0;   // co-rotating mixing amplitude
    double alpha = 0.0;  // counter-rotating mixing amplitude
    double omega_bar = 0.0, delta = 0.0;
};

inline CouplerEigen coupler_eigen_corot(double w1, double w2, double gC, double gL) {
    CouplerEigen c;
    c.omega_bar = 0.5 * (w1 + w2);
    c.delta = 0.5 * (w1 - w2);
    const double j = gC - gL, k = gC + gL;
    const double r = std::sqrt(c.delta * c.delta + j * j);
    c.omega_plus = c.omega_bar + r;
    c.omega_minus = c.omega_bar - r;
    const double a = c.delta + r;
    c.beta = (a == 0.0 && j == 0.0) ? 0.0 : a / std::sqrt(j * j + a * a);
    const double big_d = c.omega_bar + std::sqrt(c.omega_bar * c.omega_bar - k * k);
    c.alpha = std::abs(k) / std::sqrt(big_d * big_d - k * k);
    return c;
}

inline CouplerEigen coupler_eigen_corot(const DerivedParams& d) {
    return coupler_eigen_corot(d.omega[1], d.omega[2], d.gC(), d.gL);
}

struct AnalyticOptions {
    // Sign of the (gC + gL) Delta_j / w_bar term: false uses the appendix derivation (minus),
    // true the main-text form (plus).
    bool main_text_counter_sign = false;
    // Anharmonic inductive renormalization: false uses gL' = gL + 3(mu1 + mu3) (matrix elements of
    // the quartic cross terms inside the single-excitation manifold), true the literal gL - 3(mu1 + mu3).
    bool literal_gl_prime = false;
    double validity_warn = 0.25;
};

/// Second-order effective coupling and its ingredients (GHz, GHz^2).
struct EffectiveCoupling {
    double g_co = 0.0, g_counter = 0.0;
    double g_total_HO = 0.0;    // g_co + g_counter
    double g_total_anh = 0.0;   // same expression with anharmonic primes
    double g_main_text = 0.0;   // diagnostic: simplified main-text form (no S^2, no parasitics)
    double stark_a = 0.0, stark_b = 0.0;
    double stark_a_anh = 0.0, stark_b_anh = 0.0;
    double D2_a = 0.0, D2_b = 0.0, S2_a = 0.0, S2_b = 0.0;
    double validity = 0.0;      // max_j |g_j| / |w_j - w_pm|
    bool dispersive_warning = false;
    double omega_plus = 0.0, omega_minus = 0.0;  // exact Bogoliubov frequencies
};

/// Frequencies and couplings entering the second-order formulas.
struct DispersiveInputs {
    double wa, w1, w2, wb;
    double ga, gb, ga2, gb1, gC, gL;
};

inline DispersiveInputs dispersive_inputs(const DerivedParams& d) {
    return {d.omega[0], d.omega[1], d.omega[2], d.omega[3], d.ga(), d.gb(), d.ga2(), d.gb1(), d.gC(), d.gL};
}

/// Anharmonic primes: w' = w - 12 nu4 (qubits), w' = w - 2 mu2 - 12 nu4 (coupler), gL'.
inline DispersiveInputs anharmonic_inputs(const DerivedParams& d, const AnalyticOptions& opt = {}) {
    DispersiveInputs in = dispersive_inputs(d);
    in.wa -= 12.0 * d.nu4[0];
    in.wb -= 12.0 * d.nu4[3];
    in.w1 -= 2.0 * d.mu4[1] + 12.0 * d.nu4[1];
    in.w2 -= 2.0 * d.mu4[1] + 12.0 * d.nu4[2];
    const double shift = 3.0 * (d.mu4[0] + d.mu4[2]);
    in.gL = opt.literal_gl_prime ? d.gL - shift : d.gL + shift;
    return in;
}

namespace detail {

struct SecondOrder {
    double g_co, g_counter, g_main, stark_a, stark_b, D2a, D2b, S2a, S2b;
};

inline SecondOrder second_order(const DispersiveInputs& in, const AnalyticOptions& opt) {
    const double wbar = 0.5 * (in.w1 + in.w2), delta = 0.5 * (in.w1 - in.w2);
    const double j = in.gC - in.gL, k = in.gC + in.gL;
    const double wq[2] = {in.wa, in.wb};
    double D2[2], S2[2];
    for (int q = 0; q < 2; ++q) {
        const double Dl = wq[q] - wbar, Sg = wq[q] + wbar;
        D2[q] = Dl * Dl - delta * delta - j * j;
        S2[q] = Sg * Sg - delta * delta - j * j;
        if (std::abs(D2[q]) < 1e-6)
            throw PreconditionError("qubit resonant with a coupler mode (|D^2| < 1e-6 GHz^2); dispersive theory invalid");
    }
    SecondOrder r{};
    r.D2a = D2[0];
    r.D2b = D2[1];
    r.S2a = S2[0];
    r.S2b = S2[1];
    const double counter_sign = opt.main_text_counter_sign ? 1.0 : -1.0;
    for (int q = 0; q < 2; ++q) {
        const double w = wq[q], Dl = w - wbar, Sg = w + wbar;
        // co-rotating branch: resolvent of the exchange-coupled pair at +-w
        r.g_co += (in.ga * in.gb + in.ga2 * in.gb1) * j * (0.5 / D2[q] + 0.5 / S2[q]);
        r.g_co += in.ga * in.gb1 * ((w - in.w2) / (2.0 * D2[q]) - (w + in.w2) / (2.0 * S2[q]));
        r.g_co += in.ga2 * in.gb * ((w - in.w1) / (2.0 * D2[q]) - (w + in.w1) / (2.0 * S2[q]));
        // counter-rotating branch with alpha sqrt(1 + alpha^2) ~ K / 2 w_bar
        r.g_counter += counter_sign * in.ga * in.gb * k * (Dl / wbar / (2.0 * D2[q]) - Sg / wbar / (2.0 * S2[q]));
        // simplified main-text form, literal sign
        r.g_main += in.ga * in.gb * (j + k * Dl / wbar) / (2.0 * D2[q]);
    }
    r.stark_a = in.ga * in.ga * ((in.wa - in.w2) / D2[0] - (in.wa + in.w2) / S2[0]);
    r.stark_b = in.gb * in.gb * ((in.wb - in.w1) / D2[1] - (in.wb + in.w1) / S2[1]);
    return r;
}

}  // namespace detail

inline double dispersive_validity(const DerivedParams& d) {
    const BogoliubovFrequencies bf = bogoliubov_full(d);
    double v = 0.0;
    for (double wc : {bf.omega_plus, bf.omega_minus}) {
        v = std::max(v, std::abs(d.ga()) / std::abs(d.omega[0] - wc));
        v = std::max(v, std::abs(d.gb()) / std::abs(d.omega[3] - wc));
    }
    return v;
}

inline EffectiveCoupling geff_analytic(const DerivedParams& d, const AnalyticOptions& opt = {}) {
    if (d.scope != Scope::full_chain) throw DomainError("effective coupling needs the full-chain parameters");
    EffectiveCoupling e;
    const BogoliubovFrequencies bf = bogoliubov_full(d);
    e.omega_plus = bf.omega_plus;
    e.omega_minus = bf.omega_minus;
    e.validity = dispersive_validity(d);
    e.dispersive_warning = e.validity > opt.validity_warn;
    const detail::SecondOrder h = detail::second_order(dispersive_inputs(d), opt);
    e.g_co = h.g_co;
    e.g_counter = h.g_counter;
    e.g_total_HO = h.g_co + h.g_counter;
    e.g_main_text = h.g_main;
    e.stark_a = h.stark_a;
    e.stark_b = h.stark_b;
    e.D2_a = h.D2a;
    e.D2_b = h.D2b;
    e.S2_a = h.S2a;
    e.S2_b = h.S2b;
    const detail::SecondOrder a = detail::second_order(anharmonic_inputs(d, opt), opt);
    e.g_total_anh = a.g_co + a.g_counter;
    e.stark_a_anh = a.stark_a;
    e.stark_b_anh = a.stark_b;
    return e;
}

inline EffectiveCoupling geff_analytic(const CircuitParams& p, const FluxPoint& flux, const AnalyticOptions& opt = {}) {
    return geff_analytic(derive_params(p, flux), opt);
}

// ---------------------------------------------------------------------------------------
// Parametric coupling in the frame rotating with the drive on qubit b and coupler mode 2.

struct ParametricOptions {
    double phi_offset = -0.25;  // static junction flux, Phi0
    bool appendix_half = true;  // gL^p carries the /2 of the sine expansion
    double degeneracy_window = 0.1;  // GHz, width of flagged accidental-degeneracy regions
    double amplitude_warn = 0.15;
    AnalyticOptions analytic;
};

struct RotatingFrameParams {
    double omega_d = 0.0, A = 0.0;
    double omega_a_p = 0.0, omega_1_p = 0.0, omega_2_p = 0.0, omega_b_p = 0.0;
    double Delta_p_a = 0.0, Delta_p_b = 0.0;
    double delta_p = 0.0, omega_bar_p = 0.0;
    double gL_p = 0.0, gC = 0.0, ga = 0.0, gb = 0.0;
    double D2_p_a = 0.0, D2_p_b = 0.0;
    double g_eff_p = 0.0;      // harmonic form
    double g_eff_p_anh = 0.0;  // with anharmonic primes
    // diagnostic: co-rotating exchange chain a-1-2-b with the rotating amplitude gL^p,
    // sum_j -g_a g_b gL^p / (2 (D_j^p)^2), normalized like the static co-rotating branch
    double g_eff_p_corot = 0.0;
    bool amplitude_warning = false;
    std::vector<std::string> degeneracy_flags;
    bool flagged() const { return !degeneracy_flags.empty(); }
};

namespace detail {

inline double parametric_sum(double wa, double w1, double w2, double wb, double ga, double gb, double gC, double gLp,
                             double wd, RotatingFrameParams* out) {
    const double w2p = w2 - wd, wbp = wb - wd;
    const double wbar_p = 0.5 * (w1 + w2p), delta_p = 0.5 * (w1 - w2p);
    const double Dl[2] = {wa - wbar_p, wbp - wbar_p};
    double g = 0.0;
    double D2[2];
    for (int q = 0; q < 2; ++q) {
        D2[q] = Dl[q] * Dl[q] - delta_p * delta_p - 0.5 * gLp * gLp - gC * gC;
        if (std::abs(D2[q]) < 1e-6) throw PreconditionError("rotating-frame denominator (D^p)^2 vanishes");
        g += -ga * gb * gLp * (1.0 - Dl[q] / wbar_p) / (4.0 * D2[q]);
    }
    if (out) {
        out->g_eff_p_corot = -ga * gb * gLp * (0.5 / D2[0] + 0.5 / D2[1]);
        out->omega_a_p = wa;
        out->omega_1_p = w1;
        out->omega_2_p = w2p;
        out->omega_b_p = wbp;
        out->omega_bar_p = wbar_p;
        out->delta_p = delta_p;
        out->Delta_p_a = Dl[0];
        out->Delta_p_b = Dl[1];
        out->D2_p_a = D2[0];
        out->D2_p_b = D2[1];
    }
    return g;
}

}  // namespace detail

inline double gl_parametric(double A, double gL_zero, bool appendix_half = true) {
    const double x = units::two_pi * A;
    return (x - x * x * x / 8.0) * gL_zero * (appendix_half ? 0.5 : 1.0);
}

/// Rotating-frame parameters and g_eff^p for drive amplitude A (Phi0) at frequency omega_d (GHz).
inline RotatingFrameParams geff_parametric(const CircuitParams& p, double A, double omega_d,
                                           const ParametricOptions& opt = {}) {
    RotatingFrameParams r;
    r.omega_d = omega_d;
    r.A = A;
    r.amplitude_warning = std::abs(A) > opt.amplitude_warn;
    const DerivedParams ds = derive_params(p, flux_from_junction(p, opt.phi_offset));
    const DerivedParams d0 = derive_params(p, flux_from_junction(p, 0.0));
    r.gL_p = gl_parametric(A, d0.gL, opt.appendix_half);
    r.gC = ds.gC();
    r.ga = ds.ga();
    r.gb = ds.gb();
    r.g_eff_p = detail::parametric_sum(ds.omega[0], ds.omega[1], ds.omega[2], ds.omega[3], r.ga, r.gb, r.gC, r.gL_p,
                                       omega_d, &r);
    // Anharmonic variant: static primes at the offset, inductive ratio taken at zero flux.
    const DispersiveInputs pr = anharmonic_inputs(ds, opt.analytic);
    const double ratio = d0.gL != 0.0 ? anharmonic_inputs(d0, opt.analytic).gL / d0.gL : 1.0;
    r.g_eff_p_anh = detail::parametric_sum(pr.wa, pr.w1, pr.w2, pr.wb, r.ga, r.gb, r.gC, r.gL_p * ratio, omega_d, nullptr);

    const BogoliubovFrequencies bf = bogoliubov_full(ds);
    const double win = opt.degeneracy_window;
    for (double wc : {bf.omega_plus, bf.omega_minus}) {
        for (double wq : {ds.omega[0], ds.omega[3]})
            if (std::abs(omega_d - std::abs(wq - wc)) < win) r.degeneracy_flags.push_back("drive ~ |w_qubit - w_coupler|");
        if (std::abs(omega_d - wc) < win) r.degeneracy_flags.push_back("drive ~ w_coupler");
    }
    if (std::abs(0.5 * (ds.omega[1] + ds.omega[2]) - 0.5 * (ds.omega[0] + ds.omega[3])) < win)
        r.degeneracy_flags.push_back("w_bar ~ (w_a + w_b)/2");
    return r;
}

}  // namespace dtc
