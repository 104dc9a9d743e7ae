// circuit.hpp: physical parameters of the double-transmon coupler chain and every
// closed-form quantity derived from them at a given flux bias.

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "dtc/errors.hpp"
#include "dtc/units.hpp"

namespace dtc {

/// Transmon modes, ordered left to right along the chain (a, 1, 2, b).
enum class Mode : int { a = 0, c1 = 1, c2 = 2, b = 3 };

inline constexpr std::array<Mode, 4> kAllModes{Mode::a, Mode::c1, Mode::c2, Mode::b};

constexpr int index(Mode m) { return static_cast<int>(m); }

inline std::string_view mode_name(Mode m) {
    switch (m) {
        case Mode::a: return "a";
        case Mode::c1: return "1";
        case Mode::c2: return "2";
        case Mode::b: return "b";
    }
    return "?";
}

inline Mode parse_mode(std::string_view s) {
    if (s == "a") return Mode::a;
    if (s == "1") return Mode::c1;
    if (s == "2") return Mode::c2;
    if (s == "b") return Mode::b;
    throw DomainError("unknown mode label '" + std::string(s) + "' (expected a, 1, 2 or b)");
}

/// Whether a model covers only the two coupler islands or the full four-transmon chain.
enum class Scope { coupler_only, full_chain };

/// Branch capacitances in fF: each island to ground plus the three chain couplings.
struct BranchCapacitances {
    double Ca = 0.0, C1 = 0.0, C2 = 0.0, Cb = 0.0;
    double Ca1 = 0.0, C12 = 0.0, Cb2 = 0.0;
};

/// Raw circuit inputs. Cmat is the Maxwell capacitance matrix of the (a,1,2,b) nodes:
/// node totals on the diagonal, minus the coupling capacitances off the diagonal.
struct CircuitParams {
    double E1 = 0.0, E2 = 0.0, E12 = 0.0, Ea = 0.0, Eb = 0.0;  // GHz
    Eigen::Matrix4d Cmat = Eigen::Matrix4d::Zero();              // fF
    double M_pH = 0.0;    // bias-line mutual inductance
    double Z0_ohm = 50.0;  // bias-line impedance
    double A_phi = 2.5;    // 1/f flux-noise amplitude, micro-Phi0/sqrt(Hz)

    static CircuitParams from_branches(double E1, double E2, double E12, double Ea,
                                       double Eb, const BranchCapacitances& c) {
        CircuitParams p;
        p.E1 = E1;
        p.E2 = E2;
        p.E12 = E12;
        p.Ea = Ea;
        p.Eb = Eb;
        p.set_branches(c);
        return p;
    }

    void set_branches(const BranchCapacitances& c) {
        Cmat.setZero();
        Cmat(0, 0) = c.Ca + c.Ca1;
        Cmat(1, 1) = c.C1 + c.Ca1 + c.C12;
        Cmat(2, 2) = c.C2 + c.C12 + c.Cb2;
        Cmat(3, 3) = c.Cb + c.Cb2;
        Cmat(0, 1) = Cmat(1, 0) = -c.Ca1;
        Cmat(1, 2) = Cmat(2, 1) = -c.C12;
        Cmat(2, 3) = Cmat(3, 2) = -c.Cb2;
    }

    BranchCapacitances branches() const {
        BranchCapacitances c;
        c.Ca1 = -Cmat(0, 1);
        c.C12 = -Cmat(1, 2);
        c.Cb2 = -Cmat(2, 3);
        c.Ca = Cmat(0, 0) - c.Ca1;
        c.C1 = Cmat(1, 1) - c.Ca1 - c.C12;
        c.C2 = Cmat(2, 2) - c.C12 - c.Cb2;
        c.Cb = Cmat(3, 3) - c.Cb2;
        return c;
    }

    /// Throws DomainError when an invariant is broken.
    void validate() const {
        const double scale = Cmat.cwiseAbs().maxCoeff();
        if (!(scale > 0.0)) throw DomainError("capacitance matrix is zero");
        if ((Cmat - Cmat.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw DomainError("capacitance matrix is not symmetric");
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (std::abs(i - j) > 1 && Cmat(i, j) != 0.0)
                    throw DomainError("capacitance matrix has couplings outside the a-1-2-b chain");
        for (int i = 0; i < 4; ++i) {
            double off = 0.0;
            for (int j = 0; j < 4; ++j)
                if (j != i) off += std::abs(Cmat(i, j));
            if (Cmat(i, i) < off) throw DomainError("capacitance matrix is not diagonally dominant");
        }
        if (Eigen::LLT<Eigen::Matrix4d>(Cmat).info() != Eigen::Success)
            throw DomainError("capacitance matrix is not positive definite");
        if (!(E1 > 0.0 && E2 > 0.0 && Ea > 0.0 && Eb > 0.0))
            throw DomainError("Josephson energies must be positive");
        if (!(E12 > 0.0)) throw DomainError("E12 must be positive");
        if (E12 >= std::min(E1, E2)) throw DomainError("E12 must be smaller than min(E1, E2)");
        if (E12 / E1 + E12 / E2 >= 1.0)
            throw DomainError("E12/E1 + E12/E2 >= 1: the flux redistribution is not monotone");
    }
};

/// External flux and the part of it that drops across the E12 junction, both in Phi0.
struct FluxPoint {
    double phi_e = 0.0;
    double phi_e12 = 0.0;
};

/// Maps a redistributed junction flux onto the total external flux (both in Phi0).
inline double forward_flux(const CircuitParams& p, double phi_e12) {
    const double s = std::sin(units::two_pi * phi_e12);
    return phi_e12 + (std::asin(p.E12 / p.E1 * s) + std::asin(p.E12 / p.E2 * s)) / units::two_pi;
}

inline double forward_flux_derivative(const CircuitParams& p, double phi_e12) {
    const double s = std::sin(units::two_pi * phi_e12);
    const double c = std::cos(units::two_pi * phi_e12);
    const double r1 = p.E12 / p.E1, r2 = p.E12 / p.E2;
    return 1.0 + r1 * c / std::sqrt(1.0 - r1 * r1 * s * s) + r2 * c / std::sqrt(1.0 - r2 * r2 * s * s);
}

/// Wraps a flux into the principal period (-0.5, 0.5].
inline double wrap_flux(double phi) { return phi - std::ceil(phi - 0.5); }

/// Solves forward_flux(x) = phi_e for the principal-branch junction flux.
/// Safeguarded Newton on the bracket (-0.5, 0.5]; bisection whenever Newton leaves it.
inline FluxPoint invert_flux(const CircuitParams& p, double phi_e) {
    if (!(p.E12 < std::min(p.E1, p.E2)) || p.E12 / p.E1 + p.E12 / p.E2 >= 1.0)
        throw DomainError("flux inversion needs E12/E1 + E12/E2 < 1");
    const double target = wrap_flux(phi_e);
    double lo = -0.5, hi = 0.5;
    double x = target;
    double residual = forward_flux(p, x) - target;
    for (int it = 0; it < 200; ++it) {
        if (std::abs(residual) < 1e-14) return {phi_e, x};
        if (residual > 0.0)
            hi = x;
        else
            lo = x;
        double next = x - residual / forward_flux_derivative(p, x);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x || hi - lo < 1e-16) return {phi_e, x};
        x = next;
        residual = forward_flux(p, x) - target;
    }
    if (std::abs(residual) < 1e-12) return {phi_e, x};
    throw NumericalError("flux inversion did not converge", residual);
}

/// Flux point specified directly by the junction flux.
inline FluxPoint flux_from_junction(const CircuitParams& p, double phi_e12) {
    return {forward_flux(p, phi_e12), phi_e12};
}

/// Every flux-dependent circuit quantity at one bias point. Index order is (a,1,2,b);
/// for coupler_only scope the a/b entries are zero.
struct DerivedParams {
    Scope scope = Scope::full_chain;
    FluxPoint flux;
    double E1p = 0.0, E2p = 0.0, E12p = 0.0;  // flux-dressed junction energies, GHz
    std::array<double, 4> EJ{};     // total Josephson energy seen by each node, GHz
    std::array<double, 4> omega{};  // plasma frequencies, GHz
    std::array<double, 4> EC{};     // charging energies, GHz
    std::array<double, 4> CS{};     // shunt capacitances 1/Cinv_jj, fF
    std::array<double, 4> L{};      // effective inductances, pH
    std::array<double, 4> Z{};      // mode impedances, Ohm
    std::array<double, 4> xi{};     // flux-drive coupling constants (dimensionless)
    std::array<double, 4> nu4{};    // quartic self anharmonicity, GHz
    std::array<double, 4> nu6{};    // sextic self anharmonicity, GHz
    std::array<double, 3> mu4{};    // quartic cross terms, k = 1..3
    std::array<double, 5> mu6{};    // sextic cross terms, k = 1..5
    Eigen::Matrix4d Cinv = Eigen::Matrix4d::Zero();  // 1/fF
    Eigen::Matrix4d gcap = Eigen::Matrix4d::Zero();  // capacitive couplings g_{Cj,k}, GHz
    double gL = 0.0;                                 // inductive coupling, GHz

    double gC() const { return gcap(1, 2); }
    double ga() const { return gcap(0, 1); }
    double gb() const { return gcap(2, 3); }
    double ga2() const { return gcap(0, 2); }
    double gb1() const { return gcap(3, 1); }
    double gab() const { return gcap(0, 3); }
    double w(Mode m) const { return omega[index(m)]; }
};

namespace detail {
inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}
}  // namespace detail

inline DerivedParams derive_params(const CircuitParams& p, const FluxPoint& flux,
                                   Scope scope = Scope::full_chain) {
    DerivedParams d;
    d.scope = scope;
    d.flux = flux;
    const double arg = units::two_pi * flux.phi_e12;
    const double s = std::sin(arg);
    d.E12p = p.E12 * std::cos(arg);
    d.E1p = std::sqrt(p.E1 * p.E1 - p.E12 * p.E12 * s * s);
    d.E2p = std::sqrt(p.E2 * p.E2 - p.E12 * p.E12 * s * s);

    if (scope == Scope::full_chain) {
        Eigen::FullPivLU<Eigen::Matrix4d> lu(p.Cmat);
        if (!lu.isInvertible()) throw DomainError("capacitance matrix is singular");
        d.Cinv = lu.inverse();
    } else {
        const Eigen::Matrix2d sub = p.Cmat.block<2, 2>(1, 1);
        if (std::abs(sub.determinant()) < 1e-300) throw DomainError("coupler capacitance matrix is singular");
        d.Cinv.block<2, 2>(1, 1) = sub.inverse();
    }

    d.EJ = {p.Ea, d.E1p + d.E12p, d.E2p + d.E12p, p.Eb};
    const int first = scope == Scope::full_chain ? 0 : 1;
    const int last = scope == Scope::full_chain ? 3 : 2;
    for (int j = first; j <= last; ++j) {
        if (!(d.Cinv(j, j) > 0.0)) throw DomainError("non-positive inverse capacitance");
        if (!(d.EJ[j] > 0.0)) throw DomainError("non-positive effective Josephson energy");
        d.CS[j] = 1.0 / d.Cinv(j, j);
        d.EC[j] = units::charging_energy_ghz(d.CS[j]);
        d.omega[j] = std::sqrt(8.0 * d.EJ[j] * d.EC[j]);
        const double ej_joule = units::ghz_to_joule(d.EJ[j]);
        const double l_henry = units::reduced_flux_quantum * units::reduced_flux_quantum / ej_joule;
        d.L[j] = l_henry / units::pico;
        d.Z[j] = std::sqrt(l_henry / (d.CS[j] * units::femto));
        d.nu4[j] = d.EC[j] / 12.0;
        d.nu6[j] = std::sqrt(2.0) * d.EC[j] / 360.0 * std::sqrt(d.EC[j] / d.EJ[j]);
    }
    for (int j = first; j <= last; ++j)
        for (int k = first; k <= last; ++k)
            if (j != k)
                d.gcap(j, k) = 0.5 * d.Cinv(j, k) * std::sqrt(d.CS[j] * d.CS[k]) *
                               std::sqrt(d.omega[j] * d.omega[k]);

    d.gL = 4.0 * d.E12p * std::sqrt(d.EC[1] * d.EC[2]) / std::sqrt(d.omega[1] * d.omega[2]);

    const double x1 = d.EC[1] / d.EJ[1];
    const double x2 = d.EC[2] / d.EJ[2];
    for (int k = 1; k <= 3; ++k)
        d.mu4[k - 1] = detail::binomial(4, k) * ((k % 2) ? -1.0 : 1.0) * d.E12p / 12.0 *
                       std::pow(x1, k / 4.0) * std::pow(x2, (4 - k) / 4.0);
    for (int k = 1; k <= 5; ++k)
        d.mu6[k - 1] = detail::binomial(6, k) * ((k % 2) ? -1.0 : 1.0) * std::sqrt(2.0) * d.E12p /
                       360.0 * std::pow(x1, k / 4.0) * std::pow(x2, (6 - k) / 4.0);

    const BranchCapacitances c = p.branches();
    const double drive1 = c.C1 * d.E12p / d.E1p - c.C12;
    const double drive2 = -c.C2 * d.E12p / d.E2p + c.C12;
    for (int j = first; j <= last; ++j)
        d.xi[j] = units::flux_quantum * (d.Cinv(j, 1) * drive1 + d.Cinv(j, 2) * drive2) /
                  std::sqrt(2.0 * units::hbar * d.Z[j]);
    return d;
}

inline DerivedParams derive_params(const CircuitParams& p, double phi_e,
                                   Scope scope = Scope::full_chain) {
    return derive_params(p, invert_flux(p, phi_e), scope);
}

/// Exact next-nearest and next-next-nearest capacitive couplings from qubit a,
/// with the geometric approximations they should follow.
struct FalloffReport {
    double g_a1 = 0.0, g_a2 = 0.0, g_ab = 0.0;        // exact, GHz
    double ratio_a2_a1 = 0.0, ratio_ab_a2 = 0.0;      // exact successive ratios
    double expected_a2_a1 = 0.0, expected_ab_a2 = 0.0;  // C12/C_S and Cb2/C_S scaled by sqrt(w) ratios
    bool ordered = false;       // |g_a1| > |g_a2| > |g_ab|
    bool within_band = false;   // each ratio within a factor 2 of its expectation
};

inline FalloffReport geometric_falloff_check(const CircuitParams& p, const FluxPoint& flux) {
    const DerivedParams d = derive_params(p, flux);
    const BranchCapacitances c = p.branches();
    FalloffReport r;
    r.g_a1 = d.gcap(0, 1);
    r.g_a2 = d.gcap(0, 2);
    r.g_ab = d.gcap(0, 3);
    r.ratio_a2_a1 = r.g_a1 != 0.0 ? r.g_a2 / r.g_a1 : 0.0;
    r.ratio_ab_a2 = r.g_a2 != 0.0 ? r.g_ab / r.g_a2 : 0.0;
    r.expected_a2_a1 = c.C12 / d.CS[2] * std::sqrt(d.omega[2] / d.omega[1]);
    r.expected_ab_a2 = c.Cb2 / d.CS[3] * std::sqrt(d.omega[3] / d.omega[2]);
    r.ordered = std::abs(r.g_a1) > std::abs(r.g_a2) && std::abs(r.g_a2) > std::abs(r.g_ab);
    auto in_band = [](double actual, double expected) {
        return expected > 0.0 && actual > 0.5 * expected && actual < 2.0 * expected;
    };
    r.within_band = in_band(r.ratio_a2_a1, r.expected_a2_a1) && in_band(r.ratio_ab_a2, r.expected_ab_a2);
    return r;
}

}  // namespace dtc
