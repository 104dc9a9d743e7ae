// recipes.hpp: multi-step studies shared by the CLI reproductions and the acceptance suite:
// charge versus oscillator basis agreement for the coupler alone, and the detuning scan of the
// parametric design with chevron fits at every detuning.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dtc/analytics.hpp"
#include "dtc/dynamics.hpp"
#include "dtc/eigen_solver.hpp"
#include "dtc/hamiltonian.hpp"
#include "dtc/parallel.hpp"
#include "dtc/presets.hpp"

namespace dtc {

struct BasisComparison {
    std::vector<double> phi_e;
    std::vector<std::vector<double>> charge, ho;  // [point][level], transition energies above ground, GHz
    double max_first = 0.0;   // max |HO - charge| over the two first-manifold levels, GHz
    double max_second = 0.0;  // same over the three second-manifold levels
    int levels = 5;
};

/// Transition energies E_k - E_0 (k = 1..5) of the coupler in the charge basis (window
/// +-charge_cutoff) and the HO basis (fock_levels per mode) across `phi`.
inline BasisComparison compare_bases(const CircuitParams& p, const std::vector<double>& phi, int fock_levels,
                                     int charge_cutoff, int ho_order = 6, bool odd_terms = false, int threads = 0) {
    const HilbertSpec hs = HilbertSpec::coupler_fock(fock_levels);
    const HilbertSpec cs = HilbertSpec::charge({Mode::c1, Mode::c2}, charge_cutoff);
    BasisComparison r;
    r.phi_e = phi;
    r.charge.resize(phi.size());
    r.ho.resize(phi.size());
    parallel_for(phi.size(), threads, [&](std::size_t i) {
        const FluxPoint f = invert_flux(p, phi[i]);
        const Eigen::VectorXd ec = eigh(build_charge(p, f, cs).data, r.levels + 1, false).values;
        // the odd terms are imaginary in this quadrature convention
        const Eigen::VectorXd eh = eigh(build_ho(p, f, hs, ho_order, odd_terms).data, r.levels + 1, false).values;
        for (int k = 1; k <= r.levels; ++k) {
            r.charge[i].push_back(ec(k) - ec(0));
            r.ho[i].push_back(eh(k) - eh(0));
        }
    });
    for (std::size_t i = 0; i < phi.size(); ++i)
        for (int k = 0; k < r.levels; ++k) {
            const double d = std::abs(r.ho[i][k] - r.charge[i][k]);
            double& m = k < 2 ? r.max_first : r.max_second;
            m = std::max(m, d);
        }
    return r;
}

struct ParametricScanRow {
    double detuning = 0.0;          // omega_b - omega_a, GHz
    double g_fit = 0.0, g_sigma = 0.0;
    double omega_res = 0.0, resonance_guess = 0.0;
    double visibility = 0.0, rms = 0.0;
    double g_eff_p = 0.0, g_eff_p_anh = 0.0, g_eff_p_corot = 0.0;  // analytic, GHz
    std::vector<std::string> flags;  // accidental degeneracies
    std::string error;               // non-empty when the chevron failed
    bool flagged() const { return !flags.empty(); }
};

/// Chevron fits for the parametric design re-solved at every detuning; the drive frequency
/// grid is centred on each design's own resonance.
inline std::vector<ParametricScanRow> parametric_scan(const ParametricDesign& base, const std::vector<double>& detunings,
                                                      const DriveProtocol& proto, const ChevronOptions& copt,
                                                      const ParametricOptions& popt = {}) {
    std::vector<ParametricScanRow> rows;
    for (double det : detunings) {
        ParametricDesign t = base;
        t.detuning = det;
        ParametricScanRow row;
        row.detuning = det;
        const CircuitParams p = design_parametric(t);
        try {
            const ChevronResult c = chevron(p, proto, copt);
            row.g_fit = c.fit.g;
            row.g_sigma = c.fit.g_sigma();
            row.omega_res = c.fit.omega_res;
            row.resonance_guess = c.resonance_guess;
            row.visibility = c.fit.visibility;
            row.rms = c.fit.rms;
        } catch (const NumericalError& e) {
            row.error = e.what();
        } catch (const PreconditionError& e) {
            row.error = e.what();
        }
        ParametricOptions po = popt;
        po.phi_offset = proto.phi_offset;
        const RotatingFrameParams rf = geff_parametric(p, proto.A, row.omega_res > 0.0 ? row.omega_res : det, po);
        row.g_eff_p = rf.g_eff_p;
        row.g_eff_p_anh = rf.g_eff_p_anh;
        row.g_eff_p_corot = rf.g_eff_p_corot;
        row.flags = rf.degeneracy_flags;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace dtc
