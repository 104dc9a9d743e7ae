// dtc: command-line front end. Every subcommand reads a config, writes CSV/JSON artifacts and
// a manifest into the output directory, and maps failures onto exit codes
// (2 config, 3 numerical, 4 precondition) with a JSON error record on stderr.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "dtc/config.hpp"
#include "dtc/io.hpp"
#include "dtc/noise.hpp"
#include "dtc/recipes.hpp"

#ifndef DTC_CONFIG_DIR
#define DTC_CONFIG_DIR "configs"
#endif

using namespace dtc;
using ojson = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Common {
    std::string config;
    std::vector<std::string> set;
    std::optional<std::uint64_t> seed;
    std::string output;
    std::optional<int> threads;
    std::string format;
};

void add_common(CLI::App* s, Common& c) {
    s->add_option("--config", c.config, "Config file (JSON with comments)");
    s->add_option("--set", c.set, "Override, dotted.key=value (repeatable)");
    s->add_option("--seed", c.seed, "Random seed");
    s->add_option("--output", c.output, "Output directory");
    s->add_option("--threads", c.threads, "Worker cap (0: hardware)");
    s->add_option("--format", c.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
}

RunConfig load(const Common& c, const std::string& path) {
    if (path.empty()) throw ConfigError("no --config given");
    std::vector<std::string> ov = c.set;
    if (c.seed) ov.push_back("seed=" + std::to_string(*c.seed));
    if (c.threads) ov.push_back("threads=" + std::to_string(*c.threads));
    if (!c.format.empty()) ov.push_back("output.format=\"" + c.format + "\"");
    RunConfig cfg = load_config(path, ov);
    if (!c.output.empty()) cfg.output_dir = c.output;
    return cfg;
}

// ---------------------------------------------------------------------------------------
// JSON views of the results.

ojson circuit_json(const CircuitParams& p) {
    const BranchCapacitances b = p.branches();
    ojson j;
    j["E1"] = p.E1;
    j["E2"] = p.E2;
    j["E12"] = p.E12;
    j["Ea"] = p.Ea;
    j["Eb"] = p.Eb;
    j["capacitance"] = {{"Ca", b.Ca}, {"C1", b.C1}, {"C2", b.C2}, {"Cb", b.Cb}, {"Ca1", b.Ca1}, {"C12", b.C12}, {"Cb2", b.Cb2}};
    j["M_pH"] = p.M_pH;
    j["Z0_ohm"] = p.Z0_ohm;
    j["A_phi"] = p.A_phi;
    j["units"] = {{"energies", "GHz"}, {"capacitance", "fF"}, {"M_pH", "pH"}, {"Z0_ohm", "Ohm"}, {"A_phi", "micro-Phi0"}};
    return j;
}

ojson derived_json(const DerivedParams& d) {
    ojson j;
    j["phi_e"] = d.flux.phi_e;
    j["phi_e12"] = d.flux.phi_e12;
    j["E1p"] = d.E1p;
    j["E2p"] = d.E2p;
    j["E12p"] = d.E12p;
    j["omega"] = d.omega;
    j["EC"] = d.EC;
    j["EJ"] = d.EJ;
    j["CS"] = d.CS;
    j["L"] = d.L;
    j["Z"] = d.Z;
    j["xi"] = d.xi;
    j["nu4"] = d.nu4;
    j["nu6"] = d.nu6;
    j["mu4"] = d.mu4;
    j["mu6"] = d.mu6;
    j["gL"] = d.gL;
    j["gC"] = d.gC();
    j["ga"] = d.ga();
    j["gb"] = d.gb();
    j["ga2"] = d.ga2();
    j["gb1"] = d.gb1();
    j["gab"] = d.gab();
    j["units"] = {{"flux", "Phi0"}, {"frequencies", "GHz"}, {"CS", "fF"}, {"L", "pH"}, {"Z", "Ohm"},
                  {"mode_order", "a, 1, 2, b"}};
    return j;
}

ojson coupling_json(const EffectiveCoupling& e) {
    return {{"g_co", e.g_co},           {"g_counter", e.g_counter},     {"g_total_HO", e.g_total_HO},
            {"g_total_anh", e.g_total_anh}, {"g_main_text", e.g_main_text}, {"stark_a", e.stark_a},
            {"stark_b", e.stark_b},     {"validity", e.validity},       {"omega_plus", e.omega_plus},
            {"omega_minus", e.omega_minus}, {"units", "GHz"}};
}

ojson fit_json(const ChevronFit& f) {
    ojson cov = ojson::array();
    for (int i = 0; i < 3; ++i) cov.push_back({f.covariance(i, 0), f.covariance(i, 1), f.covariance(i, 2)});
    return {{"g_fit", f.g},          {"g_sigma", f.g_sigma()}, {"omega_res", f.omega_res}, {"visibility", f.visibility},
            {"covariance", cov},     {"covariance_order", "g, omega_res, visibility"},
            {"rms", f.rms},          {"iterations", f.iterations}, {"center_fixed", f.center_fixed},
            {"units", "GHz"}};
}

HilbertSpec spectrum_spec(const RunConfig& c) {
    if (c.model.scope == Scope::coupler_only)
        return c.model.basis == Basis::charge ? HilbertSpec::charge({Mode::c1, Mode::c2}, c.charge_cutoff)
                                              : HilbertSpec::coupler_fock(c.fock_levels);
    if (c.model.basis == Basis::charge) throw ConfigError("/model/basis: the charge basis needs scope 'coupler'");
    return c.spec;
}

// ---------------------------------------------------------------------------------------
// Subcommands.

void run_derive(const RunConfig& c, ArtifactWriter& w) {
    const CircuitParams& p = c.circuit;
    ojson j;
    j["circuit"] = circuit_json(p);
    j["derived"] = derived_json(derive_params(p, invert_flux(p, c.phi_e)));
    j["gL_max"] = derive_params(p, FluxPoint{0.0, 0.0}).gL;
    try {
        j["analytic"] = coupling_json(geff_analytic(p, invert_flux(p, c.phi_e), c.analytic));
    } catch (const PreconditionError&) {
        j["analytic"] = nullptr;
    }
    try {
        j["phi_e0_analytic"] = analytic_decoupling_flux(p);
    } catch (const PreconditionError&) {
        j["phi_e0_analytic"] = nullptr;
    }
    w.report("derive", j);
}

void run_hamiltonian(const RunConfig& c, ArtifactWriter& w) {
    const FluxPoint f = invert_flux(c.circuit, c.phi_e);
    const HilbertSpec spec = spectrum_spec(c);
    ModelSelector m = c.model;
    const LabeledSpectrum s = diagonalize(build(c.circuit, f, spec, m), c.sweep_count, f);
    Table t;
    std::vector<double> idx, e, ov, mixed;
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
        idx.push_back(static_cast<double>(i));
        e.push_back(s.eigenvalues(i));
        ov.push_back(s.overlaps[static_cast<std::size_t>(i)]);
        mixed.push_back(s.mixed[static_cast<std::size_t>(i)] ? 1.0 : 0.0);
    }
    t.add_text({"label", ""}, s.labels);
    t.add({"index", ""}, idx);
    t.add({"energy", "GHz"}, e);
    t.add({"overlap", ""}, ov);
    t.add({"mixed", ""}, mixed);
    w.table("spectrum", t);
}

void run_sweep(const RunConfig& c, ArtifactWriter& w) {
    SweepOptions so;
    so.count = c.sweep_count;
    so.threads = c.threads;
    const SweepResult r = sweep_flux(c.circuit, spectrum_spec(c), c.model, c.sweep.values, so);
    Table t;
    std::vector<double> phi12;
    for (const auto& s : r.spectra) phi12.push_back(s.flux.phi_e12);
    t.add({"phi_e", "Phi0"}, r.axis);
    t.add({"phi_e12", "Phi0"}, phi12);
    for (const std::string& label : r.spectra.front().labels) {
        std::vector<double> v;
        for (const auto& s : r.spectra) {
            const auto it = std::find(s.labels.begin(), s.labels.end(), label);
            v.push_back(it == s.labels.end() ? kNaN : s.eigenvalues(it - s.labels.begin()));
        }
        t.add({"E" + label, "GHz"}, v);
    }
    std::vector<double> cont{1.0}, disc{0.0};
    for (std::size_t i = 0; i < r.continuity.size(); ++i) {
        cont.push_back(r.continuity[i]);
        disc.push_back(r.discontinuous[i] ? 1.0 : 0.0);
    }
    t.add({"continuity", ""}, cont);
    t.add({"discontinuous", ""}, disc);
    w.table("sweep", t);
}

void run_analytic(const RunConfig& c, ArtifactWriter& w) {
    Table t;
    std::vector<std::vector<double>> cols(11);
    for (double phi : c.sweep.values) {
        cols[0].push_back(phi);
        try {
            const EffectiveCoupling e = geff_analytic(c.circuit, invert_flux(c.circuit, phi), c.analytic);
            for (auto [k, v] : {std::pair{1, e.g_co}, {2, e.g_counter}, {3, e.g_total_HO}, {4, e.g_total_anh},
                                {5, e.g_main_text}, {6, e.stark_a}, {7, e.stark_b}, {8, e.validity},
                                {9, e.omega_plus}, {10, e.omega_minus}})
                cols[static_cast<std::size_t>(k)].push_back(v);
        } catch (const PreconditionError&) {
            for (std::size_t k = 1; k < cols.size(); ++k) cols[k].push_back(kNaN);
        }
    }
    const char* names[] = {"phi_e", "g_co", "g_counter", "g_total_HO", "g_total_anh", "g_main_text",
                           "stark_a", "stark_b", "validity", "omega_plus", "omega_minus"};
    for (std::size_t k = 0; k < cols.size(); ++k)
        t.add({names[k], k == 0 ? "Phi0" : k == 8 ? "" : "GHz"}, cols[k]);
    w.table("analytic", t);
}

void run_geff(const RunConfig& c, ArtifactWriter& w) {
    const GeffExtractor ex(c.geff);
    const std::size_t n = c.sweep.values.size();
    std::vector<double> num(n, kNaN), anh(n, kNaN), ho(n, kNaN), val(n, kNaN), weight(n, kNaN), wb(n, kNaN);
    std::vector<std::string> status(n, "ok");
    parallel_for(n, c.threads, [&](std::size_t i) {
        const FluxPoint f = invert_flux(c.circuit, c.sweep.values[i]);
        try {
            const GeffResult g = ex(c.circuit, f);
            num[i] = g.two_g;
            val[i] = g.validity;
            weight[i] = g.weight;
            wb[i] = g.omega_b;
        } catch (const PreconditionError& e) {
            status[i] = "no extraction";
        }
        try {
            const EffectiveCoupling e = geff_analytic(c.circuit, f, c.analytic);
            anh[i] = 2.0 * e.g_total_anh;
            ho[i] = 2.0 * e.g_total_HO;
            val[i] = e.validity;
        } catch (const PreconditionError&) {
        }
    });
    Table t;
    t.add({"phi_e", "Phi0"}, c.sweep.values);
    t.add({"two_g_numeric", "GHz"}, num);
    t.add({"two_g_analytic_anh", "GHz"}, anh);
    t.add({"two_g_analytic_HO", "GHz"}, ho);
    t.add({"validity", ""}, val);
    t.add({"weight", ""}, weight);
    t.add({"omega_b", "GHz"}, wb);
    t.add_text({"status", ""}, status);
    w.table(c.geff.manifold == 1 ? "geff" : "geff_manifold2", t);
}

void run_decoupling(const RunConfig& c, ArtifactWriter& w) {
    const DecouplingResult r = find_decoupling_flux(c.circuit, GeffExtractor(c.geff), c.decoupling);
    ojson j;
    j["phi_e0"] = r.phi_e0;
    j["two_g_bracket"] = {r.two_g_lo, r.two_g_hi};
    j["evaluations"] = r.evaluations;
    try {
        j["phi_e0_analytic"] = analytic_decoupling_flux(c.circuit);
    } catch (const PreconditionError&) {
        j["phi_e0_analytic"] = nullptr;
    }
    j["units"] = {{"phi_e0", "Phi0"}, {"two_g_bracket", "GHz"}};
    w.report("decoupling", j);
}

void run_montecarlo(const RunConfig& c, ArtifactWriter& w) {
    const MonteCarloResult r = monte_carlo_disorder(c.circuit, c.geff, c.montecarlo);
    Table bands;
    bands.add({"phi_e", "Phi0"}, r.flux);
    bands.add({"two_g_mean", "GHz"}, r.mean_two_g);
    bands.add({"two_g_std", "GHz"}, r.std_two_g);
    w.table("montecarlo_bands", bands);
    Table draws;
    std::vector<double> idx;
    for (std::size_t i = 0; i < r.phi_e0.size(); ++i) idx.push_back(static_cast<double>(i));
    draws.add({"draw", ""}, idx);
    draws.add({"phi_e0", "Phi0"}, r.phi_e0);
    draws.add({"peak_abs_two_g", "GHz"}, r.peak_abs_two_g);
    w.table("montecarlo_draws", draws);
    ojson j;
    j["draws"] = c.montecarlo.n_draws;
    j["rel_sigma"] = c.montecarlo.rel_sigma;
    j["seed"] = c.montecarlo.seed;
    j["rejected"] = r.rejected;
    j["always_on"] = r.always_on;
    j["phi_e0_mean"] = r.phi_e0_mean;
    j["phi_e0_std"] = r.phi_e0_std;
    j["phi_e0_rel_std"] = r.phi_e0_rel_std();
    j["peak_mean"] = r.peak_mean;
    j["peak_std"] = r.peak_std;
    j["peak_rel_std"] = r.peak_rel_std();
    j["robustness_ratio"] = r.phi_e0_rel_std() > 0.0 ? r.peak_rel_std() / r.phi_e0_rel_std() : kNaN;
    j["units"] = {{"phi_e0", "Phi0"}, {"peak", "GHz"}};
    w.report("montecarlo", j);
}

ojson noise_json(const RunConfig& c) {
    const CircuitParams& p = c.circuit;
    const NoiseBudget b = noise_budget(p, c.phi_e, c.noise.coupler_T1_us, c.noise.gamma_bath);
    ojson j;
    j["inputs"] = {{"phi_e", c.phi_e},
                   {"M_pH", p.M_pH},
                   {"Z0_ohm", p.Z0_ohm},
                   {"sqrt_A_phi_micro", p.A_phi},
                   {"coupler_T1_us", c.noise.coupler_T1_us},
                   {"gamma_bath", c.noise.gamma_bath}};
    auto bias_json = [](const BiasLineRelaxation& r) {
        return ojson{{"formula", "2 hbar xi^2 M^2 w^3 / (Phi0^2 Z0)"},
                     {"gamma_1", r.gamma_1},
                     {"gamma_2", r.gamma_2},
                     {"gamma_plus", r.gamma_plus},
                     {"gamma_minus", r.gamma_minus},
                     {"gamma_bright", r.gamma_bright},
                     {"approx_1", r.approx_1},
                     {"approx_2", r.approx_2},
                     {"omega_plus_GHz", r.omega_plus},
                     {"omega_minus_GHz", r.omega_minus},
                     {"regime", r.regime}};
    };
    j["biasline"] = bias_json(b.biasline);
    if (c.noise.omega_override > 0.0) {
        j["biasline_at_override"] = bias_json(biasline_relaxation(p, b.flux, c.noise.omega_override));
        j["biasline_at_override"]["omega_override_GHz"] = c.noise.omega_override;
    }
    j["purcell"] = {{"formula", "beta-weighted two-channel; simple Gamma1 (g/Delta)^2"},
                    {"gamma_a", b.purcell.gamma_a},
                    {"gamma_b", b.purcell.gamma_b},
                    {"gamma_a_simple", b.purcell.gamma_a_simple},
                    {"gamma_b_simple", b.purcell.gamma_b_simple},
                    {"beta", b.purcell.beta},
                    {"validity", b.purcell.validity},
                    {"dispersive_warning", b.purcell.dispersive_warning}};
    j["dephasing"] = {{"formula", "sqrt(A_phi ln 2) |d omega / d Phi|"},
                      {"slope_plus_GHz_per_Phi0", b.dephasing.slope_plus},
                      {"slope_minus_GHz_per_Phi0", b.dephasing.slope_minus},
                      {"gamma_echo", b.dephasing.gamma_echo},
                      {"gamma_echo_sqrt_law_units", "s^-1/2 coefficient, same number"},
                      {"T_echo_us", b.dephasing.T_echo_us},
                      {"purcell_factor_a", b.dephasing.purcell_factor_a},
                      {"purcell_factor_b", b.dephasing.purcell_factor_b},
                      {"geff_factor", b.dephasing.geff_factor},
                      {"qubit_Tphi_us", b.dephasing.qubit_Tphi_us},
                      {"geff_Tphi_us", b.dephasing.geff_Tphi_us}};
    j["waveguide"] = {{"g_on_GHz", b.waveguide.g_on},
                      {"gamma_off", b.waveguide.gamma_off},
                      {"gamma_off_beta", b.waveguide.gamma_off_beta}};
    j["units"] = {{"rates", "1/s"}, {"times", "us"}};
    return j;
}

void run_noise(const RunConfig& c, ArtifactWriter& w) { w.report("noise", noise_json(c)); }

Table population_table(const EvolutionResult& r) {
    Table t;
    t.add({"t", "ns"}, r.times);
    for (std::size_t i = 0; i < r.labels.size(); ++i) t.add({"P" + r.labels[i], ""}, r.populations[i]);
    t.add({"leakage", ""}, r.leakage);
    t.add({"norm", ""}, r.norm);
    t.add({"energy", "GHz"}, r.energy);
    return t;
}

ojson evolution_summary(const EvolutionResult& r, const DriveProtocol& d) {
    ojson j;
    j["omega_d"] = d.omega_d;
    j["A"] = d.A;
    j["phi_offset"] = d.phi_offset;
    j["bias"] = d.bias == FluxBias::junction ? "junction" : "external";
    j["phi_static"] = r.phi_static;
    j["dimension"] = r.dimension;
    j["steps"] = r.steps;
    j["final_norm"] = r.final_norm;
    ojson fin;
    for (std::size_t i = 0; i < r.labels.size(); ++i) fin[r.labels[i]] = r.populations[i].back();
    fin["leakage"] = r.leakage.back();
    j["final_populations"] = fin;
    j["units"] = {{"omega_d", "GHz"}, {"A", "Phi0"}, {"flux", "Phi0"}};
    return j;
}

DriveProtocol resolved_drive(const RunConfig& c, const std::string& target) {
    DriveProtocol d = c.drive;
    if (d.omega_d <= 0.0) {
        const DriveEngine eng(c.circuit, d.A, d.phi_offset, d.bias, d.initial, c.evolve);
        d.omega_d = eng.resonance(d.initial, target);
    }
    return d;
}

void run_evolve(const RunConfig& c, ArtifactWriter& w) {
    const DriveProtocol d = resolved_drive(c, c.chevron.target);
    const EvolutionResult r = evolve(c.circuit, d, c.evolve);
    w.table("populations", population_table(r));
    ojson j = evolution_summary(r, d);
    const RectificationResult rec = rectification_probe(c.circuit, d);
    j["rectification"] = {{"shift_a", rec.shift_a}, {"shift_b", rec.shift_b}, {"g_eff_p", rec.g_eff_p},
                          {"ratio", rec.ratio},     {"validity", rec.validity}, {"pass", rec.pass}};
    w.report("evolve", j);
}

ChevronOptions chevron_options(const RunConfig& c) {
    ChevronOptions o;
    o.initial = c.chevron.initial;
    o.target = c.chevron.target;
    o.points = c.chevron.points;
    o.half_width = c.chevron.half_width;
    o.evolve = c.evolve;
    return o;
}

ojson scan_json(const std::vector<ParametricScanRow>& rows, std::size_t n_fit, const DriveProtocol& d) {
    ojson j;
    j["A"] = d.A;
    j["rows"] = ojson::array();
    for (const ParametricScanRow& r : rows) {
        ojson x{{"detuning", r.detuning},   {"g_fit", r.g_fit},           {"g_sigma", r.g_sigma},
                {"omega_res", r.omega_res}, {"resonance_guess", r.resonance_guess},
                {"visibility", r.visibility}, {"rms", r.rms},            {"g_eff_p", r.g_eff_p},
                {"g_eff_p_anh", r.g_eff_p_anh}, {"g_eff_p_corot", r.g_eff_p_corot}, {"flags", r.flags}};
        if (!r.error.empty()) x["error"] = r.error;
        j["rows"].push_back(x);
    }
    j["grid_points"] = n_fit;
    j["tolerances"] = {{"rtol", d.rtol}, {"atol", d.atol}};
    j["units"] = "GHz";
    return j;
}

void run_parametric_scan(const RunConfig& c, ArtifactWriter& w, const std::string& stem) {
    if (!c.parametric_design) throw ConfigError("/design: a detuning scan needs design.kind = parametric");
    const std::vector<ParametricScanRow> rows =
        parametric_scan(*c.parametric_design, c.chevron.detunings, c.drive, chevron_options(c), c.parametric);
    Table t;
    std::vector<double> det, g, s, wr, an, anh, co, flag;
    std::vector<std::string> err;
    for (const auto& r : rows) {
        det.push_back(r.detuning);
        g.push_back(r.error.empty() ? r.g_fit : kNaN);
        s.push_back(r.error.empty() ? r.g_sigma : kNaN);
        wr.push_back(r.error.empty() ? r.omega_res : kNaN);
        an.push_back(std::abs(r.g_eff_p));
        anh.push_back(std::abs(r.g_eff_p_anh));
        co.push_back(std::abs(r.g_eff_p_corot));
        flag.push_back(r.flagged() ? 1.0 : 0.0);
        err.push_back(r.error.empty() ? "ok" : "failed");
    }
    t.add({"detuning", "GHz"}, det);
    t.add({"g_fit", "GHz"}, g);
    t.add({"g_sigma", "GHz"}, s);
    t.add({"omega_res", "GHz"}, wr);
    t.add({"g_eff_p", "GHz"}, an);
    t.add({"g_eff_p_anh", "GHz"}, anh);
    t.add({"g_eff_p_corot", "GHz"}, co);
    t.add({"flagged", ""}, flag);
    t.add_text({"status", ""}, err);
    w.table(stem, t);
    w.report(stem, scan_json(rows, static_cast<std::size_t>(c.chevron.points), c.drive));
}

void run_chevron(const RunConfig& c, ArtifactWriter& w) {
    if (!c.chevron.detunings.empty()) {
        run_parametric_scan(c, w, "chevron_scan");
        return;
    }
    const ChevronResult r = chevron(c.circuit, c.drive, chevron_options(c));
    Table t;
    std::vector<double> wd, tt, P;
    for (std::size_t i = 0; i < r.data.omega_d.size(); ++i)
        for (std::size_t k = 0; k < r.data.times.size(); ++k) {
            wd.push_back(r.data.omega_d[i]);
            tt.push_back(r.data.times[k]);
            P.push_back(r.data.P[i][k]);
        }
    t.add({"omega_d", "GHz"}, wd);
    t.add({"t", "ns"}, tt);
    t.add({"P" + c.chevron.target, ""}, P);
    w.table("chevron_grid", t);
    ojson j = fit_json(r.fit);
    j["resonance_guess"] = r.resonance_guess;
    j["g_guess"] = r.g_guess;
    j["recenters"] = r.recenters;
    j["grid"] = r.data.omega_d;
    j["initial"] = c.chevron.initial;
    j["target"] = c.chevron.target;
    j["ramp_ns"] = c.drive.ramp_ns;
    j["t_eff"] = "integral of the envelope, t - ramp/2 after the ramp";
    j["tolerances"] = {{"rtol", c.drive.rtol}, {"atol", c.drive.atol}};
    w.report("chevron", j);
}

// ---------------------------------------------------------------------------------------
// Figure reproductions.

void reproduce_figA2(const RunConfig& c, ArtifactWriter& w) {
    const BasisComparison even = compare_bases(c.circuit, c.sweep.values, c.fock_levels, c.charge_cutoff, c.model.ho_order,
                                               false, c.threads);
    const BasisComparison odd = compare_bases(c.circuit, c.sweep.values, c.fock_levels, c.charge_cutoff, c.model.ho_order,
                                              true, c.threads);
    auto spectra = [&](const std::vector<std::vector<double>>& e) {
        Table t;
        t.add({"phi_e", "Phi0"}, c.sweep.values);
        for (int k = 0; k < even.levels; ++k) {
            std::vector<double> v;
            for (const auto& row : e) v.push_back(row[static_cast<std::size_t>(k)]);
            t.add({"E" + std::to_string(k + 1) + "-E0", "GHz"}, v);
        }
        return t;
    };
    w.table("spectra_charge", spectra(even.charge));
    w.table("spectra_ho", spectra(even.ho));
    w.table("spectra_ho_odd", spectra(odd.ho));
    ojson j;
    j["fock_levels"] = c.fock_levels;
    j["charge_window"] = c.charge_cutoff;
    j["points"] = c.sweep.values.size();
    j["tolerance_MHz"] = 1.0;
    auto rep = [](const BasisComparison& b) {
        return ojson{{"max_first_manifold_MHz", 1e3 * b.max_first},
                     {"max_second_manifold_MHz", 1e3 * b.max_second},
                     {"pass", b.max_first <= 1e-3 && b.max_second <= 1e-3}};
    };
    j["even_terms"] = rep(even);
    j["with_odd_terms"] = rep(odd);
    w.report("agreement", j);
}

void reproduce_fig2(const RunConfig& c, ArtifactWriter& w) {
    run_derive(c, w);
    run_sweep(c, w);
    run_analytic(c, w);
    run_geff(c, w);
    run_decoupling(c, w);
    run_noise(c, w);
    if (c.source.contains("montecarlo")) run_montecarlo(c, w);
}

void reproduce_fig4d(const RunConfig& c, ArtifactWriter& w) {
    if (!c.parametric_design) throw ConfigError("/design: fig4d needs design.kind = parametric");
    ojson j = ojson::array();
    for (double det : c.chevron.detunings) {
        ParametricDesign t = *c.parametric_design;
        t.detuning = det;
        const CircuitParams p = design_parametric(t);
        DriveProtocol d = c.drive;
        const DriveEngine eng(p, d.A, d.phi_offset, d.bias, c.chevron.initial, c.evolve);
        d.omega_d = eng.resonance(c.chevron.initial, c.chevron.target);
        d.initial = c.chevron.initial;
        const EvolutionResult r = eng.evolve(d);
        char stem[64];
        std::snprintf(stem, sizeof stem, "populations_det%.2f", det);
        w.table(stem, population_table(r));
        ChevronData data;
        data.omega_d = {d.omega_d};
        data.times = r.times;
        data.ramp_ns = d.ramp_ns;
        data.P = {r.population(c.evolve.spec.label(c.evolve.spec.parse_label(c.chevron.target)))};
        ParametricOptions po = c.parametric;
        po.phi_offset = d.phi_offset;
        const RotatingFrameParams rf = geff_parametric(p, d.A, d.omega_d, po);
        ojson x = evolution_summary(r, d);
        x["detuning"] = det;
        x["g_eff_p"] = std::abs(rf.g_eff_p);
        x["g_eff_p_corot"] = std::abs(rf.g_eff_p_corot);
        x["swap_period_analytic_ns"] = 1.0 / (2.0 * std::abs(rf.g_eff_p));
        try {
            const ChevronFit f = fit_chevron(data, rf.g_eff_p_corot, d.omega_d, true);
            x["g_fit"] = f.g;
            x["swap_period_fit_ns"] = 1.0 / (2.0 * f.g);
            x["fit_rms"] = f.rms;
        } catch (const NumericalError& e) {
            x["fit_error"] = e.what();
        }
        j.push_back(x);
    }
    w.report("fig4d", j);
}

void reproduce(const std::string& fig, const RunConfig& c, ArtifactWriter& w) {
    if (fig == "figA2") {
        reproduce_figA2(c, w);
    } else if (fig == "fig2a" || fig == "fig2b") {
        reproduce_fig2(c, w);
    } else if (fig == "fig4c") {
        run_parametric_scan(c, w, "fig4c");
    } else if (fig == "fig4d") {
        reproduce_fig4d(c, w);
    }
}

std::string bundled_config(const std::string& fig) {
    const char* env = std::getenv("DTC_CONFIGS");
    const std::filesystem::path dir = env && *env ? env : DTC_CONFIG_DIR;
    return (dir / (fig + ".json")).string();
}

int fail(const char* kind, int code, const std::string& message) {
    ojson j{{"error", kind}, {"exit_code", code}, {"message", message}};
    std::cerr << j.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Double-transmon coupler toolkit"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    Common common;
    std::string figure;

    using Runner = void (*)(const RunConfig&, ArtifactWriter&);
    const std::vector<std::tuple<std::string, std::string, Runner>> commands = {
        {"derive", "Derived circuit parameters at flux.phi_e", run_derive},
        {"hamiltonian", "Labeled spectrum at flux.phi_e", run_hamiltonian},
        {"sweep-flux", "Tracked spectrum over the sweep axis", run_sweep},
        {"geff", "Numerical and analytic 2 g_eff over the sweep axis", run_geff},
        {"decoupling", "Decoupling flux from the numerical g_eff", run_decoupling},
        {"montecarlo", "Junction-disorder Monte Carlo of g_eff and the decoupling flux", run_montecarlo},
        {"analytic", "Second-order analytic couplings and Stark shifts over the sweep axis", run_analytic},
        {"evolve", "Driven time evolution", run_evolve},
        {"chevron", "Chevron scan and fit (a detuning scan with chevron.detunings)", run_chevron},
        {"noise-budget", "Relaxation and dephasing budget at flux.phi_e", run_noise},
    };
    std::map<CLI::App*, Runner> runners;
    for (const auto& [name, help, fn] : commands) {
        CLI::App* s = app.add_subcommand(name, help);
        add_common(s, common);
        runners[s] = fn;
    }
    CLI::App* rep = app.add_subcommand("reproduce", "Run a bundled figure recipe");
    rep->add_option("figure", figure, "Figure")->required()->check(CLI::IsMember({"fig2a", "fig2b", "fig4c", "fig4d", "figA2"}));
    add_common(rep, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("config", 2, e.what());
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        CLI::App* sub = app.get_subcommands().front();
        const bool is_rep = sub == rep;
        const std::string path = is_rep && common.config.empty() ? bundled_config(figure) : common.config;
        RunConfig cfg = load(common, path);
        if (is_rep && common.output.empty() && !cfg.source.contains("output")) cfg.output_dir = "out/" + figure;
        ArtifactWriter w(cfg.output_dir, cfg.format);
        if (is_rep) {
            reproduce(figure, cfg, w);
        } else {
            runners.at(sub)(cfg, w);
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        w.manifest(is_rep ? "reproduce " + figure : sub->get_name(), cfg.source, cfg.seed, {path}, wall);
        std::cout << ojson{{"status", "ok"}, {"output", cfg.output_dir}, {"artifacts", w.artifacts().size()}}.dump() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        return fail("config", 2, e.what());
    } catch (const DomainError& e) {
        return fail("config", 2, e.what());
    } catch (const NumericalError& e) {
        return fail("numerical", 3, e.what());
    } catch (const PreconditionError& e) {
        return fail("precondition", 4, e.what());
    } catch (const std::exception& e) {
        return fail("internal", 1, e.what());
    }
}
