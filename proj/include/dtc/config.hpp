// config.hpp: run configuration: JSON with // and /* */ comments, a versioned schema,
// unknown keys rejected with their location, and dotted-path overrides (--set key=value).
// configs/schema.json is the published JSON-schema equivalent of the checks below.

#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtc/circuit.hpp"
#include "dtc/dynamics.hpp"
#include "dtc/errors.hpp"
#include "dtc/fock.hpp"
#include "dtc/hamiltonian.hpp"
#include "dtc/presets.hpp"
#include "dtc/spectrum.hpp"

namespace dtc {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct FluxAxis {
    std::vector<double> values;  // phi_e, Phi0
};

struct NoiseSettings {
    double coupler_T1_us = 20.0;
    double gamma_bath = 1e8;  // 1/s
    double omega_override = 0.0;  // GHz, 0: mode frequencies
};

struct ChevronSettings {
    int points = 11;
    double half_width = 0.0;
    std::vector<double> detunings;  // parametric design detunings, GHz
    std::string initial = "|1000>";
    std::string target = "|0001>";
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    CircuitParams circuit;
    std::optional<StaticDesign> static_design;
    std::optional<ParametricDesign> parametric_design;
    ModelSelector model;
    HilbertSpec spec = HilbertSpec::full_fock();
    int charge_cutoff = 14;
    int fock_levels = 8;  // coupler-only HO comparisons
    double phi_e = 0.0;
    FluxAxis sweep;
    int sweep_count = 10;
    GeffOptions geff;
    DecouplingOptions decoupling;
    MonteCarloOptions montecarlo;
    AnalyticOptions analytic;
    ParametricOptions parametric;
    DriveProtocol drive;
    EvolveOptions evolve;
    ChevronSettings chevron;
    NoiseSettings noise;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string output_dir = "out";
    std::string format = "csv";
    json source;  // the validated document, after overrides
};

namespace detail {

/// Reads a document while recording which keys were consumed; leftovers are unknown keys.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    std::string where(const std::string& key = "") const {
        return path_.empty() ? "/" + key : path_ + (key.empty() ? "" : "/" + key);
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    T get(const std::string& key, T fallback) {
        used_.insert(key);
        if (!j_.contains(key)) return fallback;
        return convert<T>(j_.at(key), where(key));
    }

    template <typename T>
    T require(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) throw ConfigError(where(key) + ": required key is missing");
        return convert<T>(j_.at(key), where(key));
    }

    std::optional<Reader> section(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        return Reader(j_.at(key), where(key));
    }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    /// Throws on keys that were never read.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
    }

    template <typename T>
    static T convert(const json& v, const std::string& at) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(at + ": expected a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(at + ": expected an integer");
            return v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(at + ": expected a number");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(at + ": expected a string");
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!v.is_array()) throw ConfigError(at + ": expected an array of numbers");
            std::vector<double> out;
            for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<double>(v[i], at + "/" + std::to_string(i)));
            return out;
        } else if constexpr (std::is_same_v<T, std::vector<int>>) {
            if (!v.is_array()) throw ConfigError(at + ": expected an array of integers");
            std::vector<int> out;
            for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<int>(v[i], at + "/" + std::to_string(i)));
            return out;
        } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            if (!v.is_array()) throw ConfigError(at + ": expected an array of strings");
            std::vector<std::string> out;
            for (std::size_t i = 0; i < v.size(); ++i)
                out.push_back(convert<std::string>(v[i], at + "/" + std::to_string(i)));
            return out;
        } else {
            static_assert(sizeof(T) == 0, "unsupported config type");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

inline std::vector<double> read_axis(Reader r) {
    std::vector<double> out;
    if (r.has("values")) {
        out = r.require<std::vector<double>>("values");
        if (out.empty()) throw ConfigError(r.where("values") + ": sweep axis is empty");
        if (r.has("start") || r.has("stop") || r.has("points"))
            throw ConfigError(r.where() + ": give either 'values' or start/stop/points");
        r.finish();
    } else {
        const double start = r.require<double>("start");
        const double stop = r.require<double>("stop");
        const int points = r.require<int>("points");
        r.finish();
        if (points < 1) throw ConfigError(r.where("points") + ": a sweep axis needs at least one point");
        for (int i = 0; i < points; ++i) out.push_back(points == 1 ? start : start + (stop - start) * i / (points - 1));
    }
    if (out.empty()) throw ConfigError(r.where() + ": sweep axis is empty");
    return out;
}

inline HilbertSpec read_dims(const std::vector<int>& dims, const std::string& at, std::size_t cap) {
    if (dims.size() != 4) throw ConfigError(at + ": expected four truncations (a, 1, 2, b)");
    for (int d : dims)
        if (d < 2) throw ConfigError(at + ": every truncation must be at least 2");
    HilbertSpec s;
    s.modes = {Mode::a, Mode::c1, Mode::c2, Mode::b};
    s.dims = dims;
    s.kinds.assign(4, BasisKind::fock);
    s.cap = cap;
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ConfigError(at + ": " + e.what());
    }
    return s;
}

inline StaticDesign read_static_design(Reader r) {
    StaticDesign t;
    t.E1 = r.get("E1", t.E1);
    t.E2 = r.get("E2", t.E2);
    t.E12 = r.get("E12", t.E12);
    t.gL_max = r.get("gL_max", t.gL_max);
    t.g = r.get("g", t.g);
    t.omega_q = r.get("omega_q", t.omega_q);
    t.C12 = r.get("C12", t.C12);
    t.C_qubit = r.get("C_qubit", t.C_qubit);
    r.finish();
    return t;
}

inline ParametricDesign read_parametric_design(Reader r) {
    ParametricDesign t;
    t.omega_a = r.get("omega_a", t.omega_a);
    t.omega_1 = r.get("omega_1", t.omega_1);
    t.omega_2p = r.get("omega_2p", t.omega_2p);
    t.detuning = r.get("detuning", t.detuning);
    t.g = r.get("g", t.g);
    t.gC = r.get("gC", t.gC);
    t.gL_max = r.get("gL_max", t.gL_max);
    t.offset = r.get("offset", t.offset);
    t.C_qubit = r.get("C_qubit", t.C_qubit);
    t.C_coupler = r.get("C_coupler", t.C_coupler);
    r.finish();
    return t;
}

inline CircuitParams read_circuit(Reader r) {
    CircuitParams p;
    p.E1 = r.require<double>("E1");
    p.E2 = r.require<double>("E2");
    p.E12 = r.require<double>("E12");
    p.Ea = r.require<double>("Ea");
    p.Eb = r.require<double>("Eb");
    const bool branch = r.has("capacitance"), matrix = r.has("Cmat");
    if (branch == matrix) throw ConfigError(r.where() + ": give exactly one of 'capacitance' (branches) or 'Cmat'");
    if (branch) {
        auto c = *r.section("capacitance");
        BranchCapacitances b;
        b.Ca = c.require<double>("Ca");
        b.C1 = c.require<double>("C1");
        b.C2 = c.require<double>("C2");
        b.Cb = c.require<double>("Cb");
        b.Ca1 = c.require<double>("Ca1");
        b.C12 = c.require<double>("C12");
        b.Cb2 = c.require<double>("Cb2");
        c.finish();
        p.set_branches(b);
    } else {
        const json& m = r.raw("Cmat");
        const std::string at = r.where("Cmat");
        if (!m.is_array() || m.size() != 4) throw ConfigError(at + ": expected a 4x4 array");
        for (int i = 0; i < 4; ++i) {
            if (!m[i].is_array() || m[i].size() != 4) throw ConfigError(at + "/" + std::to_string(i) + ": expected 4 entries");
            for (int k = 0; k < 4; ++k)
                p.Cmat(i, k) = Reader::convert<double>(m[i][k], at + "/" + std::to_string(i) + "/" + std::to_string(k));
        }
    }
    p.M_pH = r.get("M_pH", p.M_pH);
    p.Z0_ohm = r.get("Z0_ohm", p.Z0_ohm);
    p.A_phi = r.get("A_phi", p.A_phi);
    r.finish();
    return p;
}

template <typename E>
E read_enum(Reader& r, const std::string& key, E fallback, const std::map<std::string, E>& names) {
    if (!r.has(key)) {
        r.get<std::string>(key, "");
        return fallback;
    }
    const std::string v = r.require<std::string>(key);
    const auto it = names.find(v);
    if (it == names.end()) {
        std::string allowed;
        for (const auto& [k, _] : names) allowed += (allowed.empty() ? "" : ", ") + k;
        throw ConfigError(r.where(key) + ": '" + v + "' is not one of " + allowed);
    }
    return it->second;
}

}  // namespace detail

/// Parses "a.b.c=value" and writes value (JSON when it parses, else a string) into doc.
inline void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

inline json parse_config_text(const std::string& text, const std::string& origin = "config") {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

/// Validates a document and builds the run configuration (design solvers run here).
inline RunConfig config_from_json(const json& doc) {
    RunConfig c;
    c.source = doc;
    detail::Reader root(doc, "");
    c.schema_version = root.require<int>("schema_version");
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("/schema_version: unsupported version " + std::to_string(c.schema_version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");

    const bool has_circuit = root.has("circuit"), has_design = root.has("design");
    if (has_circuit == has_design) throw ConfigError("/: give exactly one of 'circuit' or 'design'");
    if (has_circuit) {
        c.circuit = detail::read_circuit(*root.section("circuit"));
    } else {
        auto d = *root.section("design");
        const std::string kind = d.require<std::string>("kind");
        if (kind == "static") {
            auto t = d.section("targets");
            c.static_design = t ? detail::read_static_design(*t) : StaticDesign{};
        } else if (kind == "parametric") {
            auto t = d.section("targets");
            c.parametric_design = t ? detail::read_parametric_design(*t) : ParametricDesign{};
        } else if (kind == "figA2") {
            d.section("targets");
        } else {
            throw ConfigError(d.where("kind") + ": '" + kind + "' is not one of static, parametric, figA2");
        }
        auto extra = d.section("circuit_extras");
        d.finish();
        try {
            c.circuit = c.static_design       ? design_static(*c.static_design)
                        : c.parametric_design ? design_parametric(*c.parametric_design)
                                              : preset_figA2();
        } catch (const NumericalError& e) {
            throw ConfigError(std::string("/design: design solver failed: ") + e.what());
        }
        if (extra) {
            c.circuit.M_pH = extra->get("M_pH", c.circuit.M_pH);
            c.circuit.Z0_ohm = extra->get("Z0_ohm", c.circuit.Z0_ohm);
            c.circuit.A_phi = extra->get("A_phi", c.circuit.A_phi);
            extra->finish();
        }
    }
    try {
        c.circuit.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string(has_circuit ? "/circuit: " : "/design: ") + e.what());
    }

    if (auto m = root.section("model")) {
        c.model.scope = detail::read_enum(*m, "scope", Scope::full_chain,
                                          {{"full", Scope::full_chain}, {"coupler", Scope::coupler_only}});
        c.model.basis = detail::read_enum(*m, "basis", Basis::harmonic_oscillator,
                                          {{"ho", Basis::harmonic_oscillator}, {"charge", Basis::charge}});
        c.model.ho_order = m->get("ho_order", c.model.ho_order);
        c.model.odd_terms = m->get("odd_terms", c.model.odd_terms);
        m->finish();
        if (c.model.ho_order != 2 && c.model.ho_order != 4 && c.model.ho_order != 6)
            throw ConfigError("/model/ho_order: must be 2, 4 or 6");
    }
    std::size_t cap = 20000;
    std::vector<int> dims{5, 6, 6, 5};
    if (auto t = root.section("truncation")) {
        cap = static_cast<std::size_t>(t->get("cap", 20000));
        dims = t->get("dims", dims);
        c.charge_cutoff = t->get("charge_cutoff", c.charge_cutoff);
        c.fock_levels = t->get("fock_levels", c.fock_levels);
        t->finish();
        if (c.charge_cutoff < 1) throw ConfigError("/truncation/charge_cutoff: must be at least 1");
        if (c.fock_levels < 2) throw ConfigError("/truncation/fock_levels: must be at least 2");
    }
    c.spec = detail::read_dims(dims, "/truncation/dims", cap);

    if (auto f = root.section("flux")) {
        c.phi_e = f->get("phi_e", c.phi_e);
        f->finish();
    }
    if (auto s = root.section("sweep")) {
        if (auto ax = s->section("phi_e")) c.sweep.values = detail::read_axis(*ax);
        c.sweep_count = s->get("count", c.sweep_count);
        s->finish();
        if (c.sweep_count < 1) throw ConfigError("/sweep/count: must be positive");
    }
    if (c.sweep.values.empty())
        for (int i = 0; i <= 40; ++i) c.sweep.values.push_back(0.5 * i / 40.0);

    c.geff.spec = c.spec;
    c.geff.ho_order = c.model.ho_order;
    if (auto g = root.section("geff")) {
        c.geff.manifold = g->get("manifold", c.geff.manifold);
        c.geff.window_factor = g->get("window_factor", c.geff.window_factor);
        c.geff.min_window = g->get("min_window", c.geff.min_window);
        c.geff.warn_validity = g->get("warn_validity", c.geff.warn_validity);
        g->finish();
        if (c.geff.manifold != 1 && c.geff.manifold != 2) throw ConfigError("/geff/manifold: must be 1 or 2");
    }
    if (auto d = root.section("decoupling")) {
        c.decoupling.lo = d->get("lo", c.decoupling.lo);
        c.decoupling.hi = d->get("hi", c.decoupling.hi);
        c.decoupling.scan_points = d->get("scan_points", c.decoupling.scan_points);
        c.decoupling.tol = d->get("tol", c.decoupling.tol);
        d->finish();
        if (c.decoupling.scan_points < 2) throw ConfigError("/decoupling/scan_points: must be at least 2");
    }
    c.seed = root.get<std::uint64_t>("seed", c.seed);
    c.threads = root.get("threads", c.threads);
    c.montecarlo.flux = c.sweep.values;
    if (auto m = root.section("montecarlo")) {
        c.montecarlo.n_draws = m->get("draws", c.montecarlo.n_draws);
        c.montecarlo.rel_sigma = m->get("rel_sigma", c.montecarlo.rel_sigma);
        if (auto ax = m->section("phi_e")) c.montecarlo.flux = detail::read_axis(*ax);
        m->finish();
        if (c.montecarlo.n_draws < 1) throw ConfigError("/montecarlo/draws: must be positive");
        if (!(c.montecarlo.rel_sigma >= 0.0)) throw ConfigError("/montecarlo/rel_sigma: must be non-negative");
    }
    c.montecarlo.seed = c.seed;
    c.montecarlo.decoupling = c.decoupling;
    c.montecarlo.threads = c.threads;

    if (auto a = root.section("analytic")) {
        c.analytic.main_text_counter_sign = a->get("main_text_counter_sign", c.analytic.main_text_counter_sign);
        c.analytic.literal_gl_prime = a->get("literal_gl_prime", c.analytic.literal_gl_prime);
        c.parametric.appendix_half = a->get("appendix_half", c.parametric.appendix_half);
        c.parametric.degeneracy_window = a->get("degeneracy_window", c.parametric.degeneracy_window);
        a->finish();
    }
    c.parametric.analytic = c.analytic;

    std::vector<int> ddims{4, 5, 5, 4};
    if (auto d = root.section("drive")) {
        c.drive.A = d->get("A", c.drive.A);
        c.drive.omega_d = d->get("omega_d", c.drive.omega_d);
        c.drive.phi_offset = d->get("phi_offset", c.drive.phi_offset);
        c.drive.bias = detail::read_enum(*d, "bias", FluxBias::junction,
                                         {{"junction", FluxBias::junction}, {"external", FluxBias::external}});
        c.drive.ramp_ns = d->get("ramp_ns", c.drive.ramp_ns);
        c.drive.hold_ns = d->get("hold_ns", c.drive.hold_ns);
        c.drive.dt_max = d->get("dt_max", c.drive.dt_max);
        c.drive.rtol = d->get("rtol", c.drive.rtol);
        c.drive.atol = d->get("atol", c.drive.atol);
        c.drive.sample_ns = d->get("sample_ns", c.drive.sample_ns);
        c.drive.initial = d->get("initial", c.drive.initial);
        ddims = d->get("dims", ddims);
        c.evolve.basis = detail::read_enum(*d, "basis", EvolutionBasis::dressed,
                                           {{"dressed", EvolutionBasis::dressed}, {"bare", EvolutionBasis::bare_sector}});
        c.evolve.dressed_states = d->get("dressed_states", c.evolve.dressed_states);
        c.evolve.spline_knots = d->get("spline_knots", c.evolve.spline_knots);
        c.evolve.inductive_only = d->get("inductive_only", c.evolve.inductive_only);
        c.evolve.tracked = d->get("tracked", c.evolve.tracked);
        d->finish();
        try {
            c.drive.validate();
        } catch (const DomainError& e) {
            throw ConfigError(std::string("/drive: ") + e.what());
        }
    }
    c.evolve.spec = detail::read_dims(ddims, "/drive/dims", cap);
    c.evolve.ho_order = c.model.ho_order;
    c.evolve.threads = c.threads;
    c.parametric.phi_offset = c.drive.phi_offset;
    try {
        c.evolve.spec.parse_label(c.drive.initial);
        for (const std::string& l : c.evolve.tracked) c.evolve.spec.parse_label(l);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("/drive: ") + e.what());
    }

    if (auto ch = root.section("chevron")) {
        c.chevron.points = ch->get("points", c.chevron.points);
        c.chevron.half_width = ch->get("half_width", c.chevron.half_width);
        c.chevron.detunings = ch->get("detunings", c.chevron.detunings);
        c.chevron.initial = ch->get("initial", c.chevron.initial);
        c.chevron.target = ch->get("target", c.chevron.target);
        ch->finish();
        if (c.chevron.points < 1) throw ConfigError("/chevron/points: must be positive");
    }
    if (auto n = root.section("noise")) {
        c.noise.coupler_T1_us = n->get("coupler_T1_us", c.noise.coupler_T1_us);
        c.noise.gamma_bath = n->get("gamma_bath", c.noise.gamma_bath);
        c.noise.omega_override = n->get("omega_override", c.noise.omega_override);
        n->finish();
    }
    if (auto o = root.section("output")) {
        c.output_dir = o->get("directory", c.output_dir);
        c.format = o->get("format", c.format);
        o->finish();
        if (c.format != "csv" && c.format != "json") throw ConfigError("/output/format: must be csv or json");
    }
    root.get<std::string>("description", "");
    root.finish();
    return c;
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    json doc = parse_config_text(ss.str(), path);
    for (const std::string& o : overrides) apply_override(doc, o);
    return config_from_json(doc);
}

}  // namespace dtc
