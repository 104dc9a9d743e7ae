// spectrum.hpp: diagonalization with bare-state labels, continuity-tracked sweeps, numerical
// effective-coupling extraction, decoupling-flux root finding and junction-disorder Monte Carlo.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <Eigen/Dense>

#include "dtc/analytics.hpp"
#include "dtc/circuit.hpp"
#include "dtc/eigen_solver.hpp"
#include "dtc/errors.hpp"
#include "dtc/fock.hpp"
#include "dtc/hamiltonian.hpp"
#include "dtc/parallel.hpp"

namespace dtc {

/// Eigenpairs with a bare product-state label per eigenvector.
struct LabeledSpectrum {
    FluxPoint flux;
    Eigen::VectorXd eigenvalues;           // GHz, ascending
    std::vector<std::string> labels;
    std::vector<std::size_t> label_index;  // basis index of the label
    std::vector<double> overlaps;          // |<label|state>|^2
    std::vector<bool> mixed;               // overlap <= 0.5: no dominant bare state
    Eigen::MatrixXcd vectors;              // columns; may be empty

    /// Energy of the eigenvector carrying `label`; throws when the label is absent.
    double energy(const std::string& label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return eigenvalues(static_cast<Eigen::Index>(i));
        throw DomainError("label " + label + " is not in the spectrum");
    }
};

// rounding slack keeps an exactly even two-state superposition classified as mixed
inline constexpr double kMixedThreshold = 0.5 + 1e-12;

namespace detail {

/// Greedy assignment of columns to rows by descending weight; weights(r, c).
/// Returns for every column its row, or -1 when rows run out.
inline std::vector<Eigen::Index> greedy_assign(const Eigen::MatrixXd& weights, int candidates_per_col = 12) {
    struct Cand {
        double w;
        Eigen::Index row, col;
    };
    std::vector<Cand> cands;
    const Eigen::Index rows = weights.rows(), cols = weights.cols();
    const int keep = static_cast<int>(std::min<Eigen::Index>(candidates_per_col, rows));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) order[static_cast<std::size_t>(r)] = r;
        std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                          [&](Eigen::Index x, Eigen::Index y) { return weights(x, c) > weights(y, c); });
        for (int k = 0; k < keep; ++k) cands.push_back({weights(order[k], c), order[k], c});
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.w > y.w; });
    std::vector<Eigen::Index> col_row(static_cast<std::size_t>(cols), -1);
    std::vector<bool> row_used(static_cast<std::size_t>(rows), false);
    for (const Cand& c : cands) {
        if (col_row[static_cast<std::size_t>(c.col)] >= 0 || row_used[static_cast<std::size_t>(c.row)]) continue;
        col_row[static_cast<std::size_t>(c.col)] = c.row;
        row_used[static_cast<std::size_t>(c.row)] = true;
    }
    // columns left over (all their candidate rows taken) fall back to the best free row
    for (Eigen::Index c = 0; c < cols; ++c) {
        if (col_row[static_cast<std::size_t>(c)] >= 0) continue;
        Eigen::Index best = -1;
        for (Eigen::Index r = 0; r < rows; ++r)
            if (!row_used[static_cast<std::size_t>(r)] && (best < 0 || weights(r, c) > weights(best, c))) best = r;
        if (best >= 0) {
            col_row[static_cast<std::size_t>(c)] = best;
            row_used[static_cast<std::size_t>(best)] = true;
        }
    }
    return col_row;
}

inline void fill_labels(LabeledSpectrum& s, const HilbertSpec& spec, const std::vector<std::size_t>& index) {
    const auto n = static_cast<std::size_t>(s.eigenvalues.size());
    s.label_index = index;
    s.labels.resize(n);
    s.overlaps.resize(n);
    s.mixed.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.labels[i] = spec.label(index[i]);
        s.overlaps[i] = std::norm(s.vectors(static_cast<Eigen::Index>(index[i]), static_cast<Eigen::Index>(i)));
        s.mixed[i] = s.overlaps[i] <= kMixedThreshold;
    }
}

}  // namespace detail

/// Lowest `count` eigenpairs (all when count <= 0), labeled by maximum bare-state overlap
/// with greedy conflict resolution by descending overlap.
inline LabeledSpectrum diagonalize(const HamiltonianMatrix& h, int count = -1, FluxPoint flux = {}) {
    LabeledSpectrum s;
    s.flux = flux;
    if (h.is_real(1e-14)) {
        EigenSystem<double> es = eigh(Eigen::MatrixXd(h.data.real()), count);
        s.eigenvalues = es.values;
        s.vectors = es.vectors.cast<cplx>();
    } else {
        EigenSystem<cplx> es = eigh(h.data, count);
        s.eigenvalues = es.values;
        s.vectors = std::move(es.vectors);
    }
    const std::vector<Eigen::Index> rows = detail::greedy_assign(s.vectors.cwiseAbs2());
    std::vector<std::size_t> index(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) index[i] = static_cast<std::size_t>(rows[i]);
    detail::fill_labels(s, h.spec, index);
    return s;
}

// ---------------------------------------------------------------------------------------
// Sweeps with adiabatic label continuation.

struct SweepOptions {
    int count = 10;          // tracked states
    int margin = 4;          // extra eigenpairs computed so tracked states can move
    int refine_cap = 6;      // bisection depth per step
    double min_overlap = 0.5;
    double degenerate_tol = 1e-7;  // GHz; clusters tracked as a subspace
    int threads = 0;
    bool keep_vectors = false;
};

struct SweepResult {
    std::string axis_name;
    std::vector<double> axis;
    std::vector<LabeledSpectrum> spectra;
    std::vector<double> continuity;    // per step: smallest tracked overlap with the previous step
    std::vector<int> refinements;      // per step: inserted points
    std::vector<bool> discontinuous;   // per step: refine cap hit

    /// Energies of one tracked label across the axis.
    std::vector<double> trace(const std::string& label) const {
        std::vector<double> out;
        out.reserve(spectra.size());
        for (const auto& s : spectra) out.push_back(s.energy(label));
        return out;
    }
    bool any_discontinuity() const { return std::find(discontinuous.begin(), discontinuous.end(), true) != discontinuous.end(); }
};

using SpectrumBuilder = std::function<HamiltonianMatrix(double)>;

namespace detail {

struct TrackStep {
    LabeledSpectrum next;
    double continuity = 1.0;
};

/// Assigns the labels of `prev` to the eigenvectors of `raw` by state overlap. Nearly degenerate
/// target states are scored by their cluster projection so arbitrary rotations inside an exactly
/// degenerate subspace do not count as discontinuities.
inline TrackStep continue_labels(const LabeledSpectrum& prev, const LabeledSpectrum& raw, const HilbertSpec& spec,
                                 int tracked, double degenerate_tol) {
    const Eigen::MatrixXd w = (prev.vectors.adjoint() * raw.vectors).cwiseAbs2();  // prev x raw
    // rows: raw states, cols: previous states
    const std::vector<Eigen::Index> assign = greedy_assign(w.transpose());
    TrackStep step;
    const auto n_raw = raw.eigenvalues.size();
    std::vector<std::size_t> index(static_cast<std::size_t>(n_raw), 0);
    std::vector<bool> taken(static_cast<std::size_t>(n_raw), false);
    for (std::size_t c = 0; c < assign.size(); ++c) {
        const Eigen::Index r = assign[c];
        if (r < 0) continue;
        index[static_cast<std::size_t>(r)] = prev.label_index[c];
        taken[static_cast<std::size_t>(r)] = true;
        if (static_cast<int>(c) < tracked) {
            double score = 0.0;
            for (Eigen::Index k = 0; k < n_raw; ++k)
                if (std::abs(raw.eigenvalues(k) - raw.eigenvalues(r)) <= degenerate_tol) score += w(static_cast<Eigen::Index>(c), k);
            step.continuity = std::min(step.continuity, score);
        }
    }
    // raw states no previous state maps to get a bare label not used elsewhere
    std::vector<bool> used(spec.total(), false);
    for (std::size_t r = 0; r < index.size(); ++r)
        if (taken[r]) used[index[r]] = true;
    for (std::size_t r = 0; r < index.size(); ++r) {
        if (taken[r]) continue;
        Eigen::Index best = -1;
        for (Eigen::Index b = 0; b < raw.vectors.rows(); ++b)
            if (!used[static_cast<std::size_t>(b)] &&
                (best < 0 || std::norm(raw.vectors(b, static_cast<Eigen::Index>(r))) > std::norm(raw.vectors(best, static_cast<Eigen::Index>(r)))))
                best = b;
        index[r] = static_cast<std::size_t>(best);
        used[static_cast<std::size_t>(best)] = true;
    }
    step.next = raw;
    fill_labels(step.next, spec, index);
    return step;
}

}  // namespace detail

/// Diagonalizes builder(x) at every axis value and carries labels from point to point by
/// eigenvector overlap, starting from bare labels at the first point. Steps whose tracked
/// overlap drops below min_overlap are bisected up to refine_cap levels. The diagonalizations
/// at the requested axis points run in parallel; tracking is sequential.
inline SweepResult sweep(const SpectrumBuilder& builder, const std::vector<double>& axis, const SweepOptions& opt = {},
                         std::string axis_name = "phi_e") {
    if (axis.empty()) throw DomainError("sweep axis is empty");
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (!(axis[i] > axis[i - 1])) throw DomainError("sweep axis must be strictly increasing");
    const int want = opt.count > 0 ? opt.count + opt.margin : -1;
    SweepResult out;
    out.axis_name = std::move(axis_name);
    out.axis = axis;
    std::vector<LabeledSpectrum> raw(axis.size());
    HilbertSpec spec;
    parallel_for(axis.size(), opt.threads, [&](std::size_t i) {
        const HamiltonianMatrix h = builder(axis[i]);
        raw[i] = diagonalize(h, want);
        if (i == 0) spec = h.spec;
    });
    const int tracked = opt.count > 0 ? opt.count : static_cast<int>(raw[0].eigenvalues.size());
    out.spectra.push_back(raw[0]);
    for (std::size_t i = 1; i < axis.size(); ++i) {
        int inserted = 0;
        double worst = 1.0;
        bool broken = false;
        // recursive bisection between the last tracked spectrum and the next axis point
        std::function<LabeledSpectrum(const LabeledSpectrum&, double, double, const LabeledSpectrum&, int)> go =
            [&](const LabeledSpectrum& from, double x0, double x1, const LabeledSpectrum& to_raw, int depth) {
                detail::TrackStep st = detail::continue_labels(from, to_raw, spec, tracked, opt.degenerate_tol);
                if (st.continuity >= opt.min_overlap) {
                    worst = std::min(worst, st.continuity);
                    return st.next;
                }
                if (depth >= opt.refine_cap) {
                    broken = true;
                    worst = std::min(worst, st.continuity);
                    return st.next;
                }
                const double xm = 0.5 * (x0 + x1);
                ++inserted;
                const LabeledSpectrum mid_raw = diagonalize(builder(xm), want);
                const LabeledSpectrum mid = go(from, x0, xm, mid_raw, depth + 1);
                return go(mid, xm, x1, to_raw, depth + 1);
            };
        out.spectra.push_back(go(out.spectra.back(), axis[i - 1], axis[i], raw[i], 0));
        out.continuity.push_back(worst);
        out.refinements.push_back(inserted);
        out.discontinuous.push_back(broken);
    }
    for (auto& s : out.spectra) {
        if (s.eigenvalues.size() > tracked) {
            s.eigenvalues.conservativeResize(tracked);
            s.labels.resize(static_cast<std::size_t>(tracked));
            s.label_index.resize(static_cast<std::size_t>(tracked));
            s.overlaps.resize(static_cast<std::size_t>(tracked));
            s.mixed.resize(static_cast<std::size_t>(tracked));
        }
        if (!opt.keep_vectors)
            s.vectors.resize(0, 0);
        else
            s.vectors.conservativeResize(Eigen::NoChange, tracked);
    }
    return out;
}

/// Flux sweep of the Hamiltonian selected by `model` (flux axis in Phi0).
inline SweepResult sweep_flux(const CircuitParams& p, const HilbertSpec& spec, const ModelSelector& model,
                              const std::vector<double>& phi, const SweepOptions& opt = {}) {
    auto builder = [&](double x) {
        HamiltonianMatrix h = build(p, invert_flux(p, x), spec, model);
        return h;
    };
    SweepResult r = sweep(builder, phi, opt, "phi_e");
    for (std::size_t i = 0; i < r.spectra.size(); ++i) r.spectra[i].flux = invert_flux(p, phi[i]);
    return r;
}

// ---------------------------------------------------------------------------------------
// Numerical effective coupling from the minimum gap of the qubit-like pair as E_b is swept.

struct GeffOptions {
    HilbertSpec spec = HilbertSpec::full_fock();
    int ho_order = 6;
    int manifold = 1;            // 1: |1000>-|0001>, 2: |2000>-|1001>
    double window_factor = 10.0;  // omega_b window half-width in units of the |g| estimate
    double min_window = 0.05;     // GHz
    double warn_validity = 0.25;
    int bits = 40;                // Brent minimizer precision
};

struct GeffResult {
    double two_g = 0.0;       // signed 2 g_eff, GHz
    double gap = 0.0;         // minimum gap, GHz
    double Eb = 0.0;          // qubit-b Josephson energy at the minimum, GHz
    double omega_b = 0.0;     // bare HO frequency of qubit b at the minimum, GHz
    double weight = 0.0;      // smallest target-subspace weight of the selected pair
    double validity = 0.0;
    bool dispersive_warning = false;
    int evaluations = 0;
};

/// Extraction with the HO operator cache built once; reusable across flux points and draws.
class GeffExtractor {
public:
    explicit GeffExtractor(GeffOptions opt = {}) : opt_(std::move(opt)), model_(opt_.spec) {
        if (model_.scope() != Scope::full_chain) throw DomainError("g_eff extraction needs the full chain");
        if (opt_.manifold != 1 && opt_.manifold != 2) throw DomainError("manifold must be 1 or 2");
        const std::string la = opt_.manifold == 1 ? "|1000>" : "|2000>";
        const std::string lb = opt_.manifold == 1 ? "|0001>" : "|1001>";
        const std::size_t ia = opt_.spec.parse_label(la), ib = opt_.spec.parse_label(lb);
        parity_ = model_.parity_of(ia);
        pos_a_ = model_.sector_position(ia);
        pos_b_ = model_.sector_position(ib);
        count_ = opt_.manifold == 1 ? 8 : 16;
    }

    const GeffOptions& options() const { return opt_; }

    struct Pair {
        double gap = 0.0;
        double weight = 0.0;
        double ca_low = 0.0, cb_low = 0.0;  // lower state's target amplitudes
        double e_low = 0.0, e_high = 0.0;
        double pb_high = 0.0;  // fraction of the upper state's target weight on the b ket
    };

    /// The two eigenstates with the largest weight on the target kets, at qubit-b energy Eb.
    Pair pair_at(const CircuitParams& p, const FluxPoint& flux, double Eb) const {
        CircuitParams q = p;
        q.Eb = Eb;
        const DerivedParams d = model_.derive(q, flux);
        const Eigen::MatrixXd h = model_.assemble_sector(model_.coefficients(d, opt_.ho_order), parity_);
        const int count = std::min<int>(count_, static_cast<int>(h.rows()));
        const EigenSystem<double> es = eigh(h, count);
        std::vector<std::pair<double, Eigen::Index>> w;
        for (Eigen::Index i = 0; i < es.values.size(); ++i) {
            const double ca = es.vectors(pos_a_, i), cb = es.vectors(pos_b_, i);
            w.push_back({ca * ca + cb * cb, i});
        }
        std::partial_sort(w.begin(), w.begin() + 2, w.end(), [](auto& x, auto& y) { return x.first > y.first; });
        Eigen::Index lo = w[0].second, hi = w[1].second;
        if (es.values(lo) > es.values(hi)) std::swap(lo, hi);
        Pair r;
        r.e_low = es.values(lo);
        r.e_high = es.values(hi);
        r.gap = r.e_high - r.e_low;
        r.weight = std::min(w[0].first, w[1].first);
        r.ca_low = es.vectors(pos_a_, lo);
        r.cb_low = es.vectors(pos_b_, lo);
        const double ca = es.vectors(pos_a_, hi), cb = es.vectors(pos_b_, hi);
        r.pb_high = cb * cb / (ca * ca + cb * cb);
        return r;
    }

    /// Signed 2 g_eff at one flux point: minimum gap over E_b, sign from the lower state.
    GeffResult operator()(const CircuitParams& p, const FluxPoint& flux) const {
        GeffResult res;
        const DerivedParams d0 = derive_params(p, flux);
        res.validity = dispersive_validity(d0);
        res.dispersive_warning = res.validity > opt_.warn_validity;
        const double ecb = d0.EC[3];
        // bare HO frequency of b is sqrt(8 EC Eb); convert frequency targets to Eb
        auto eb_of = [&](double w) { return w * w / (8.0 * ecb); };
        auto w_of = [&](double eb) { return std::sqrt(8.0 * ecb * eb); };
        // target: b sits where the a ket of the manifold is resonant with the b ket
        double w_target = d0.omega[0];
        if (opt_.manifold == 2) w_target += -12.0 * d0.nu4[0];  // anharmonicity of a, first order
        double eb = eb_of(w_target);
        double g_est = 0.0;
        try {
            g_est = std::abs(geff_analytic(d0).g_total_anh);
        } catch (const PreconditionError&) {
            g_est = 0.0;
        }
        if (opt_.manifold == 2) g_est *= std::sqrt(2.0);
        // center on the crossing with a few two-level predictions
        for (int it = 0; it < 4; ++it) {
            const Pair pr = pair_at(p, flux, eb);
            ++res.evaluations;
            // eps_b - eps_a = gap (2 p_b(upper) - 1) in the two-level picture
            const double detuning = pr.gap * (2.0 * pr.pb_high - 1.0);
            eb = eb_of(std::max(w_of(eb) - detuning, 1e-3));
            if (std::abs(detuning) < 1e-4) break;
        }
        const double half = std::max(opt_.window_factor * g_est, opt_.min_window);
        const double w0 = w_of(eb);
        const double lo = eb_of(std::max(w0 - half, 1e-3)), hi = eb_of(w0 + half);
        auto gap = [&](double x) {
            ++res.evaluations;
            return pair_at(p, flux, x).gap;
        };
        std::uintmax_t iters = 200;
        const auto best = boost::math::tools::brent_find_minima(gap, lo, hi, opt_.bits, iters);
        const double span = hi - lo;
        if (best.first - lo < 1e-3 * span || hi - best.first < 1e-3 * span)
            throw PreconditionError("g_eff extraction: gap minimum at the edge of the E_b window (no bracket)");
        const Pair at = pair_at(p, flux, best.first);
        if (at.weight < 0.25)
            throw PreconditionError("g_eff extraction: qubit-like states are mixed with other modes (target weight " +
                                    std::to_string(at.weight) + ")");
        res.gap = at.gap;
        res.Eb = best.first;
        res.omega_b = w_of(best.first);
        res.weight = at.weight;
        // positive coupling puts the antisymmetric combination lowest
        res.two_g = (at.ca_low * at.cb_low < 0.0 ? 1.0 : -1.0) * at.gap;
        return res;
    }

private:
    GeffOptions opt_;
    HoModel model_;
    int parity_ = 1;
    Eigen::Index pos_a_ = 0, pos_b_ = 0;
    int count_ = 8;
};

inline GeffResult extract_geff(const CircuitParams& p, const FluxPoint& flux, const GeffOptions& opt = {}) {
    return GeffExtractor(opt)(p, flux);
}

inline GeffResult extract_geff(const CircuitParams& p, double phi_e, const GeffOptions& opt = {}) {
    return extract_geff(p, invert_flux(p, phi_e), opt);
}

// ---------------------------------------------------------------------------------------
// Decoupling flux.

struct DecouplingOptions {
    double lo = 0.0, hi = 0.5;  // search interval, Phi0
    int scan_points = 11;
    double tol = 1e-5;          // Phi0
};

struct DecouplingResult {
    double phi_e0 = 0.0;
    double two_g_lo = 0.0, two_g_hi = 0.0;  // bracket values
    int evaluations = 0;
};

/// Root of the numerically extracted g_eff over flux (TOMS 748 on a scanned sign change).
inline DecouplingResult find_decoupling_flux(const CircuitParams& p, const GeffExtractor& ex,
                                             const DecouplingOptions& opt = {}) {
    if (opt.scan_points < 2 || !(opt.hi > opt.lo)) throw DomainError("decoupling scan needs an interval and >= 2 points");
    DecouplingResult r;
    auto g = [&](double phi) {
        ++r.evaluations;
        return ex(p, invert_flux(p, phi)).two_g;
    };
    double x0 = opt.lo, g0 = g(x0);
    for (int i = 1; i < opt.scan_points; ++i) {
        const double x1 = opt.lo + (opt.hi - opt.lo) * i / (opt.scan_points - 1);
        const double g1 = g(x1);
        if (g0 == 0.0) {
            r.phi_e0 = x0;
            return r;
        }
        if ((g0 < 0.0) != (g1 < 0.0)) {
            std::uintmax_t iters = 100;
            auto tol = [&](double a, double b) { return std::abs(b - a) < opt.tol; };
            const auto br = boost::math::tools::toms748_solve(g, x0, x1, g0, g1, tol, iters);
            r.phi_e0 = 0.5 * (br.first + br.second);
            r.two_g_lo = g0;
            r.two_g_hi = g1;
            return r;
        }
        x0 = x1;
        g0 = g1;
    }
    throw PreconditionError("always-on coupler: g_eff does not change sign on the flux interval");
}

inline DecouplingResult find_decoupling_flux(const CircuitParams& p, const GeffOptions& gopt = {},
                                             const DecouplingOptions& opt = {}) {
    return find_decoupling_flux(p, GeffExtractor(gopt), opt);
}

// ---------------------------------------------------------------------------------------
// Junction-disorder Monte Carlo.

struct MonteCarloOptions {
    int n_draws = 30;
    double rel_sigma = 0.06;
    std::uint64_t seed = 1;
    std::vector<double> flux;  // Phi0 grid for the g_eff bands
    DecouplingOptions decoupling;
    int threads = 0;
    int max_redraws = 1000;
};

struct MonteCarloResult {
    std::vector<double> flux;
    std::vector<double> mean_two_g, std_two_g;   // per flux point, GHz
    std::vector<std::vector<double>> draws_two_g;  // [draw][flux]
    std::vector<double> phi_e0;                  // per draw (NaN when always on)
    std::vector<double> peak_abs_two_g;          // per draw, max over the grid
    int rejected = 0;
    int always_on = 0;
    double phi_e0_mean = 0.0, phi_e0_std = 0.0;
    double peak_mean = 0.0, peak_std = 0.0;

    double phi_e0_rel_std() const { return phi_e0_mean != 0.0 ? phi_e0_std / std::abs(phi_e0_mean) : 0.0; }
    double peak_rel_std() const { return peak_mean != 0.0 ? peak_std / peak_mean : 0.0; }
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    std::vector<double> x;
    for (double e : v)
        if (std::isfinite(e)) x.push_back(e);
    if (x.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double m = 0.0;
    for (double e : x) m += e;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double e : x) s += (e - m) * (e - m);
    return {m, x.size() > 1 ? std::sqrt(s / static_cast<double>(x.size() - 1)) : 0.0};
}

}  // namespace detail

/// Independent relative Gaussian noise on E1, E2, E12; each draw has its own generator seeded
/// from (seed, draw index), so results do not depend on the thread count.
inline MonteCarloResult monte_carlo_disorder(const CircuitParams& p, const GeffOptions& gopt,
                                             const MonteCarloOptions& opt) {
    if (!(opt.rel_sigma >= 0.0 && opt.rel_sigma < 0.3)) throw DomainError("rel_sigma must lie in [0, 0.3)");
    if (opt.n_draws < 1) throw DomainError("n_draws must be positive");
    if (opt.flux.empty()) throw DomainError("Monte Carlo flux grid is empty");
    MonteCarloResult r;
    r.flux = opt.flux;
    const auto nd = static_cast<std::size_t>(opt.n_draws);
    std::vector<CircuitParams> draws(nd, p);
    std::vector<int> rejected(nd, 0);
    for (std::size_t k = 0; k < nd; ++k) {
        std::seed_seq seq{static_cast<std::uint32_t>(opt.seed & 0xffffffffu), static_cast<std::uint32_t>(opt.seed >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int attempt = 0;; ++attempt) {
            if (attempt > opt.max_redraws) throw NumericalError("Monte Carlo: too many rejected draws");
            CircuitParams q = p;
            q.E1 = p.E1 * (1.0 + opt.rel_sigma * normal(rng));
            q.E2 = p.E2 * (1.0 + opt.rel_sigma * normal(rng));
            q.E12 = p.E12 * (1.0 + opt.rel_sigma * normal(rng));
            try {
                q.validate();
            } catch (const DomainError&) {
                ++rejected[k];
                continue;
            }
            draws[k] = q;
            break;
        }
    }
    const GeffExtractor ex(gopt);
    r.draws_two_g.assign(nd, std::vector<double>(opt.flux.size(), 0.0));
    r.phi_e0.assign(nd, std::numeric_limits<double>::quiet_NaN());
    std::vector<int> always_on(nd, 0);
    parallel_for(nd, opt.threads, [&](std::size_t k) {
        for (std::size_t i = 0; i < opt.flux.size(); ++i)
            r.draws_two_g[k][i] = ex(draws[k], invert_flux(draws[k], opt.flux[i])).two_g;
        try {
            r.phi_e0[k] = find_decoupling_flux(draws[k], ex, opt.decoupling).phi_e0;
        } catch (const PreconditionError&) {
            always_on[k] = 1;
        }
    });
    for (std::size_t k = 0; k < nd; ++k) {
        r.rejected += rejected[k];
        r.always_on += always_on[k];
        double peak = 0.0;
        for (double g : r.draws_two_g[k]) peak = std::max(peak, std::abs(g));
        r.peak_abs_two_g.push_back(peak);
    }
    for (std::size_t i = 0; i < opt.flux.size(); ++i) {
        std::vector<double> col(nd);
        for (std::size_t k = 0; k < nd; ++k) col[k] = r.draws_two_g[k][i];
        const auto [m, s] = detail::mean_std(col);
        r.mean_two_g.push_back(m);
        r.std_two_g.push_back(s);
    }
    std::tie(r.phi_e0_mean, r.phi_e0_std) = detail::mean_std(r.phi_e0);
    std::tie(r.peak_mean, r.peak_std) = detail::mean_std(r.peak_abs_two_g);
    return r;
}

}  // namespace dtc
