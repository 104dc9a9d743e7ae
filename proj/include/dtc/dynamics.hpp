// dynamics.hpp: time-dependent Schroedinger evolution under a parametric flux drive, Rabi
// chevron fits and the rectification probe.
//
// H(t) = sum_k c_k(phi_e(t)) B_k with the HO operator cache of HoModel. The coefficients are
// cubic B-splines over the drive's flux interval, so a right-hand-side evaluation is a fixed
// linear combination of cached blocks. All terms conserve excitation parity, so a trajectory
// lives in one parity sector. Two representations are available: the lowest eigenstates of the
// static-bias sector Hamiltonian (dressed, default) or the complete bare sector.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/numeric/odeint.hpp>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "dtc/analytics.hpp"
#include "dtc/circuit.hpp"
#include "dtc/eigen_solver.hpp"
#include "dtc/errors.hpp"
#include "dtc/fock.hpp"
#include "dtc/hamiltonian.hpp"
#include "dtc/parallel.hpp"
#include "dtc/spectrum.hpp"
#include "dtc/units.hpp"

namespace dtc {

/// Where phi_offset applies: the junction flux phi_e12 (the operating point of the analytic
/// parametric model) or the external flux phi_e.
enum class FluxBias { junction, external };

struct DriveProtocol {
    double A = 0.0;             // amplitude, Phi0
    double omega_d = 0.0;       // GHz
    double phi_offset = -0.25;  // Phi0
    FluxBias bias = FluxBias::junction;
    double ramp_ns = 50.0;
    double hold_ns = 160.0;
    double dt_max = 0.0;  // ns, 0: no cap
    double rtol = 1e-9;
    double atol = 1e-12;
    double sample_ns = 1.0;
    std::string initial = "|1000>";

    double duration() const { return ramp_ns + hold_ns; }

    double envelope(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= ramp_ns) return 1.0;
        return 0.5 * (1.0 - std::cos(units::pi * t / ramp_ns));
    }

    /// Integral of the envelope from 0 to t; equals t - ramp/2 after the ramp.
    double effective_time(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= ramp_ns) return t - 0.5 * ramp_ns;
        return 0.5 * t - ramp_ns / (2.0 * units::pi) * std::sin(units::pi * t / ramp_ns);
    }

    /// External flux at the static bias.
    double static_flux(const CircuitParams& p) const {
        return bias == FluxBias::junction ? forward_flux(p, phi_offset) : phi_offset;
    }

    double flux(double t, double phi_static) const {
        return phi_static + A * envelope(t) * std::sin(units::two_pi * omega_d * t);
    }

    void validate() const {
        if (!(ramp_ns >= 0.0) || !(hold_ns >= 0.0) || !(ramp_ns + hold_ns > 0.0))
            throw DomainError("drive durations must be non-negative with a positive total");
        if (!(rtol > 0.0) || !(atol > 0.0)) throw DomainError("integrator tolerances must be positive");
        if (!(sample_ns > 0.0)) throw DomainError("sample_ns must be positive");
        if (!(dt_max >= 0.0)) throw DomainError("dt_max must be non-negative");
        if (!std::isfinite(A) || !std::isfinite(omega_d)) throw DomainError("drive amplitude and frequency must be finite");
    }
};

enum class EvolutionBasis { dressed, bare_sector };

struct EvolveOptions {
    HilbertSpec spec = HilbertSpec::full_fock(4, 5, 5, 4);
    int ho_order = 6;
    EvolutionBasis basis = EvolutionBasis::dressed;
    int dressed_states = 24;
    int spline_knots = 2001;
    double flux_margin = 0.01;  // Phi0 beyond the drive's flux range
    std::vector<std::string> tracked = {"|1000>", "|0001>", "|2000>", "|1001>", "|0110>"};
    double norm_fail = 1e-6;
    // only g_L follows the drive; every other coefficient stays at the static bias (the content
    // of the analytic parametric model)
    bool inductive_only = false;
    int threads = 0;  // chevron grids
};

/// Populations are projections onto the static-bias eigenstates carrying each bare label.
struct EvolutionResult {
    std::vector<double> times;                     // ns
    std::vector<std::string> labels;               // tracked labels
    std::vector<std::vector<double>> populations;  // [label][time]
    std::vector<double> leakage;                   // states with coupler excitations
    std::vector<double> norm;
    std::vector<double> energy;                    // <H(t)>, GHz
    double final_norm = 1.0;
    double phi_static = 0.0;                       // external flux at the bias, Phi0
    int dimension = 0;
    std::size_t steps = 0;

    const std::vector<double>& population(const std::string& label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return populations[i];
        throw DomainError("label " + label + " is not tracked");
    }
};

namespace detail {

using OdeState = std::vector<cplx>;

}  // namespace detail

/// Drive-independent part of a trajectory: splines, static eigenbasis and operator blocks for
/// one circuit, amplitude, bias and parity sector. Read-only after construction.
class DriveEngine {
public:
    DriveEngine(const CircuitParams& p, double A, double phi_offset, FluxBias bias, const std::string& initial,
                EvolveOptions opt = {})
        : opt_(std::move(opt)), model_(opt_.spec) {
        p.validate();
        if (model_.scope() != Scope::full_chain) throw DomainError("drive simulation needs the full chain");
        if (opt_.spline_knots < 8) throw DomainError("spline_knots must be at least 8");
        DriveProtocol probe;
        probe.phi_offset = phi_offset;
        probe.bias = bias;
        phi_static_ = probe.static_flux(p);
        A_ = std::abs(A);
        parity_ = model_.parity_of(opt_.spec.parse_label(initial));

        // coefficient splines over [phi_static - A - margin, phi_static + A + margin]
        lo_ = phi_static_ - A_ - opt_.flux_margin;
        const double hi = phi_static_ + A_ + opt_.flux_margin;
        h_ = (hi - lo_) / (opt_.spline_knots - 1);
        const std::size_t nops = model_.ops().size();
        std::vector<std::vector<double>> samples(nops, std::vector<double>(static_cast<std::size_t>(opt_.spline_knots)));
        for (int i = 0; i < opt_.spline_knots; ++i) {
            const std::vector<double> c = coefficients_direct(p, lo_ + i * h_);
            for (std::size_t k = 0; k < nops; ++k) samples[k][static_cast<std::size_t>(i)] = c[k];
        }
        c0_ = coefficients_direct(p, phi_static_);
        for (std::size_t k = 0; k < nops; ++k) {
            double spread = 0.0;
            for (double v : samples[k]) spread = std::max(spread, std::abs(v - c0_[k]));
            if (spread == 0.0) continue;  // flux-independent or switched off
            if (opt_.inductive_only && model_.ops()[k].kind != HoModel::Kind::inductive) continue;
            active_.push_back(k);
            splines_.push_back(std::make_shared<Spline>(samples[k].begin(), samples[k].end(), lo_, h_));
        }

        // static-bias eigenbasis of the sector
        const Eigen::MatrixXd h0 = model_.assemble_sector(c0_, parity_);
        const auto nsec = static_cast<int>(h0.rows());
        const bool dressed = opt_.basis == EvolutionBasis::dressed;
        if (dressed && opt_.dressed_states < 2) throw DomainError("dressed_states must be at least 2");
        const int keep = dressed ? std::min(opt_.dressed_states, nsec) : nsec;
        const EigenSystem<double> es = eigh(h0, keep);
        energies_ = es.values;
        eigvecs_ = es.vectors;
        label_states(es.vectors);

        if (dressed) {
            for (std::size_t k : active_) {
                const SpMat& b = model_.ops()[k].block[parity_];
                blocks_.push_back(eigvecs_.transpose() * (b * eigvecs_));
            }
        } else {
            SpMat hs(nsec, nsec);
            for (std::size_t k = 0; k < nops; ++k)
                if (c0_[k] != 0.0) hs += c0_[k] * model_.ops()[k].block[parity_];
            h0_sector_ = hs.cast<cplx>();
            for (std::size_t k : active_) sparse_blocks_.push_back(model_.ops()[k].block[parity_].cast<cplx>());
        }
    }

    int dimension() const { return static_cast<int>(energies_.size()); }
    double static_flux() const { return phi_static_; }
    double amplitude() const { return A_; }
    int parity() const { return parity_; }
    const Eigen::VectorXd& energies() const { return energies_; }
    const std::vector<std::string>& state_labels() const { return labels_; }

    /// Index of the static eigenstate carrying `label`; throws when absent or mixed.
    int state_of(const std::string& label) const {
        const std::string canon = opt_.spec.label(opt_.spec.parse_label(label));
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == canon) {
                if (overlaps_[i] <= kMixedThreshold)
                    throw PreconditionError("state " + canon + " is ambiguous at the bias point (overlap " +
                                            std::to_string(overlaps_[i]) + ")");
                return static_cast<int>(i);
            }
        throw PreconditionError("state " + canon + " is not among the simulated states");
    }

    /// Spline coefficient deviations c_k(phi) - c_k(static) for the active operators.
    void deltas(double phi, std::vector<double>& out) const {
        out.resize(active_.size());
        for (std::size_t i = 0; i < active_.size(); ++i) out[i] = (*splines_[i])(phi) - c0_[active_[i]];
    }

    /// Coefficient k evaluated through its spline (flux-independent ones return the static value).
    double spline_coefficient(std::size_t k, double phi) const {
        for (std::size_t i = 0; i < active_.size(); ++i)
            if (active_[i] == k) return (*splines_[i])(phi);
        return c0_[k];
    }

    /// Coefficients from flux inversion and derived parameters, without splines.
    std::vector<double> coefficients_direct(const CircuitParams& p, double phi_e) const {
        return model_.coefficients(model_.derive(p, invert_flux(p, phi_e)), opt_.ho_order);
    }

    std::size_t operator_count() const { return model_.ops().size(); }

    /// Exchange resonance between two labeled states for the Hamiltonian averaged over one drive
    /// cycle at full amplitude (includes the rectified static shift, not dynamical ones).
    double resonance(const std::string& from, const std::string& to) const {
        const int i = state_of(from), j = state_of(to);
        if (opt_.basis != EvolutionBasis::dressed || A_ == 0.0)
            return std::abs(energies_(j) - energies_(i));
        Eigen::MatrixXd h = energies_.asDiagonal();
        std::vector<double> dc;
        const int samples = 64;
        for (int s = 0; s < samples; ++s) {
            deltas(phi_static_ + A_ * std::sin(units::two_pi * s / samples), dc);
            for (std::size_t k = 0; k < dc.size(); ++k) h += (dc[k] / samples) * blocks_[k];
        }
        const EigenSystem<double> es = eigh(h);
        // follow the two states by overlap with the static ones
        auto follow = [&](int idx) {
            Eigen::Index best = 0;
            es.vectors.row(idx).cwiseAbs().maxCoeff(&best);
            return es.values(best);
        };
        return std::abs(follow(j) - follow(i));
    }

    EvolutionResult evolve(const DriveProtocol& proto) const {
        proto.validate();
        if (std::abs(std::abs(proto.A) - A_) > 1e-15 && std::abs(proto.A) > A_)
            throw DomainError("drive amplitude exceeds the engine's spline range");
        const int init = state_of(proto.initial);
        const bool dressed = opt_.basis == EvolutionBasis::dressed;
        const Eigen::Index n = dressed ? energies_.size() : h0_sector_.rows();

        detail::OdeState psi(static_cast<std::size_t>(n), cplx(0.0, 0.0));
        if (dressed) {
            psi[static_cast<std::size_t>(init)] = 1.0;
        } else {
            for (Eigen::Index r = 0; r < n; ++r) psi[static_cast<std::size_t>(r)] = eigvecs_(r, init);
        }
        const double eref = energies_(init);

        std::vector<double> dc;
        Eigen::MatrixXd mix;
        auto rhs = [&](const detail::OdeState& x, detail::OdeState& dx, double t) {
            deltas(proto.flux(t, phi_static_), dc);
            Eigen::Map<const Eigen::VectorXcd> xv(x.data(), n);
            Eigen::Map<Eigen::VectorXcd> dv(dx.data(), n);
            if (dressed) {
                mix = (energies_.array() - eref).matrix().asDiagonal();
                for (std::size_t k = 0; k < dc.size(); ++k)
                    if (dc[k] != 0.0) mix.noalias() += dc[k] * blocks_[k];
                dv.noalias() = mix * xv;
            } else {
                dv.noalias() = h0_sector_ * xv - eref * xv;
                for (std::size_t k = 0; k < dc.size(); ++k)
                    if (dc[k] != 0.0) dv.noalias() += dc[k] * (sparse_blocks_[k] * xv);
            }
            dv *= cplx(0.0, -units::two_pi);
        };

        EvolutionResult res;
        res.phi_static = phi_static_;
        res.dimension = static_cast<int>(n);
        std::vector<double> grid;
        const double T = proto.duration();
        const auto nsamp = static_cast<std::size_t>(std::floor(T / proto.sample_ns + 1e-9));
        for (std::size_t i = 0; i <= nsamp; ++i) grid.push_back(std::min(T, static_cast<double>(i) * proto.sample_ns));
        if (grid.back() < T - 1e-12) grid.push_back(T);

        // tracked label -> static state index (or -1 when absent / other parity)
        std::vector<int> tracked;
        for (const std::string& l : opt_.tracked) {
            const std::string canon = opt_.spec.label(opt_.spec.parse_label(l));
            res.labels.push_back(canon);
            int idx = -1;
            for (std::size_t i = 0; i < labels_.size(); ++i)
                if (labels_[i] == canon) idx = static_cast<int>(i);
            tracked.push_back(idx);
        }
        res.populations.assign(tracked.size(), {});

        Eigen::VectorXcd amp;
        auto observe = [&](const detail::OdeState& x, double t) {
            Eigen::Map<const Eigen::VectorXcd> xv(x.data(), n);
            amp = dressed ? Eigen::VectorXcd(xv) : Eigen::VectorXcd(eigvecs_.transpose() * xv);
            res.times.push_back(t);
            const double nrm = xv.norm();
            res.norm.push_back(nrm);
            for (std::size_t i = 0; i < tracked.size(); ++i)
                res.populations[i].push_back(tracked[i] < 0 ? 0.0 : std::norm(amp(tracked[i])));
            double leak = 0.0;
            for (Eigen::Index i = 0; i < amp.size(); ++i)
                if (coupler_excited_[static_cast<std::size_t>(i)]) leak += std::norm(amp(i));
            res.leakage.push_back(leak);
            double e = 0.0;
            if (dressed) {
                std::vector<double> d;
                deltas(proto.flux(t, phi_static_), d);
                Eigen::MatrixXd h = energies_.asDiagonal();
                for (std::size_t k = 0; k < d.size(); ++k) h += d[k] * blocks_[k];
                e = (xv.adjoint() * h * xv)(0).real();
            } else {
                std::vector<double> d;
                deltas(proto.flux(t, phi_static_), d);
                Eigen::VectorXcd hx = h0_sector_ * xv;
                for (std::size_t k = 0; k < d.size(); ++k) hx += d[k] * (sparse_blocks_[k] * xv);
                e = xv.dot(hx).real();
            }
            res.energy.push_back(e);
            if (std::abs(nrm - 1.0) > opt_.norm_fail)
                throw NumericalError("integrator norm drift " + std::to_string(nrm - 1.0) + " at t = " +
                                         std::to_string(t) + " ns",
                                     nrm - 1.0);
        };

        namespace ode = boost::numeric::odeint;
        auto stepper = ode::make_controlled(proto.atol, proto.rtol, proto.dt_max,
                                            ode::runge_kutta_fehlberg78<detail::OdeState>());
        const double dt0 = proto.dt_max > 0.0 ? std::min(0.01, proto.dt_max) : 0.01;
        res.steps = ode::integrate_times(stepper, rhs, psi, grid.begin(), grid.end(), dt0, observe);
        res.final_norm = res.norm.back();
        return res;
    }

private:
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

    void label_states(const Eigen::MatrixXd& vecs) {
        const std::vector<std::size_t>& sector = model_.sector(parity_);
        const std::vector<Eigen::Index> rows = detail::greedy_assign(vecs.cwiseAbs2());
        const auto c1 = static_cast<std::size_t>(opt_.spec.position(Mode::c1));
        const auto c2 = static_cast<std::size_t>(opt_.spec.position(Mode::c2));
        labels_.clear();
        overlaps_.clear();
        coupler_excited_.clear();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::size_t full = sector[static_cast<std::size_t>(rows[i])];
            labels_.push_back(opt_.spec.label(full));
            overlaps_.push_back(vecs(rows[i], static_cast<Eigen::Index>(i)) * vecs(rows[i], static_cast<Eigen::Index>(i)));
            const std::vector<int> occ = opt_.spec.occupations(full);
            coupler_excited_.push_back(occ[c1] + occ[c2] > 0);
        }
    }

    EvolveOptions opt_;
    HoModel model_;
    double phi_static_ = 0.0, A_ = 0.0, lo_ = 0.0, h_ = 0.0;
    int parity_ = 1;
    std::vector<double> c0_;
    std::vector<std::size_t> active_;
    std::vector<std::shared_ptr<Spline>> splines_;
    Eigen::VectorXd energies_;
    Eigen::MatrixXd eigvecs_;  // sector rows, kept states as columns
    std::vector<std::string> labels_;
    std::vector<double> overlaps_;
    std::vector<bool> coupler_excited_;
    std::vector<Eigen::MatrixXd> blocks_;
    SpMatC h0_sector_;
    std::vector<SpMatC> sparse_blocks_;
};

inline EvolutionResult evolve(const CircuitParams& p, const DriveProtocol& proto, const EvolveOptions& opt = {}) {
    return DriveEngine(p, proto.A, proto.phi_offset, proto.bias, proto.initial, opt).evolve(proto);
}

// ---------------------------------------------------------------------------------------
// Chevron fits.

/// Target-state population on a (drive frequency, time) grid.
struct ChevronData {
    std::vector<double> omega_d;             // GHz
    std::vector<double> times;               // ns
    std::vector<std::vector<double>> P;      // [omega][time]
    double ramp_ns = 0.0;
};

struct ChevronFit {
    double g = 0.0;          // GHz
    double omega_res = 0.0;  // GHz
    double visibility = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    double rms = 0.0;
    int iterations = 0;
    bool center_fixed = false;
    double g_sigma() const { return std::sqrt(std::max(0.0, covariance(0, 0))); }
};

/// Rabi chevron P = V g^2/Omega^2 sin^2(2 pi Omega t_eff), Omega^2 = g^2 + (omega_d - omega_res)^2/4.
inline double chevron_model(double g, double omega_res, double V, double omega_d, double t_eff) {
    const double half = 0.5 * (omega_d - omega_res);
    const double om2 = g * g + half * half;
    if (om2 == 0.0) return 0.0;
    const double s = std::sin(units::two_pi * std::sqrt(om2) * t_eff);
    return V * g * g / om2 * s * s;
}

namespace detail {

inline double ramp_effective_time(double t, double ramp) {
    DriveProtocol d;
    d.ramp_ns = ramp;
    return d.effective_time(t);
}

struct ChevronFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const ChevronData* data;
    bool fix_center;
    double center;
    int n_values;

    int inputs() const { return fix_center ? 2 : 3; }
    int values() const { return n_values; }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
        const double w0 = fix_center ? center : x(1);
        const double V = fix_center ? x(1) : x(2);
        int r = 0;
        for (std::size_t i = 0; i < data->omega_d.size(); ++i)
            for (std::size_t j = 0; j < data->times.size(); ++j)
                f(r++) = chevron_model(x(0), w0, V, data->omega_d[i], ramp_effective_time(data->times[j], data->ramp_ns)) -
                         data->P[i][j];
        return 0;
    }
};

}  // namespace detail

/// Levenberg-Marquardt fit of the chevron model. With a single drive frequency the resonance is
/// fixed at `center`. Several starting rates around g_guess are tried; the best is kept.
inline ChevronFit fit_chevron(const ChevronData& data, double g_guess, double center, bool fix_center = false) {
    if (data.omega_d.empty() || data.times.empty()) throw DomainError("chevron data is empty");
    if (data.P.size() != data.omega_d.size()) throw DomainError("chevron data has inconsistent shape");
    if (data.omega_d.size() == 1) fix_center = true;
    const int nval = static_cast<int>(data.omega_d.size() * data.times.size());
    detail::ChevronFunctor fun{&data, fix_center, center, nval};
    const int np = fun.inputs();
    if (nval <= np) throw DomainError("chevron data has too few samples for the fit");

    double pmax = 0.0;
    for (const auto& row : data.P)
        for (double v : row) pmax = std::max(pmax, v);
    ChevronFit best;
    double best_ssr = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;
    int best_iter = 0;
    for (double scale : {1.0, 0.7, 1.4, 0.5, 2.0}) {
        Eigen::VectorXd x(np);
        x(0) = std::abs(g_guess) * scale;
        if (fix_center) {
            x(1) = std::max(pmax, 0.05);
        } else {
            x(1) = center;
            x(2) = std::max(pmax, 0.05);
        }
        Eigen::NumericalDiff<detail::ChevronFunctor> nd(fun);
        Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::ChevronFunctor>> lm(nd);
        lm.parameters.xtol = 1e-14;
        lm.parameters.ftol = 1e-14;
        lm.parameters.maxfev = 4000;
        lm.minimize(x);
        Eigen::VectorXd f(nval);
        fun(x, f);
        const double ssr = f.squaredNorm();
        if (std::isfinite(ssr) && ssr < best_ssr) {
            best_ssr = ssr;
            best_x = x;
            best_iter = static_cast<int>(lm.iter);
        }
    }
    if (!std::isfinite(best_ssr)) throw NumericalError("chevron fit did not converge");

    best.g = std::abs(best_x(0));
    best.omega_res = fix_center ? center : best_x(1);
    best.visibility = fix_center ? best_x(1) : best_x(2);
    best.center_fixed = fix_center;
    best.iterations = best_iter;
    best.rms = std::sqrt(best_ssr / nval);
    // covariance s^2 (J^T J)^-1 at the solution
    Eigen::NumericalDiff<detail::ChevronFunctor, Eigen::Central> nd(fun);
    Eigen::MatrixXd J(nval, np);
    nd.df(best_x, J);
    const double s2 = best_ssr / (nval - np);
    const Eigen::MatrixXd cov = s2 * (J.transpose() * J).completeOrthogonalDecomposition().pseudoInverse();
    if (fix_center) {
        best.covariance(0, 0) = cov(0, 0);
        best.covariance(0, 2) = best.covariance(2, 0) = cov(0, 1);
        best.covariance(2, 2) = cov(1, 1);
    } else {
        best.covariance = cov;
    }
    if (!fix_center) {
        const auto [lo, hi] = std::minmax_element(data.omega_d.begin(), data.omega_d.end());
        if (best.omega_res < *lo || best.omega_res > *hi)
            throw PreconditionError("chevron resonance " + std::to_string(best.omega_res) +
                                    " GHz lies outside the drive-frequency grid");
    }
    return best;
}

struct ChevronOptions {
    std::string initial = "|1000>";
    std::string target = "|0001>";
    int points = 11;
    double half_width = 0.0;  // GHz; 0: 3 |g_guess|
    double g_guess = 0.0;     // GHz; 0: larger of analytic g_eff^p and its corotating part (x sqrt 2 for manifold 2)
    EvolveOptions evolve;
};

struct ChevronResult {
    ChevronData data;
    ChevronFit fit;
    double resonance_guess = 0.0;  // GHz
    double g_guess = 0.0;
    int recenters = 0;  // grid shifts toward the strongest transfer
    std::vector<EvolutionResult> runs;
    static constexpr int kMaxRecenters = 3;
};

/// Drive-frequency scan around the cycle-averaged resonance (recentered on the strongest transfer
/// when needed) and a 2D chevron fit of the target population. `proto.omega_d` is ignored; the grid is built here.
inline ChevronResult chevron(const CircuitParams& p, const DriveProtocol& proto, const ChevronOptions& opt = {}) {
    if (opt.points < 1) throw DomainError("chevron needs at least one drive frequency");
    const DriveEngine engine(p, proto.A, proto.phi_offset, proto.bias, opt.initial, opt.evolve);
    engine.state_of(opt.target);
    ChevronResult out;
    out.resonance_guess = engine.resonance(opt.initial, opt.target);
    double g = opt.g_guess;
    if (g == 0.0) {
        ParametricOptions po;
        po.phi_offset = proto.phi_offset;
        // the corotating form tracks simulated rates better at large detuning; take the wider window
        const RotatingFrameParams pc = geff_parametric(p, proto.A, out.resonance_guess, po);
        g = std::max(std::abs(pc.g_eff_p), std::abs(pc.g_eff_p_corot));
        const std::size_t ia = opt.evolve.spec.parse_label(opt.initial);
        if (opt.evolve.spec.excitations(ia) >= 2) g *= std::sqrt(2.0);
        if (g == 0.0) g = 1e-3;
    }
    out.g_guess = g;
    const double half = opt.half_width > 0.0 ? opt.half_width : 3.0 * g;
    const std::string target = opt.evolve.spec.label(opt.evolve.spec.parse_label(opt.target));
    auto scan = [&](double center) {
        std::vector<double> grid;
        for (int i = 0; i < opt.points; ++i)
            grid.push_back(opt.points == 1 ? center : center - half + 2.0 * half * i / (opt.points - 1));
        out.runs.assign(grid.size(), EvolutionResult{});
        parallel_for(grid.size(), opt.evolve.threads, [&](std::size_t i) {
            DriveProtocol d = proto;
            d.omega_d = grid[i];
            d.initial = opt.initial;
            out.runs[i] = engine.evolve(d);
        });
        out.data = ChevronData{};
        out.data.omega_d = grid;
        out.data.times = out.runs.front().times;
        out.data.ramp_ns = proto.ramp_ns;
        for (const EvolutionResult& r : out.runs) {
            if (std::find(r.labels.begin(), r.labels.end(), target) == r.labels.end())
                throw DomainError("chevron target " + target + " must be among the tracked labels");
            out.data.P.push_back(r.population(target));
        }
    };
    // index of the drive frequency with the largest transfer at any time
    auto strongest = [&] {
        std::size_t best = 0;
        double best_p = -1.0;
        for (std::size_t i = 0; i < out.data.P.size(); ++i) {
            const double m = *std::max_element(out.data.P[i].begin(), out.data.P[i].end());
            if (m > best_p) best_p = m, best = i;
        }
        return best;
    };
    // the cycle-averaged estimate misses higher-order drive shifts; follow the transfer
    // maximum when it sits on the grid edge or the fitted center leaves the grid
    double center = out.resonance_guess;
    scan(center);
    for (;;) {
        const std::size_t k = strongest();
        const bool edge = opt.points > 2 && (k == 0 || k + 1 == out.data.omega_d.size());
        if (!edge || out.recenters == ChevronResult::kMaxRecenters) {
            try {
                out.fit = fit_chevron(out.data, g, out.data.omega_d[k], opt.points == 1);
                return out;
            } catch (const PreconditionError&) {
                if (opt.points == 1 || out.recenters == ChevronResult::kMaxRecenters) throw;
            }
        }
        center = out.data.omega_d[k];
        ++out.recenters;
        scan(center);
    }
}

// ---------------------------------------------------------------------------------------
// Rectification.

struct RectificationResult {
    double shift_a = 0.0, shift_b = 0.0;  // cycle-averaged Stark shift change, GHz
    double g_eff_p = 0.0;                 // GHz
    double ratio = 0.0;                   // max |shift| / |g_eff_p|
    double validity = 0.0;                // at the static bias
    bool pass = true;                     // ratio < 0.1
};

/// Cycle average of the analytic ac-Stark shifts over one drive period at full amplitude,
/// relative to the static bias, compared with g_eff^p.
inline RectificationResult rectification_probe(const CircuitParams& p, const DriveProtocol& proto, int samples = 256) {
    RectificationResult r;
    const double phi_s = proto.static_flux(p);
    const DerivedParams ds = derive_params(p, invert_flux(p, phi_s));
    const EffectiveCoupling e0 = geff_analytic(ds);
    r.validity = e0.validity;
    ParametricOptions po;
    po.phi_offset = proto.phi_offset;
    r.g_eff_p = geff_parametric(p, proto.A, proto.omega_d, po).g_eff_p;
    if (proto.A == 0.0) return r;
    for (int s = 0; s < samples; ++s) {
        const double phi = phi_s + proto.A * std::sin(units::two_pi * s / samples);
        const EffectiveCoupling e = geff_analytic(p, invert_flux(p, phi));
        r.shift_a += (e.stark_a - e0.stark_a) / samples;
        r.shift_b += (e.stark_b - e0.stark_b) / samples;
    }
    r.ratio = r.g_eff_p != 0.0 ? std::max(std::abs(r.shift_a), std::abs(r.shift_b)) / std::abs(r.g_eff_p)
                               : std::numeric_limits<double>::infinity();
    r.pass = r.ratio < 0.1;
    return r;
}

}  // namespace dtc
