// hamiltonian.hpp: coupler-only and full-chain Hamiltonians in the charge basis and in
// the harmonic-oscillator (Fock) basis expanded to 2nd, 4th or 6th order.
//
// The charge basis distributes the external flux capacitively (no flux-derivative terms);
// the HO basis uses the redistributed junction flux phi_e12 that cancels linear terms.

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dtc/circuit.hpp"
#include "dtc/fock.hpp"

namespace dtc {

enum class Basis { charge, harmonic_oscillator };

struct ModelSelector {
    Scope scope = Scope::full_chain;
    Basis basis = Basis::harmonic_oscillator;
    int ho_order = 6;
    bool odd_terms = false;  // HO only: keep the cubic and quintic flux terms (see build_ho)

    void validate() const {
        if (basis == Basis::harmonic_oscillator && ho_order != 2 && ho_order != 4 && ho_order != 6)
            throw DomainError("ho_order must be 2, 4 or 6");
    }
};

/// Coupler-only when the space holds neither qubit, full chain otherwise.
inline Scope scope_of(const HilbertSpec& spec) {
    return spec.has(Mode::a) || spec.has(Mode::b) ? Scope::full_chain : Scope::coupler_only;
}

/// Capacitive split of the external flux across the three coupler junctions, in Phi0.
struct ChargeFluxOffsets {
    double on_E1 = 0.0, on_E2 = 0.0, on_E12 = 0.0;
};

inline ChargeFluxOffsets charge_flux_offsets(const CircuitParams& p, double phi_e) {
    const BranchCapacitances c = p.branches();
    const double csq = c.C1 * c.C2 + c.C1 * c.C12 + c.C2 * c.C12;
    if (!(csq > 0.0)) throw DomainError("coupler capacitances give C^2 <= 0");
    return {c.C12 * c.C2 / csq * phi_e, -c.C12 * c.C1 / csq * phi_e, c.C1 * c.C2 / csq * phi_e};
}

/// Charge-basis Hamiltonian: 1/2 Q^T C^-1 Q with Q = 2e n, minus the Josephson cosines.
inline HamiltonianMatrix build_charge(const CircuitParams& p, const FluxPoint& flux, const HilbertSpec& spec) {
    spec.validate();
    for (BasisKind k : spec.kinds)
        if (k != BasisKind::charge) throw DomainError("build_charge needs charge-basis modes");
    const Scope scope = scope_of(spec);
    if (!spec.has(Mode::c1) || !spec.has(Mode::c2)) throw DomainError("charge model needs both coupler modes");
    if (scope == Scope::full_chain && !(spec.has(Mode::a) && spec.has(Mode::b)))
        throw DomainError("full-chain charge model needs modes a, 1, 2, b");

    Eigen::Matrix4d cinv = Eigen::Matrix4d::Zero();
    if (scope == Scope::full_chain) {
        Eigen::FullPivLU<Eigen::Matrix4d> lu(p.Cmat);
        if (!lu.isInvertible()) throw DomainError("capacitance matrix is singular");
        cinv = lu.inverse();
    } else {
        cinv.block<2, 2>(1, 1) = p.Cmat.block<2, 2>(1, 1).inverse();
    }
    const double e2_ghz = units::joule_to_ghz(units::elementary_charge * units::elementary_charge / units::femto);

    std::vector<Term> terms;
    auto local_n = [&](Mode m) { return Eigen::MatrixXcd(local::charge_number(spec.dims[spec.position(m)]).cast<cplx>()); };
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const Mode mi = spec.modes[i];
        const Eigen::MatrixXcd n = local_n(mi);
        terms.push_back({{{mi, n * n}}, 2.0 * e2_ghz * cinv(index(mi), index(mi))});
        for (std::size_t j = i + 1; j < spec.size(); ++j) {
            const Mode mj = spec.modes[j];
            const double c = cinv(index(mi), index(mj));
            if (c != 0.0) terms.push_back({{{mi, n}, {mj, local_n(mj)}}, 4.0 * e2_ghz * c});
        }
    }

    const ChargeFluxOffsets off = charge_flux_offsets(p, flux.phi_e);
    const int d1 = spec.dims[spec.position(Mode::c1)];
    const int d2 = spec.dims[spec.position(Mode::c2)];
    terms.push_back({{{Mode::c1, local::cos_phase(d1, units::two_pi * off.on_E1)}}, -p.E1});
    terms.push_back({{{Mode::c2, local::cos_phase(d2, units::two_pi * off.on_E2)}}, -p.E2});
    // cos(phi2 - phi1 + theta12) = (e^{i theta} E+_2 E-_1 + h.c.) / 2
    const Eigen::MatrixXcd up1 = local::charge_raise(d1).cast<cplx>();
    const Eigen::MatrixXcd up2 = local::charge_raise(d2).cast<cplx>();
    const cplx ph = std::polar(1.0, units::two_pi * off.on_E12);
    terms.push_back({{{Mode::c2, up2}, {Mode::c1, Eigen::MatrixXcd(up1.adjoint())}}, -0.5 * p.E12 * ph});
    terms.push_back({{{Mode::c2, Eigen::MatrixXcd(up2.adjoint())}, {Mode::c1, up1}}, -0.5 * p.E12 * std::conj(ph)});
    if (scope == Scope::full_chain) {
        terms.push_back({{{Mode::a, local::cos_phase(spec.dims[spec.position(Mode::a)], 0.0)}}, -p.Ea});
        terms.push_back({{{Mode::b, local::cos_phase(spec.dims[spec.position(Mode::b)], 0.0)}}, -p.Eb});
    }
    return kron_assemble(spec, terms);
}

/// Harmonic-oscillator-basis model with the operator content cached per Hilbert space.
/// H = sum_k c_k(flux) B_k, where the B_k are fixed sparse operators; this makes repeated
/// assembly along sweeps and time evolution cheap. Every term conserves excitation parity,
/// so the even and odd parity sectors can be assembled and diagonalized separately.
class HoModel {
public:
    enum class Kind { number, quartic, sextic, capacitive, inductive, cross4, cross6 };
    struct Op {
        Kind kind;
        int j = 0, k = 0;  // mode indices (a,1,2,b) or binomial k for cross terms
        SpMat full;
        std::array<SpMat, 2> block;  // even, odd parity sectors
    };

    explicit HoModel(HilbertSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        for (BasisKind k : spec_.kinds)
            if (k != BasisKind::fock) throw DomainError("HO model needs Fock-basis modes");
        scope_ = scope_of(spec_);
        const std::size_t n = spec_.total();
        block_pos_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const int par = spec_.excitations(i) % 2;
            block_pos_[i] = static_cast<int>(indices_[par].size());
            indices_[par].push_back(i);
        }

        auto dim = [&](Mode m) { return spec_.dims[spec_.position(m)]; };
        for (Mode m : spec_.modes) {
            const int d = dim(m);
            add(Kind::number, index(m), 0, embed(spec_, m, local::number(d)));
            add(Kind::quartic, index(m), 0, embed(spec_, m, local::quadrature_power(d, 4, false)));
            add(Kind::sextic, index(m), 0, embed(spec_, m, local::quadrature_power(d, 6, false)));
        }
        for (std::size_t i = 0; i < spec_.size(); ++i)
            for (std::size_t j = i + 1; j < spec_.size(); ++j) {
                const Mode mi = spec_.modes[i], mj = spec_.modes[j];
                add(Kind::capacitive, index(mi), index(mj),
                    embed<double, Eigen::MatrixXd>(spec_, {{mi, local::quadrature_power(dim(mi), 1, true)},
                                                           {mj, local::quadrature_power(dim(mj), 1, true)}}));
            }
        if (spec_.has(Mode::c1) && spec_.has(Mode::c2)) {
            const int d1 = dim(Mode::c1), d2 = dim(Mode::c2);
            auto cross = [&](int p1, int p2) {
                return embed<double, Eigen::MatrixXd>(spec_, {{Mode::c1, local::quadrature_power(d1, p1, false)},
                                                              {Mode::c2, local::quadrature_power(d2, p2, false)}});
            };
            add(Kind::inductive, 1, 2, cross(1, 1));
            for (int k = 1; k <= 3; ++k) add(Kind::cross4, 0, k, cross(k, 4 - k));
            for (int k = 1; k <= 5; ++k) add(Kind::cross6, 0, k, cross(k, 6 - k));
        }
    }

    const HilbertSpec& spec() const { return spec_; }
    Scope scope() const { return scope_; }
    const std::vector<Op>& ops() const { return ops_; }
    const std::vector<std::size_t>& sector(int parity) const { return indices_.at(parity); }

    /// Coefficient of each cached operator for the given derived parameters.
    std::vector<double> coefficients(const DerivedParams& d, int order = 6) const {
        if (order != 2 && order != 4 && order != 6) throw DomainError("ho_order must be 2, 4 or 6");
        std::vector<double> c(ops_.size(), 0.0);
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            const Op& op = ops_[i];
            switch (op.kind) {
                case Kind::number: c[i] = d.omega[op.j]; break;
                case Kind::quartic: c[i] = order >= 4 ? -d.nu4[op.j] : 0.0; break;
                case Kind::sextic: c[i] = order >= 6 ? -d.nu6[op.j] : 0.0; break;
                case Kind::capacitive: c[i] = d.gcap(op.j, op.k); break;
                case Kind::inductive: c[i] = d.gL; break;
                case Kind::cross4: c[i] = order >= 4 ? -d.mu4[op.k - 1] : 0.0; break;
                case Kind::cross6: c[i] = order >= 6 ? -d.mu6[op.k - 1] : 0.0; break;
            }
        }
        return c;
    }

    DerivedParams derive(const CircuitParams& p, const FluxPoint& flux) const { return derive_params(p, flux, scope_); }

    SpMat assemble(const std::vector<double>& c) const {
        const auto n = static_cast<Eigen::Index>(spec_.total());
        SpMat h(n, n);
        for (std::size_t i = 0; i < ops_.size(); ++i)
            if (c[i] != 0.0) h += c[i] * ops_[i].full;
        return h;
    }

    /// Dense matrix of one parity sector (0 even, 1 odd).
    Eigen::MatrixXd assemble_sector(const std::vector<double>& c, int parity) const {
        const auto n = static_cast<Eigen::Index>(indices_.at(parity).size());
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            if (c[i] == 0.0) continue;
            const SpMat& b = ops_[i].block[parity];
            for (int col = 0; col < b.outerSize(); ++col)
                for (SpMat::InnerIterator it(b, col); it; ++it) h(it.row(), it.col()) += c[i] * it.value();
        }
        return h;
    }

    /// Position of a full-space basis index inside its parity sector.
    int sector_position(std::size_t full_index) const { return block_pos_[full_index]; }
    int parity_of(std::size_t full_index) const { return spec_.excitations(full_index) % 2; }

private:
    void add(Kind kind, int j, int k, SpMat full) {
        Op op{kind, j, k, std::move(full), {}};
        for (int par = 0; par < 2; ++par) {
            std::vector<Eigen::Triplet<double>> trip;
            for (int col = 0; col < op.full.outerSize(); ++col)
                for (SpMat::InnerIterator it(op.full, col); it; ++it) {
                    const auto r = static_cast<std::size_t>(it.row());
                    const auto cidx = static_cast<std::size_t>(it.col());
                    if (spec_.excitations(r) % 2 != par) continue;
                    if (spec_.excitations(cidx) % 2 != par)
                        throw NumericalError("HO operator mixes excitation parity");
                    trip.emplace_back(block_pos_[r], block_pos_[cidx], it.value());
                }
            const auto nb = static_cast<Eigen::Index>(indices_[par].size());
            op.block[par].resize(nb, nb);
            op.block[par].setFromTriplets(trip.begin(), trip.end());
        }
        ops_.push_back(std::move(op));
    }

    HilbertSpec spec_;
    Scope scope_ = Scope::full_chain;
    std::array<std::vector<std::size_t>, 2> indices_;
    std::vector<int> block_pos_;
    std::vector<Op> ops_;
};

/// Cubic and quintic potential terms that the even-only HO expansion drops. Away from
/// phi_e12 = 0 and 0.5 the redistributed junction phases leave a residual
/// S [sin x1 - sin x2 + sin(x2 - x1)] with S = E12 sin(2 pi phi_e12); its linear part cancels,
/// the cubic and quintic parts do not. Here x_j = -i (2 EC_j/EJ_j)^(1/4) (a_j - a_j^dag).
inline Eigen::MatrixXcd odd_potential(const HilbertSpec& spec, const DerivedParams& d, double S,
                                      int max_order = 6) {
    const auto n = static_cast<Eigen::Index>(spec.total());
    if (!spec.has(Mode::c1) || !spec.has(Mode::c2) || S == 0.0) return Eigen::MatrixXcd::Zero(n, n);
    const int d1 = spec.dims[spec.position(Mode::c1)], d2 = spec.dims[spec.position(Mode::c2)];
    const double s1 = std::pow(2.0 * d.EC[1] / d.EJ[1], 0.25), s2 = std::pow(2.0 * d.EC[2] / d.EJ[2], 0.25);
    auto xpow = [](int dim, double s, int k) {
        return Eigen::MatrixXcd(std::pow(cplx(0.0, -s), k) * local::quadrature_power(dim, k, false).cast<cplx>());
    };
    SpMatC v(n, n);
    for (int order : {3, 5}) {
        if (order > max_order) break;
        // sign of the sine series term x^order / order!
        const double coef = S * (order == 3 ? -1.0 / 6.0 : 1.0 / 120.0);
        v += coef * embed<cplx, Eigen::MatrixXcd>(spec, {{Mode::c1, xpow(d1, s1, order)}});
        v -= coef * embed<cplx, Eigen::MatrixXcd>(spec, {{Mode::c2, xpow(d2, s2, order)}});
        for (int k = 0; k <= order; ++k) {  // (x2 - x1)^order
            const double b = detail::binomial(order, k) * (((order - k) % 2) ? -1.0 : 1.0);
            std::vector<std::pair<Mode, Eigen::MatrixXcd>> f;
            if (k > 0) f.emplace_back(Mode::c2, xpow(d2, s2, k));
            if (order - k > 0) f.emplace_back(Mode::c1, xpow(d1, s1, order - k));
            v += coef * b * embed<cplx, Eigen::MatrixXcd>(spec, f);
        }
    }
    return Eigen::MatrixXcd(v);
}

/// HO-basis Hamiltonian at the given flux (phi_e12 parameterization), as a dense matrix.
/// With odd_terms the parity-breaking cubic and quintic terms are added; without them the
/// operator content is exactly the even expansion (number, quartic, sextic, couplings, cross terms).
inline HamiltonianMatrix build_ho(const CircuitParams& p, const FluxPoint& flux, const HilbertSpec& spec,
                                  int ho_order = 6, bool odd_terms = false) {
    const HoModel model(spec);
    const DerivedParams d = model.derive(p, flux);
    const SpMat h = model.assemble(model.coefficients(d, ho_order));
    HamiltonianMatrix out{spec, Eigen::MatrixXd(h).cast<cplx>()};
    if (odd_terms)
        out.data += odd_potential(spec, d, p.E12 * std::sin(units::two_pi * flux.phi_e12), ho_order);
    return out;
}

/// Dispatches on the selector; the flux point must already be consistent (see invert_flux).
inline HamiltonianMatrix build(const CircuitParams& p, const FluxPoint& flux, const HilbertSpec& spec,
                               const ModelSelector& model) {
    model.validate();
    if (scope_of(spec) != model.scope) throw DomainError("Hilbert space does not match the model scope");
    return model.basis == Basis::charge ? build_charge(p, flux, spec) : build_ho(p, flux, spec, model.ho_order, model.odd_terms);
}

}  // namespace dtc
