// fock.hpp: truncated single-mode operators (ladder, Cooper-pair number and tunneling)
// and their Kronecker embedding into a labeled multi-mode Hilbert space.

#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include "dtc/circuit.hpp"
#include "dtc/errors.hpp"

namespace dtc {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<cplx>;

enum class BasisKind { fock, charge };

/// Ordered modes with their truncation. Charge modes hold 2n+1 states |-n>..|n>.
struct HilbertSpec {
    std::vector<Mode> modes;
    std::vector<int> dims;
    std::vector<BasisKind> kinds;
    std::size_t cap = 20000;

    static HilbertSpec fock(std::vector<Mode> modes, std::vector<int> dims) {
        HilbertSpec s;
        s.kinds.assign(modes.size(), BasisKind::fock);
        s.modes = std::move(modes);
        s.dims = std::move(dims);
        s.validate();
        return s;
    }

    static HilbertSpec charge(std::vector<Mode> modes, int n_max) {
        HilbertSpec s;
        s.kinds.assign(modes.size(), BasisKind::charge);
        s.dims.assign(modes.size(), 2 * n_max + 1);
        s.modes = std::move(modes);
        s.validate();
        return s;
    }

    static HilbertSpec full_fock(int da = 5, int d1 = 6, int d2 = 6, int db = 5) {
        return fock({Mode::a, Mode::c1, Mode::c2, Mode::b}, {da, d1, d2, db});
    }
    static HilbertSpec coupler_fock(int d = 8) { return fock({Mode::c1, Mode::c2}, {d, d}); }

    std::size_t size() const { return modes.size(); }

    std::size_t total() const {
        std::size_t t = 1;
        for (int d : dims) t *= static_cast<std::size_t>(d);
        return t;
    }

    bool has(Mode m) const {
        for (Mode x : modes)
            if (x == m) return true;
        return false;
    }

    int position(Mode m) const {
        for (std::size_t i = 0; i < modes.size(); ++i)
            if (modes[i] == m) return static_cast<int>(i);
        throw DomainError("mode '" + std::string(mode_name(m)) + "' is not part of this Hilbert space");
    }

    int charge_cutoff(int pos) const { return (dims[pos] - 1) / 2; }

    void validate() const {
        if (modes.empty()) throw DomainError("Hilbert space has no modes");
        if (dims.size() != modes.size() || kinds.size() != modes.size())
            throw DomainError("Hilbert space dims/kinds do not match the mode list");
        for (std::size_t i = 0; i < modes.size(); ++i) {
            if (dims[i] < 2) throw DomainError("every mode needs at least 2 levels");
            if (kinds[i] == BasisKind::charge && dims[i] % 2 == 0)
                throw DomainError("charge modes need an odd number of states");
            for (std::size_t j = 0; j < i; ++j)
                if (modes[i] == modes[j]) throw DomainError("duplicate mode in Hilbert space");
        }
        if (total() > cap)
            throw DomainError("Hilbert space dimension " + std::to_string(total()) + " exceeds cap " +
                              std::to_string(cap));
    }

    /// Per-mode occupation (Fock level, or charge n) of a flat basis index.
    std::vector<int> occupations(std::size_t index) const {
        std::vector<int> occ(modes.size());
        for (std::size_t i = modes.size(); i-- > 0;) {
            occ[i] = static_cast<int>(index % dims[i]);
            index /= dims[i];
            if (kinds[i] == BasisKind::charge) occ[i] -= charge_cutoff(static_cast<int>(i));
        }
        return occ;
    }

    std::size_t index_of(const std::vector<int>& occ) const {
        if (occ.size() != modes.size()) throw DomainError("occupation vector has the wrong length");
        std::size_t idx = 0;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            int level = occ[i];
            if (kinds[i] == BasisKind::charge) level += charge_cutoff(static_cast<int>(i));
            if (level < 0 || level >= dims[i]) throw DomainError("occupation outside the truncation");
            idx = idx * dims[i] + level;
        }
        return idx;
    }

    /// Ket label such as |1000> (Fock) or |0,-1> (charge).
    std::string label(std::size_t index) const {
        const auto occ = occupations(index);
        bool compact = true;
        for (std::size_t i = 0; i < occ.size(); ++i)
            if (kinds[i] == BasisKind::charge || occ[i] > 9) compact = false;
        std::string s = "|";
        for (std::size_t i = 0; i < occ.size(); ++i) {
            if (!compact && i) s += ",";
            s += std::to_string(occ[i]);
        }
        return s + ">";
    }

    /// Parses a Fock ket such as "|1001>" or "1001" into a flat index.
    std::size_t parse_label(std::string s) const {
        if (!s.empty() && s.front() == '|') s.erase(0, 1);
        if (!s.empty() && s.back() == '>') s.pop_back();
        std::vector<int> occ;
        if (s.find(',') != std::string::npos) {
            std::size_t start = 0;
            while (start <= s.size()) {
                const auto end = s.find(',', start);
                occ.push_back(std::stoi(s.substr(start, end - start)));
                if (end == std::string::npos) break;
                start = end + 1;
            }
        } else {
            for (char c : s) {
                if (c < '0' || c > '9') throw DomainError("cannot parse ket label '" + s + "'");
                occ.push_back(c - '0');
            }
        }
        return index_of(occ);
    }

    /// Total excitation number of a Fock basis state.
    int excitations(std::size_t index) const {
        int n = 0;
        for (int v : occupations(index)) n += v;
        return n;
    }
};

namespace local {

inline Eigen::MatrixXd annihilation(int d) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Eigen::MatrixXd number(int d) {
    Eigen::MatrixXd n = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k < d; ++k) n(k, k) = k;
    return n;
}

/// Diagonal Cooper-pair number -n..n.
inline Eigen::MatrixXd charge_number(int d) {
    const int nmax = (d - 1) / 2;
    Eigen::MatrixXd n = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k < d; ++k) n(k, k) = k - nmax;
    return n;
}

/// Charge-raising operator sum_m |m+1><m|, i.e. exp(i phi).
inline Eigen::MatrixXd charge_raise(int d) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k + 1 < d; ++k) e(k + 1, k) = 1.0;
    return e;
}

/// cos(phi + theta) with theta in radians.
inline Eigen::MatrixXcd cos_phase(int d, double theta) {
    const Eigen::MatrixXcd up = charge_raise(d).cast<cplx>() * std::polar(1.0, theta);
    return 0.5 * (up + up.adjoint());
}

/// sin(phi + theta) with theta in radians.
inline Eigen::MatrixXcd sin_phase(int d, double theta) {
    const Eigen::MatrixXcd up = charge_raise(d).cast<cplx>() * std::polar(1.0, theta);
    return (up - up.adjoint()) / cplx(0.0, 2.0);
}

/// Crops the top-left d x d block of an operator computed in a larger space.
inline Eigen::MatrixXd crop(const Eigen::MatrixXd& m, int d) { return m.topLeftCorner(d, d); }

/// Power of (a + a^dag) or (a - a^dag) on a d-level mode. The product is formed in a space
/// `pad` levels larger and cropped, so matrix elements inside the truncation are exact.
inline Eigen::MatrixXd quadrature_power(int d, int power, bool charge_like, int pad = 6) {
    const int big = d + pad;
    const Eigen::MatrixXd a = annihilation(big);
    const Eigen::MatrixXd q = charge_like ? Eigen::MatrixXd(a + a.transpose()) : Eigen::MatrixXd(a - a.transpose());
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(big, big);
    for (int k = 0; k < power; ++k) r = r * q;
    return crop(r, d);
}

}  // namespace local

namespace detail {

template <typename Scalar>
Eigen::SparseMatrix<Scalar> sparse_identity(int d) {
    Eigen::SparseMatrix<Scalar> id(d, d);
    id.setIdentity();
    return id;
}

}  // namespace detail

/// Embeds a product of local operators (one per listed mode, identity elsewhere).
template <typename Scalar, typename Local>
Eigen::SparseMatrix<Scalar> embed(const HilbertSpec& spec,
                                  const std::vector<std::pair<Mode, Local>>& factors) {
    std::vector<const Local*> slot(spec.size(), nullptr);
    for (const auto& [mode, op] : factors) {
        const int pos = spec.position(mode);
        if (op.rows() != spec.dims[pos] || op.cols() != spec.dims[pos])
            throw DomainError("local operator dimension does not match mode '" +
                              std::string(mode_name(mode)) + "'");
        if (slot[pos]) throw DomainError("mode listed twice in one product");
        slot[pos] = &op;
    }
    Eigen::SparseMatrix<Scalar> result = detail::sparse_identity<Scalar>(1);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        Eigen::SparseMatrix<Scalar> factor;
        if (slot[i])
            factor = slot[i]->template cast<Scalar>().sparseView(0.0, 1e-300);
        else
            factor = detail::sparse_identity<Scalar>(spec.dims[i]);
        Eigen::SparseMatrix<Scalar> next = Eigen::kroneckerProduct(result, factor);
        result = std::move(next);
    }
    result.makeCompressed();
    return result;
}

inline SpMat embed(const HilbertSpec& spec, Mode mode, const Eigen::MatrixXd& op) {
    return embed<double, Eigen::MatrixXd>(spec, {{mode, op}});
}

/// Annihilation and creation operators of one Fock mode, embedded densely.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> ladder(const HilbertSpec& spec, Mode mode) {
    const int pos = spec.position(mode);
    if (spec.kinds[pos] != BasisKind::fock) throw DomainError("ladder operators need a Fock mode");
    const Eigen::MatrixXd a = embed(spec, mode, local::annihilation(spec.dims[pos]));
    return {a, a.transpose()};
}

struct ChargeOps {
    Eigen::MatrixXd n;
    Eigen::MatrixXcd cos;
    Eigen::MatrixXcd sin;
};

/// Cooper-pair number and cos/sin of (phase + theta) for one charge mode, embedded densely.
inline ChargeOps charge_ops(const HilbertSpec& spec, Mode mode, double theta = 0.0) {
    const int pos = spec.position(mode);
    if (spec.kinds[pos] != BasisKind::charge) throw DomainError("charge operators need a charge mode");
    const int d = spec.dims[pos];
    ChargeOps ops;
    ops.n = embed(spec, mode, local::charge_number(d));
    ops.cos = embed<cplx, Eigen::MatrixXcd>(spec, {{mode, local::cos_phase(d, theta)}});
    ops.sin = embed<cplx, Eigen::MatrixXcd>(spec, {{mode, local::sin_phase(d, theta)}});
    return ops;
}

/// Dense Hermitian operator in GHz on a labeled space.
struct HamiltonianMatrix {
    HilbertSpec spec;
    Eigen::MatrixXcd data;

    double hermiticity_error() const { return (data - data.adjoint()).cwiseAbs().maxCoeff(); }
    bool is_real(double tol = 0.0) const { return data.imag().cwiseAbs().maxCoeff() <= tol; }
};

/// One term of a Hamiltonian: coefficient times a product of local operators.
struct Term {
    std::vector<std::pair<Mode, Eigen::MatrixXcd>> factors;
    cplx coefficient{1.0, 0.0};
};

inline HamiltonianMatrix kron_assemble(const HilbertSpec& spec, const std::vector<Term>& terms) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.total());
    SpMatC sum(n, n);
    for (const Term& t : terms) sum += t.coefficient * embed<cplx, Eigen::MatrixXcd>(spec, t.factors);
    HamiltonianMatrix h{spec, Eigen::MatrixXcd(sum)};
    const double err = h.hermiticity_error();
    if (err > 1e-10) throw DomainError("assembled operator is not Hermitian (error " + std::to_string(err) + " GHz)");
    return h;
}

}  // namespace dtc
