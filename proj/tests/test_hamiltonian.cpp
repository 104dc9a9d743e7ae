#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dtc/eigen_solver.hpp"
#include "dtc/hamiltonian.hpp"
#include "dtc/presets.hpp"

using namespace dtc;

namespace {

Eigen::VectorXd levels(const HamiltonianMatrix& h, int n) {
    const Eigen::VectorXd e = eigh(h.data, n, false).values;
    return (e.array() - e(0)).matrix();
}

CircuitParams coupler(double E1, double E2, double E12, double C1, double C2, double C12, double Cq = 8.0) {
    BranchCapacitances b;
    b.Ca = b.Cb = 70.0;
    b.C1 = C1;
    b.C2 = C2;
    b.C12 = C12;
    b.Ca1 = b.Cb2 = Cq;
    return CircuitParams::from_branches(E1, E2, E12, 12.0, 12.5, b);
}

const HilbertSpec kCharge = HilbertSpec::charge({Mode::c1, Mode::c2}, 14);

}  // namespace

TEST(hamiltonian, hermitian_in_both_bases) {
    const CircuitParams p = design_static(design_fig2a());
    const FluxPoint f = invert_flux(p, 0.17);
    EXPECT_LT(build_ho(p, f, HilbertSpec::full_fock(3, 4, 4, 3), 6, true).hermiticity_error(), 1e-12);
    EXPECT_LT(build_charge(p, f, HilbertSpec::charge(std::vector<Mode>(kAllModes.begin(), kAllModes.end()), 2))
                  .hermiticity_error(),
              1e-12);
    EXPECT_LT(build_charge(p, f, kCharge).hermiticity_error(), 1e-12);
}

TEST(hamiltonian, even_expansion_is_real) {
    const CircuitParams p = design_static(design_fig2a());
    EXPECT_TRUE(build_ho(p, invert_flux(p, 0.3), HilbertSpec::full_fock(3, 4, 4, 3)).is_real());
}

TEST(hamiltonian, uncoupled_charge_model_is_direct_sum) {
    CircuitParams p = coupler(13.0, 11.0, 1e-9, 100.0, 120.0, 0.0, 0.0);
    p.E12 = 0.0;
    const FluxPoint f{0.2, 0.2};
    const int n = 6;
    const Eigen::VectorXd e = eigh(build_charge(p, f, kCharge).data, n, false).values;
    auto single = [&](double ej, double c) {
        const int d = 29;
        const double ec = units::charging_energy_ghz(c);
        const Eigen::MatrixXd q = local::charge_number(d);
        std::vector<Term> t;
        t.push_back({{{Mode::a, Eigen::MatrixXcd((4.0 * ec * q * q).cast<cplx>())}}, 1.0});
        t.push_back({{{Mode::a, local::cos_phase(d, 0.0)}}, -ej});
        return eigh(kron_assemble(HilbertSpec::charge({Mode::a}, 14), t).data, n, false).values;
    };
    const Eigen::VectorXd e1 = single(13.0, 100.0), e2 = single(11.0, 120.0);
    std::vector<double> sums;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sums.push_back(e1(i) + e2(j));
    std::sort(sums.begin(), sums.end());
    for (int k = 0; k < n; ++k) EXPECT_NEAR(e(k), sums[k], 1e-9) << k;
}

TEST(hamiltonian, charge_model_is_flux_periodic) {
    const CircuitParams p = coupler(13.0, 13.0, 1.3, 100.0, 100.0, 2.0);
    for (double phi : {0.1, 0.37}) {
        const Eigen::VectorXd a = levels(build_charge(p, FluxPoint{phi, 0.0}, kCharge), 6);
        const Eigen::VectorXd b = levels(build_charge(p, FluxPoint{phi + 1.0, 0.0}, kCharge), 6);
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(hamiltonian, harmonic_order_is_a_ladder) {
    const CircuitParams p = preset_figA2();
    const FluxPoint f = flux_from_junction(p, 0.1);
    const HilbertSpec s = HilbertSpec::fock({Mode::c1}, {8});
    const double w = derive_params(p, f, Scope::coupler_only).omega[1];
    const Eigen::VectorXd e = levels(build_ho(p, f, s, 2), 8);
    for (int k = 1; k < 8; ++k) EXPECT_NEAR(e(k), k * w, 1e-12);
}

TEST(hamiltonian, quartic_order_anharmonicity) {
    // first order in the quartic term: <n|(a - a^dag)^4|n> = 6n^2 + 6n + 3 gives exactly -EC;
    // the charge-basis transmon with the same EJ and EC is the reference
    const CircuitParams p = preset_figA2();
    const FluxPoint f{0.0, 0.0};
    const DerivedParams d = derive_params(p, f, Scope::coupler_only);
    const HamiltonianMatrix h = build_ho(p, f, HilbertSpec::fock({Mode::c1}, {10}), 4);
    const double first_order = (h.data(2, 2) - 2.0 * h.data(1, 1) + h.data(0, 0)).real();
    EXPECT_NEAR(first_order, -d.EC[1], 1e-12);

    const int dim = 41;
    const Eigen::MatrixXd n = local::charge_number(dim);
    std::vector<Term> t;
    t.push_back({{{Mode::a, Eigen::MatrixXcd((4.0 * d.EC[1] * n * n).cast<cplx>())}}, 1.0});
    t.push_back({{{Mode::a, local::cos_phase(dim, 0.0)}}, -d.EJ[1]});
    const Eigen::VectorXd e = levels(kron_assemble(HilbertSpec::charge({Mode::a}, 20), t), 3);
    EXPECT_NEAR(first_order / (e(2) - 2.0 * e(1)), 1.0, 0.1);
}

TEST(hamiltonian, oscillator_basis_matches_charge_basis) {
    // random coupler-only circuits; the charge basis is the reference
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ej(12.0, 16.0), e12(0.6, 1.6), c(85.0, 115.0), c12(0.0, 3.0), phi(0.0, 0.45);
    const HilbertSpec fock = HilbertSpec::coupler_fock(8);
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        const CircuitParams p = coupler(ej(rng), ej(rng), e12(rng), c(rng), c(rng), c12(rng));
        const FluxPoint f = invert_flux(p, phi(rng));
        const Eigen::VectorXd ec = levels(build_charge(p, f, kCharge), 3);
        const Eigen::VectorXd eh = levels(build_ho(p, f, fock, 6, true), 3);
        worst = std::max({worst, std::abs(ec(1) - eh(1)), std::abs(ec(2) - eh(2))});
    }
    EXPECT_LT(worst, 2e-3);
}

TEST(hamiltonian, expansion_order_converges) {
    const CircuitParams p = preset_figA2();
    const FluxPoint f{0.0, 0.0};
    const Eigen::VectorXd ref = levels(build_charge(p, f, kCharge), 3);
    const HilbertSpec fock = HilbertSpec::coupler_fock(8);
    double prev = 1e9;
    for (int order : {2, 4, 6}) {
        const Eigen::VectorXd e = levels(build_ho(p, f, fock, order), 3);
        const double err = std::max(std::abs(e(1) - ref(1)), std::abs(e(2) - ref(2)));
        EXPECT_LT(err, prev) << order;
        prev = err;
    }
}

TEST(hamiltonian, odd_terms_vanish_at_zero_flux) {
    const CircuitParams p = preset_figA2();
    const HilbertSpec fock = HilbertSpec::coupler_fock(6);
    const HamiltonianMatrix even = build_ho(p, FluxPoint{0.0, 0.0}, fock, 6, false);
    const HamiltonianMatrix odd = build_ho(p, FluxPoint{0.0, 0.0}, fock, 6, true);
    EXPECT_LT((even.data - odd.data).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(hamiltonian, oscillator_model_conserves_parity) {
    const CircuitParams p = design_static(design_fig2a());
    const HoModel m(HilbertSpec::full_fock(3, 4, 4, 3));
    const std::vector<double> c = m.coefficients(m.derive(p, invert_flux(p, 0.2)));
    const Eigen::MatrixXd h = Eigen::MatrixXd(m.assemble(c));
    const HilbertSpec& s = m.spec();
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            if (h(i, j) != 0.0) {
                ASSERT_EQ(s.excitations(i) % 2, s.excitations(j) % 2);
            }
    // the sectors hold the same spectrum as the full matrix
    Eigen::VectorXd full = eigh(h, 6, false).values;
    std::vector<double> sec;
    for (int par : {0, 1}) {
        const Eigen::VectorXd e = eigh(m.assemble_sector(c, par), 6, false).values;
        sec.insert(sec.end(), e.data(), e.data() + e.size());
    }
    std::sort(sec.begin(), sec.end());
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(full(k), sec[k], 1e-10);
}

TEST(hamiltonian, selector_checks) {
    const CircuitParams p = preset_figA2();
    ModelSelector sel;
    sel.ho_order = 3;
    EXPECT_THROW(build(p, FluxPoint{}, HilbertSpec::full_fock(2, 2, 2, 2), sel), DomainError);
    sel.ho_order = 6;
    EXPECT_THROW(build(p, FluxPoint{}, HilbertSpec::coupler_fock(3), sel), DomainError);
    EXPECT_THROW(build_charge(p, FluxPoint{}, HilbertSpec::coupler_fock(3)), DomainError);
}
