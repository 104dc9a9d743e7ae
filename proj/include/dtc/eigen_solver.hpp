// eigen_solver.hpp: thin LAPACKE wrappers for dense symmetric / Hermitian eigenproblems.
// dsyevr/zheevr compute only the requested lowest eigenpairs, which is several times
// faster than a full decomposition for the sizes used here.

#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "dtc/errors.hpp"

namespace dtc {

template <typename Scalar>
struct EigenSystem {
    Eigen::VectorXd values;  // ascending
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // columns
};

/// Lowest `count` eigenpairs of a real symmetric matrix (all when count <= 0).
inline EigenSystem<double> eigh(Eigen::MatrixXd h, int count = -1, bool want_vectors = true) {
    const lapack_int n = static_cast<lapack_int>(h.rows());
    EigenSystem<double> out;
    if (n == 0) return out;
    const bool partial = count > 0 && count < n;
    const lapack_int m_req = partial ? count : n;
    out.values.resize(n);
    if (want_vectors) out.vectors.resize(n, m_req);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', partial ? 'I' : 'A', 'L', n,
                                           h.data(), n, 0.0, 0.0, 1, m_req, 0.0, &found, out.values.data(),
                                           want_vectors ? out.vectors.data() : nullptr, n, support.data());
    if (info != 0) throw NumericalError("dsyevr failed with info " + std::to_string(info));
    out.values.conservativeResize(found);
    if (want_vectors) out.vectors.conservativeResize(n, found);
    return out;
}

/// Lowest `count` eigenpairs of a complex Hermitian matrix (all when count <= 0).
inline EigenSystem<std::complex<double>> eigh(Eigen::MatrixXcd h, int count = -1, bool want_vectors = true) {
    const lapack_int n = static_cast<lapack_int>(h.rows());
    EigenSystem<std::complex<double>> out;
    if (n == 0) return out;
    const bool partial = count > 0 && count < n;
    const lapack_int m_req = partial ? count : n;
    out.values.resize(n);
    if (want_vectors) out.vectors.resize(n, m_req);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
    lapack_int found = 0;
    auto* a = reinterpret_cast<lapack_complex_double*>(h.data());
    auto* z = want_vectors ? reinterpret_cast<lapack_complex_double*>(out.vectors.data()) : nullptr;
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', partial ? 'I' : 'A', 'L', n, a,
                                           n, 0.0, 0.0, 1, m_req, 0.0, &found, out.values.data(), z, n,
                                           support.data());
    if (info != 0) throw NumericalError("zheevr failed with info " + std::to_string(info));
    out.values.conservativeResize(found);
    if (want_vectors) out.vectors.conservativeResize(n, found);
    return out;
}

}  // namespace dtc
