// linalg.hpp — dense Hermitian eigendecomposition, overlaps, and the
// parametrized-operator contract shared by the rest of the library.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dqpe {

using Complex       = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector    = Eigen::VectorXd;
using RealMatrix    = Eigen::MatrixXd;

// Dense eigensolves are capped; larger registers are out of scope.
inline constexpr int max_eigen_dimension = 1 << 10;

class NonHermitianError : public std::invalid_argument {
public:
    NonHermitianError(double defect, double tolerance)
        : std::invalid_argument("matrix is not Hermitian: max asymmetry " +
                                std::to_string(defect) + " exceeds tolerance " +
                                std::to_string(tolerance)),
          max_asymmetry(defect) {}
    double max_asymmetry;
};

class DegeneracyError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Max |H(i,j) - conj(H(j,i))| over all entries.
inline double hermiticity_defect(const ComplexMatrix& h) {
    double defect = 0.0;
    for (Eigen::Index j = 0; j < h.cols(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            defect = std::max(defect, std::abs(h(i, j) - std::conj(h(j, i))));
    return defect;
}

struct EigenSystem {
    RealVector eigenvalues;       // ascending
    ComplexMatrix eigenvectors;   // orthonormal columns, phase-fixed

    int dimension() const { return static_cast<int>(eigenvalues.size()); }
};

namespace detail {

// Rotate each column so its largest-magnitude component is real positive.
// Eigen-solvers return arbitrary phases; without a fixed gauge, parameter
// sweeps of eigenvector-dependent quantities jump discontinuously.
inline void fix_column_phases(ComplexMatrix& v) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        Eigen::Index k = 0;
        double best = 0.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const double m = std::abs(v(i, c));
            if (m > best) {
                best = m;
                k = i;
            }
        }
        if (best > 0.0)
            v.col(c) *= std::conj(v(k, c)) / best;
    }
}

// Deterministic order for exactly-tied eigenvalues: compare phase-fixed
// eigenvectors at their first differing component (larger real part first).
inline bool column_precedes(const ComplexMatrix& v, Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const Complex x = v(i, a), y = v(i, b);
        if (std::abs(x.real() - y.real()) > 1e-12) return x.real() > y.real();
        if (std::abs(x.imag() - y.imag()) > 1e-12) return x.imag() > y.imag();
    }
    return false;
}

}  // namespace detail

inline EigenSystem eigendecompose(const ComplexMatrix& h) {
    if (h.rows() != h.cols())
        throw std::invalid_argument("eigendecompose: matrix must be square");
    if (h.rows() > max_eigen_dimension)
        throw std::invalid_argument("eigendecompose: dimension " +
                                    std::to_string(h.rows()) + " exceeds cap " +
                                    std::to_string(max_eigen_dimension));

    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    const double defect = hermiticity_defect(h);
    if (defect > tol)
        throw NonHermitianError(defect, tol);

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(
        ComplexMatrix(0.5 * (h + h.adjoint())));
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecompose: solver failed to converge");

    EigenSystem sys{solver.eigenvalues(), solver.eigenvectors()};
    detail::fix_column_phases(sys.eigenvectors);

    // Stable-sort runs of exactly equal eigenvalues by the component convention.
    Eigen::Index i = 0;
    while (i < sys.eigenvalues.size()) {
        Eigen::Index j = i + 1;
        while (j < sys.eigenvalues.size() && sys.eigenvalues[j] == sys.eigenvalues[i]) ++j;
        if (j - i > 1) {
            std::vector<Eigen::Index> order(static_cast<std::size_t>(j - i));
            std::iota(order.begin(), order.end(), i);
            std::stable_sort(order.begin(), order.end(),
                             [&](Eigen::Index a, Eigen::Index b) {
                                 return detail::column_precedes(sys.eigenvectors, a, b);
                             });
            ComplexMatrix block(sys.eigenvectors.rows(), j - i);
            for (Eigen::Index c = 0; c < j - i; ++c)
                block.col(c) = sys.eigenvectors.col(order[static_cast<std::size_t>(c)]);
            sys.eigenvectors.middleCols(i, j - i) = block;
        }
        i = j;
    }
    return sys;
}

// |<u|psi>|^2 for every eigenstate; psi must be normalized.
inline RealVector overlaps(const ComplexVector& psi, const EigenSystem& eig) {
    if (psi.size() != eig.eigenvectors.rows())
        throw std::invalid_argument("overlaps: dimension mismatch");
    if (std::abs(psi.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("overlaps: state is not normalized");
    return (eig.eigenvectors.adjoint() * psi).cwiseAbs2();
}

// Contiguous [begin, end) index ranges of eigenvalues closer than gap_tol.
inline std::vector<std::pair<int, int>> degenerate_clusters(const RealVector& eigenvalues,
                                                            double gap_tol = 1e-9) {
    std::vector<std::pair<int, int>> clusters;
    const int n = static_cast<int>(eigenvalues.size());
    int begin = 0;
    for (int i = 1; i <= n; ++i) {
        if (i == n || eigenvalues[i] - eigenvalues[i - 1] > gap_tol) {
            clusters.emplace_back(begin, i);
            begin = i;
        }
    }
    return clusters;
}

// A Hermitian operator family H(x). The evaluator must be deterministic in x.
// When no analytic directional derivative is supplied, gradient routines fall
// back to central differences of the evaluator.
struct ParametrizedHamiltonian {
    int n_parameters = 0;
    std::function<ComplexMatrix(const RealVector&)> evaluate;
    // dH/dx_j; may be empty.
    std::function<ComplexMatrix(const RealVector&, int)> derivative;
};

}  // namespace dqpe
