// scf.hpp — restricted Hartree-Fock with a deterministic core guess and
// adaptive density damping.

#pragma once

#include "dqpe/chem/integrals.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dqpe::chem {

class ScfError : public std::runtime_error {
public:
    ScfError(const std::string& what, int iters, double energy, double delta_e, double comm)
        : std::runtime_error(what + " (iterations " + std::to_string(iters) + ", energy " +
                             std::to_string(energy) + ", |dE| " + std::to_string(delta_e) +
                             ", commutator " + std::to_string(comm) + ")"),
          iterations(iters), last_energy(energy), last_delta_e(delta_e),
          last_commutator(comm) {}
    int iterations;
    double last_energy;
    double last_delta_e;
    double last_commutator;
};

struct SCFResult {
    RealMatrix mo_coefficients;   // columns, S-orthonormal, sign-fixed
    RealVector orbital_energies;  // hartree, ascending
    double electronic_energy = 0.0;
    double nuclear_repulsion = 0.0;
    double total_energy = 0.0;
    RealMatrix fock_ao;
    RealMatrix density_ao;
    bool converged = false;
    int iterations = 0;
    double commutator_norm = 0.0;
    double delta_e = 0.0;
    std::vector<double> energy_history;  // electronic + nuclear, per accepted iterate
};

namespace detail {

inline RealMatrix symmetric_orthogonalizer(const RealMatrix& s) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(s);
    const RealVector& ev = es.eigenvalues();
    if (ev.minCoeff() < 1e-10)
        throw std::invalid_argument("rhf_scf: overlap matrix is not positive definite");
    return es.eigenvectors() * ev.cwiseInverse().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

inline RealMatrix two_electron_matrix(const AoIntegrals& ints, const RealMatrix& d) {
    const int n = ints.n;
    RealMatrix g = RealMatrix::Zero(n, n);
    for (int mu = 0; mu < n; ++mu)
        for (int nu = 0; nu < n; ++nu) {
            double acc = 0.0;
            for (int la = 0; la < n; ++la)
                for (int si = 0; si < n; ++si)
                    acc += d(la, si) *
                           (ints.g(mu, nu, si, la) - 0.5 * ints.g(mu, la, si, nu));
            g(mu, nu) = acc;
        }
    return g;
}

inline void fix_mo_signs(RealMatrix& c) {
    for (Eigen::Index p = 0; p < c.cols(); ++p) {
        Eigen::Index k;
        c.col(p).cwiseAbs().maxCoeff(&k);
        if (c(k, p) < 0.0) c.col(p) = -c.col(p);
    }
}

}  // namespace detail

inline SCFResult rhf_scf(const Geometry& geom, const AoIntegrals& ints, int max_iterations = 200) {
    const int n_elec = geom.n_electrons();
    if (n_elec <= 0)
        throw std::invalid_argument("rhf_scf: no electrons");
    if (n_elec % 2 != 0)
        throw std::invalid_argument("rhf_scf: restricted treatment needs an even electron count");
    const int n_occ = n_elec / 2;
    const int n = ints.n;
    if (n_occ > n)
        throw std::invalid_argument("rhf_scf: more electron pairs than basis functions");

    const RealMatrix x = detail::symmetric_orthogonalizer(ints.overlap);
    const RealMatrix hcore = ints.core();
    const double e_nuc = geom.nuclear_repulsion();

    const auto density_from_fock = [&](const RealMatrix& f, RealMatrix* c_out,
                                       RealVector* eps_out) {
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(RealMatrix(x.transpose() * f * x));
        RealMatrix c = x * es.eigenvectors();
        if (c_out) *c_out = c;
        if (eps_out) *eps_out = es.eigenvalues();
        const RealMatrix c_occ = c.leftCols(n_occ);
        return RealMatrix(2.0 * c_occ * c_occ.transpose());
    };

    RealMatrix d = density_from_fock(hcore, nullptr, nullptr);

    // Pulay mixing over the orthonormal-basis commutator residuals, with
    // plain density damping as the fallback when extrapolation misbehaves.
    std::vector<RealMatrix> fock_hist, err_hist;
    const auto diis_fock = [&](const RealMatrix& f, const RealMatrix& err) {
        constexpr std::size_t depth = 8;
        fock_hist.push_back(f);
        err_hist.push_back(err);
        if (fock_hist.size() > depth) {
            fock_hist.erase(fock_hist.begin());
            err_hist.erase(err_hist.begin());
        }
        const int m = static_cast<int>(fock_hist.size());
        if (m < 2) return f;
        RealMatrix b = RealMatrix::Zero(m + 1, m + 1);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                b(i, j) = (err_hist[static_cast<std::size_t>(i)]
                               .cwiseProduct(err_hist[static_cast<std::size_t>(j)]))
                              .sum();
        for (int i = 0; i < m; ++i) b(i, m) = b(m, i) = -1.0;
        RealVector rhs = RealVector::Zero(m + 1);
        rhs[m] = -1.0;
        const RealVector coef = b.fullPivLu().solve(rhs);
        if (!coef.allFinite()) return f;
        RealMatrix mixed = RealMatrix::Zero(f.rows(), f.cols());
        for (int i = 0; i < m; ++i) mixed += coef[i] * fock_hist[static_cast<std::size_t>(i)];
        return mixed;
    };

    SCFResult res;
    res.nuclear_repulsion = e_nuc;
    double e_prev = 0.0;
    double mix = 1.0;
    for (int iter = 1; iter <= max_iterations; ++iter) {
        const RealMatrix f = hcore + detail::two_electron_matrix(ints, d);
        const double e_elec = 0.5 * (d.cwiseProduct(hcore + f)).sum();
        const double e_total = e_elec + e_nuc;
        const RealMatrix residual = f * d * ints.overlap - ints.overlap * d * f;
        const double comm = residual.cwiseAbs().maxCoeff();
        const double de = iter == 1 ? 1.0 : e_total - e_prev;

        res.iterations = iter;
        res.commutator_norm = comm;
        res.delta_e = std::abs(de);
        res.energy_history.push_back(e_total);

        if (iter > 1 && std::abs(de) <= 1e-12 && comm <= 1e-10) {
            RealMatrix c;
            RealVector eps;
            density_from_fock(f, &c, &eps);
            detail::fix_mo_signs(c);
            res.mo_coefficients = c;
            res.orbital_energies = eps;
            res.electronic_energy = e_elec;
            res.total_energy = e_total;
            res.fock_ao = f;
            res.density_ao = d;
            res.converged = true;
            return res;
        }

        // Pulay extrapolation carries the iteration; damping is the fallback
        // while the residual is still large or extrapolation stagnates.
        if (iter > 1 && de > 1e-12 && fock_hist.size() < 2)
            mix = std::max(0.05, 0.5 * mix);
        else if (comm < 1e-1)
            mix = std::min(1.0, 1.5 * mix);

        const RealMatrix f_use =
            diis_fock(f, RealMatrix(x.transpose() * residual * x));
        const RealMatrix d_new = density_from_fock(f_use, nullptr, nullptr);
        d = (1.0 - mix) * d + mix * d_new;
        e_prev = e_total;
    }
    throw ScfError("rhf_scf: no convergence after damped iteration", res.iterations,
                   e_prev, res.delta_e, res.commutator_norm);
}

}  // namespace dqpe::chem
