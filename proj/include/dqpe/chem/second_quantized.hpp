// second_quantized.hpp — molecular-orbital integrals as a second-quantized
// Hamiltonian. Two-electron integrals are kept in chemist convention (pq|rs).

#pragma once

#include "dqpe/chem/scf.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace dqpe::chem {

struct SecondQuantizedHamiltonian {
    RealMatrix one_body;           // h_pq over spatial orbitals, hartree
    std::vector<double> two_body;  // (pq|rs) chemist, dense n^4
    double core_energy = 0.0;
    int n_orbitals = 0;
    int n_electrons_hint = -1;  // from imports, when available
    int ms2_hint = 0;
    static constexpr const char* convention = "chemist";

    int n_spin_orbitals() const { return 2 * n_orbitals; }

    double g(int p, int q, int r, int s) const {
        const int n = n_orbitals;
        return two_body[static_cast<std::size_t>(((p * n + q) * n + r) * n + s)];
    }
    double& g(int p, int q, int r, int s) {
        const int n = n_orbitals;
        return two_body[static_cast<std::size_t>(((p * n + q) * n + r) * n + s)];
    }
};

// AO -> MO with four quarter transforms.
inline SecondQuantizedHamiltonian mo_transform(const SCFResult& scf, const AoIntegrals& ints) {
    if (!scf.converged)
        throw std::invalid_argument("mo_transform: SCF result is not converged");
    const int n = ints.n;
    const RealMatrix& c = scf.mo_coefficients;

    SecondQuantizedHamiltonian sq;
    sq.n_orbitals = n;
    sq.one_body = c.transpose() * ints.core() * c;
    sq.two_body.assign(static_cast<std::size_t>(n) * n * n * n, 0.0);

    const auto idx = [n](int a, int b, int cc, int d) {
        return static_cast<std::size_t>(((a * n + b) * n + cc) * n + d);
    };
    std::vector<double> t1(sq.two_body.size(), 0.0), t2(sq.two_body.size(), 0.0);

    for (int p = 0; p < n; ++p)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double acc = 0.0;
                    for (int i = 0; i < n; ++i) acc += c(i, p) * ints.g(i, j, k, l);
                    t1[idx(p, j, k, l)] = acc;
                }
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) acc += c(j, q) * t1[idx(p, j, k, l)];
                    t2[idx(p, q, k, l)] = acc;
                }
    std::fill(t1.begin(), t1.end(), 0.0);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int l = 0; l < n; ++l) {
                    double acc = 0.0;
                    for (int k = 0; k < n; ++k) acc += c(k, r) * t2[idx(p, q, k, l)];
                    t1[idx(p, q, r, l)] = acc;
                }
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) {
                    double acc = 0.0;
                    for (int l = 0; l < n; ++l) acc += c(l, s) * t1[idx(p, q, r, l)];
                    sq.two_body[idx(p, q, r, s)] = acc;
                }

    // restore the permutational symmetries exactly; the quarter transforms
    // leave ulp-level asymmetries behind
    sq.one_body = 0.5 * (sq.one_body + sq.one_body.transpose()).eval();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
            for (int k = 0; k <= i; ++k)
                for (int l = 0; l <= (k == i ? j : k); ++l) {
                    const std::array<std::array<int, 4>, 8> images = {{{i, j, k, l},
                                                                       {j, i, k, l},
                                                                       {i, j, l, k},
                                                                       {j, i, l, k},
                                                                       {k, l, i, j},
                                                                       {l, k, i, j},
                                                                       {k, l, j, i},
                                                                       {l, k, j, i}}};
                    double avg = 0.0;
                    for (const auto& im : images) avg += sq.two_body[idx(im[0], im[1], im[2], im[3])];
                    avg /= 8.0;
                    for (const auto& im : images) sq.two_body[idx(im[0], im[1], im[2], im[3])] = avg;
                }
    return sq;
}

}  // namespace dqpe::chem
