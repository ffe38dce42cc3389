// Test-only oracle: full CI over Slater determinants via the Slater-Condon
// rules. Deliberately independent of the qubit-operator assembly it checks:
// determinants are bitmasks with spin orbital p at bit p (LSB first), matrix
// elements come from the excitation-degree rules, and phases from explicit
// operator reordering.

#pragma once

#include "dqpe/chem/second_quantized.hpp"
#include "dqpe/linalg.hpp"

#include <bit>
#include <cstdint>
#include <vector>

namespace fci_oracle {

using dqpe::RealMatrix;
using dqpe::RealVector;
using dqpe::chem::SecondQuantizedHamiltonian;

inline int spin_of(int so) { return so & 1; }
inline int spatial_of(int so) { return so >> 1; }

inline double h_so(const SecondQuantizedHamiltonian& sq, int p, int q) {
    if (spin_of(p) != spin_of(q)) return 0.0;
    return sq.one_body(spatial_of(p), spatial_of(q));
}

// physicist <pq|rs> with spin integration; chemist (pr|qs) underneath
inline double g_phys(const SecondQuantizedHamiltonian& sq, int p, int q, int r, int s) {
    if (spin_of(p) != spin_of(r) || spin_of(q) != spin_of(s)) return 0.0;
    return sq.g(spatial_of(p), spatial_of(r), spatial_of(q), spatial_of(s));
}

inline double g_antisym(const SecondQuantizedHamiltonian& sq, int p, int q, int r, int s) {
    return g_phys(sq, p, q, r, s) - g_phys(sq, p, q, s, r);
}

inline std::vector<int> occupied_list(std::uint32_t det, int n_so) {
    std::vector<int> occ;
    for (int p = 0; p < n_so; ++p)
        if (det & (std::uint32_t{1} << p)) occ.push_back(p);
    return occ;
}

// phase of annihilating spin orbital p from det (must be occupied)
inline int annihilation_phase(std::uint32_t det, int p) {
    const std::uint32_t below = det & ((std::uint32_t{1} << p) - 1);
    return std::popcount(below) % 2 ? -1 : 1;
}

inline double matrix_element(const SecondQuantizedHamiltonian& sq, std::uint32_t d1,
                             std::uint32_t d2, int n_so) {
    const std::uint32_t diff = d1 ^ d2;
    const int degree = std::popcount(diff) / 2;
    if (degree > 2) return 0.0;

    if (degree == 0) {
        const auto occ = occupied_list(d1, n_so);
        double e = 0.0;
        for (int i : occ) e += h_so(sq, i, i);
        for (std::size_t a = 0; a < occ.size(); ++a)
            for (std::size_t b = a + 1; b < occ.size(); ++b)
                e += g_antisym(sq, occ[a], occ[b], occ[a], occ[b]);
        return e;
    }

    if (degree == 1) {
        const std::uint32_t from_mask = d1 & diff, to_mask = d2 & diff;
        const int i = std::countr_zero(from_mask);
        const int a = std::countr_zero(to_mask);
        // phase: remove i from d1, add a
        int sign = annihilation_phase(d1, i);
        const std::uint32_t mid = d1 & ~(std::uint32_t{1} << i);
        sign *= annihilation_phase(mid, a);  // creation parity over the same mask
        double e = h_so(sq, i, a);
        for (int j : occupied_list(mid, n_so)) e += g_antisym(sq, i, j, a, j);
        return sign * e;
    }

    // degree == 2: remove i < j from d1, add a < b
    const std::uint32_t from_mask = d1 & diff, to_mask = d2 & diff;
    const int i = std::countr_zero(from_mask);
    const int j = 31 - std::countl_zero(from_mask);
    const int a = std::countr_zero(to_mask);
    const int b = 31 - std::countl_zero(to_mask);

    int sign = annihilation_phase(d1, i);
    std::uint32_t mask = d1 & ~(std::uint32_t{1} << i);
    sign *= annihilation_phase(mask, j);
    mask &= ~(std::uint32_t{1} << j);
    sign *= annihilation_phase(mask, b);
    mask |= std::uint32_t{1} << b;
    sign *= annihilation_phase(mask, a);
    return sign * g_antisym(sq, i, j, a, b);
}

// all determinants with the given electron count (optionally a fixed Sz sector)
inline std::vector<std::uint32_t> determinants(int n_so, int n_elec) {
    std::vector<std::uint32_t> dets;
    for (std::uint32_t d = 0; d < (std::uint32_t{1} << n_so); ++d)
        if (std::popcount(d) == n_elec) dets.push_back(d);
    return dets;
}

inline RealVector fci_eigenvalues(const SecondQuantizedHamiltonian& sq, int n_elec) {
    const int n_so = sq.n_spin_orbitals();
    const auto dets = determinants(n_so, n_elec);
    RealMatrix h(dets.size(), dets.size());
    for (std::size_t r = 0; r < dets.size(); ++r)
        for (std::size_t c = 0; c < dets.size(); ++c)
            h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                matrix_element(sq, dets[r], dets[c], n_so);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
    return es.eigenvalues().array() + sq.core_energy;
}

}  // namespace fci_oracle
