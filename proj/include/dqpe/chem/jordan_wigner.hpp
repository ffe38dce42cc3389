// jordan_wigner.hpp — dense qubit Hamiltonians in the occupation-number basis,
// plus determinant and configuration states.
//
// Conventions: spin orbital 2p is (p, alpha) and 2p+1 is (p, beta); qubit q
// holds spin orbital q with the leftmost qubit indexed 0, i.e. qubit 0 is the
// most significant bit of the basis index.

#pragma once

#include "dqpe/chem/second_quantized.hpp"

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dqpe::chem {

struct QubitHamiltonian {
    ComplexMatrix matrix;  // includes the constant offset on the diagonal
    double constant_offset = 0.0;
    int n_qubits = 0;
};

namespace detail {

// a_p / a^dagger_p on a basis state; sign from the occupied qubits before p.
struct FermiState {
    std::uint32_t index;
    int sign;  // 0 marks annihilated
};

inline FermiState apply_annihilate(FermiState s, int p, int n) {
    if (s.sign == 0) return s;
    const std::uint32_t bit = std::uint32_t{1} << (n - 1 - p);
    if (!(s.index & bit)) return {0, 0};
    const std::uint32_t before = s.index >> (n - p);  // bits of qubits < p
    if (std::popcount(before) % 2) s.sign = -s.sign;
    s.index &= ~bit;
    return s;
}

inline FermiState apply_create(FermiState s, int p, int n) {
    if (s.sign == 0) return s;
    const std::uint32_t bit = std::uint32_t{1} << (n - 1 - p);
    if (s.index & bit) return {0, 0};
    const std::uint32_t before = s.index >> (n - p);
    if (std::popcount(before) % 2) s.sign = -s.sign;
    s.index |= bit;
    return s;
}

}  // namespace detail

inline QubitHamiltonian jordan_wigner(const SecondQuantizedHamiltonian& sq) {
    const int n = sq.n_spin_orbitals();
    if (n < 1 || n > 10)
        throw std::invalid_argument("jordan_wigner: spin-orbital count " + std::to_string(n) +
                                    " outside the dense range [1, 10]");
    const std::uint32_t dim = std::uint32_t{1} << n;
    RealMatrix m = RealMatrix::Zero(dim, dim);

    for (std::uint32_t ket = 0; ket < dim; ++ket) {
        // one-body: sum_pq h_pq a+_{p sigma} a_{q sigma}
        for (int p = 0; p < sq.n_orbitals; ++p)
            for (int q = 0; q < sq.n_orbitals; ++q) {
                const double h = sq.one_body(p, q);
                if (h == 0.0) continue;
                for (int spin = 0; spin < 2; ++spin) {
                    auto s = detail::apply_annihilate({ket, 1}, 2 * q + spin, n);
                    s = detail::apply_create(s, 2 * p + spin, n);
                    if (s.sign) m(s.index, ket) += h * s.sign;
                }
            }
        // two-body: 1/2 sum_pqrs (pq|rs) a+_{p s1} a+_{r s2} a_{s s2} a_{q s1}
        for (int p = 0; p < sq.n_orbitals; ++p)
            for (int q = 0; q < sq.n_orbitals; ++q)
                for (int r = 0; r < sq.n_orbitals; ++r)
                    for (int s_orb = 0; s_orb < sq.n_orbitals; ++s_orb) {
                        const double g = sq.g(p, q, r, s_orb);
                        if (g == 0.0) continue;
                        for (int s1 = 0; s1 < 2; ++s1)
                            for (int s2 = 0; s2 < 2; ++s2) {
                                auto st = detail::apply_annihilate({ket, 1}, 2 * q + s1, n);
                                st = detail::apply_annihilate(st, 2 * s_orb + s2, n);
                                st = detail::apply_create(st, 2 * r + s2, n);
                                st = detail::apply_create(st, 2 * p + s1, n);
                                if (st.sign) m(st.index, ket) += 0.5 * g * st.sign;
                            }
                    }
    }

    QubitHamiltonian out;
    out.n_qubits = n;
    out.constant_offset = sq.core_energy;
    out.matrix = m.cast<Complex>();
    out.matrix.diagonal().array() += sq.core_energy;
    return out;
}

// Basis-state index of an occupation bitstring, leftmost character = qubit 0.
inline std::uint32_t determinant_index(const std::string& occupations, int n_qubits) {
    if (static_cast<int>(occupations.size()) != n_qubits)
        throw std::invalid_argument("determinant_index: bitstring length " +
                                    std::to_string(occupations.size()) + " does not match " +
                                    std::to_string(n_qubits) + " qubits");
    std::uint32_t idx = 0;
    for (int q = 0; q < n_qubits; ++q) {
        const char c = occupations[static_cast<std::size_t>(q)];
        if (c != '0' && c != '1')
            throw std::invalid_argument("determinant_index: bitstring must be 0/1");
        if (c == '1') idx |= std::uint32_t{1} << (n_qubits - 1 - q);
    }
    return idx;
}

inline ComplexVector determinant_state(const std::string& occupations, int n_qubits) {
    ComplexVector psi = ComplexVector::Zero(Eigen::Index{1} << n_qubits);
    psi[determinant_index(occupations, n_qubits)] = 1.0;
    return psi;
}

// Normalized linear combination of determinants.
inline ComplexVector csf_state(const std::vector<std::pair<std::string, double>>& terms,
                               int n_qubits) {
    if (terms.empty()) throw std::invalid_argument("csf_state: empty combination");
    ComplexVector psi = ComplexVector::Zero(Eigen::Index{1} << n_qubits);
    for (const auto& [bits, weight] : terms)
        psi[determinant_index(bits, n_qubits)] += weight;
    const double norm = psi.norm();
    if (norm < 1e-14) throw std::invalid_argument("csf_state: zero-norm combination");
    return psi / norm;
}

// Hamming weight of each basis index; the dense Hamiltonian must be block
// diagonal over these sectors.
inline int sector_of(std::uint32_t index) { return std::popcount(index); }

// Eigenvalues of the particle-number sector a state with n_electrons lives in.
inline RealVector sector_eigenvalues(const QubitHamiltonian& h, int n_electrons) {
    std::vector<std::uint32_t> members;
    const std::uint32_t dim = std::uint32_t{1} << h.n_qubits;
    for (std::uint32_t i = 0; i < dim; ++i)
        if (sector_of(i) == n_electrons) members.push_back(i);
    ComplexMatrix block(members.size(), members.size());
    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = 0; b < members.size(); ++b)
            block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                h.matrix(members[a], members[b]);
    return eigendecompose(block).eigenvalues;
}

}  // namespace dqpe::chem
