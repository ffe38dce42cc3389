// molecular_system.hpp — the assembled electronic-structure pipeline for one
// geometry, and the parametrized-Hamiltonian view used for derivatives.
//
// The qubit Hamiltonian built here is purely electronic: nuclear repulsion
// (and any frozen-core constant) is added back after phase estimation, which
// keeps the mapped spectral span tight.

#pragma once

#include "dqpe/chem/fcidump.hpp"
#include "dqpe/chem/jordan_wigner.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dqpe::chem {

struct MolecularSystem {
    Geometry geometry;
    SCFResult scf;
    SecondQuantizedHamiltonian sq;
    QubitHamiltonian qubit;
};

inline MolecularSystem build_molecular_system(const Geometry& geom) {
    MolecularSystem sys;
    sys.geometry = geom;
    const AoIntegrals ints = compute_integrals(geom);
    sys.scf = rhf_scf(geom, ints);
    sys.sq = mo_transform(sys.scf, ints);
    sys.qubit = jordan_wigner(sys.sq);
    return sys;
}

namespace detail {

// Match MO columns to a reference set: order by largest |dot|, sign positive.
// Keeps the orbital gauge continuous across displaced SCF solutions, also
// through energy crossings.
inline RealMatrix align_mo_columns(const RealMatrix& c, const RealMatrix& reference) {
    const Eigen::Index n = c.cols();
    RealMatrix aligned(c.rows(), n);
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (Eigen::Index r = 0; r < n; ++r) {
        Eigen::Index best = -1;
        double best_dot = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            if (used[static_cast<std::size_t>(p)]) continue;
            const double dot = reference.col(r).dot(c.col(p));
            if (std::abs(dot) > std::abs(best_dot)) {
                best_dot = dot;
                best = p;
            }
        }
        if (best < 0) throw std::runtime_error("align_mo_columns: matching failed");
        used[static_cast<std::size_t>(best)] = true;
        aligned.col(r) = best_dot >= 0.0 ? c.col(best) : RealMatrix(-c.col(best));
    }
    return aligned;
}

inline ComplexMatrix electronic_matrix_with_gauge(const Geometry& geom,
                                                  const RealMatrix* reference_mos) {
    const AoIntegrals ints = compute_integrals(geom);
    SCFResult scf = rhf_scf(geom, ints);
    if (reference_mos)
        scf.mo_coefficients = align_mo_columns(scf.mo_coefficients, *reference_mos);
    return jordan_wigner(mo_transform(scf, ints)).matrix;
}

}  // namespace detail

// Electronic Hamiltonian family over nuclear coordinates (angstrom, flattened
// per atom). The directional derivative uses central differences of the
// assembled matrix with the displaced molecular orbitals aligned to the
// center-geometry gauge, so the matrix entries stay smooth in the step.
inline ParametrizedHamiltonian molecular_hamiltonian(const Geometry& templ,
                                                     double fd_step_angstrom = 1e-5) {
    ParametrizedHamiltonian ph;
    ph.n_parameters = templ.n_parameters();
    ph.evaluate = [templ](const RealVector& x) {
        return detail::electronic_matrix_with_gauge(templ.with_coordinates_angstrom(x), nullptr);
    };
    ph.derivative = [templ, fd_step_angstrom](const RealVector& x, int dir) {
        const Geometry center = templ.with_coordinates_angstrom(x);
        const RealMatrix reference = rhf_scf(center, compute_integrals(center)).mo_coefficients;
        RealVector xp = x, xm = x;
        xp[dir] += fd_step_angstrom;
        xm[dir] -= fd_step_angstrom;
        const ComplexMatrix hp =
            detail::electronic_matrix_with_gauge(templ.with_coordinates_angstrom(xp), &reference);
        const ComplexMatrix hm =
            detail::electronic_matrix_with_gauge(templ.with_coordinates_angstrom(xm), &reference);
        return ComplexMatrix((hp - hm) / (2.0 * fd_step_angstrom));
    };
    return ph;
}

// Shipped starting structures. The ground-state start is an isosceles triangle
// with one bond stretched 0.05 A from a 0.99 A equilateral guess; the triplet
// start is linear with the two bonds split by 0.1 A.
inline Geometry default_h3plus_ground_start() {
    const double side = 0.99, stretched = side + 0.05;
    const double half = stretched / 2.0;
    const double height = std::sqrt(side * side - half * half);
    return make_geometry({{"H", {-half, 0.0, 0.0}},
                          {"H", {half, 0.0, 0.0}},
                          {"H", {0.0, height, 0.0}}},
                         +1, 1);
}

inline Geometry default_h3plus_triplet_start() {
    return make_geometry({{"H", {-1.0, 0.0, 0.0}},
                          {"H", {0.0, 0.0, 0.0}},
                          {"H", {1.1, 0.0, 0.0}}},
                         +1, 3);
}

// Spin-flipped excited determinant for the lowest triplet: both electrons
// beta, in the first two orbitals. The triplet input state stays explicit
// user configuration; this is only the shipped default.
inline std::string default_triplet_determinant() { return "010100"; }

// Hartree-Fock determinant bitstring in the interleaved-spin convention.
inline std::string hf_determinant(int n_electrons, int n_spin_orbitals) {
    if (n_electrons % 2 != 0)
        throw std::invalid_argument("hf_determinant: odd electron count");
    std::string bits(static_cast<std::size_t>(n_spin_orbitals), '0');
    for (int i = 0; i < n_electrons; ++i) bits[static_cast<std::size_t>(i)] = '1';
    return bits;
}

}  // namespace dqpe::chem
