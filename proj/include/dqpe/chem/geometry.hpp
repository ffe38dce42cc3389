// geometry.hpp — molecular geometries, XYZ input/output, nuclear repulsion.
// Coordinates are bohr internally; file and CLI boundaries use angstrom.

#pragma once

#include "dqpe/linalg.hpp"

#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dqpe::chem {

inline constexpr double bohr_per_angstrom = 1.8897261246257702;
inline constexpr double angstrom_per_bohr = 1.0 / bohr_per_angstrom;

class UnsupportedElementError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline int element_charge(const std::string& symbol) {
    static const std::vector<std::pair<std::string, int>> table = {
        {"H", 1}, {"He", 2}, {"Li", 3}, {"Be", 4}, {"B", 5},
        {"C", 6}, {"N", 7},  {"O", 8},  {"F", 9},  {"Ne", 10}};
    for (const auto& [sym, z] : table)
        if (sym == symbol) return z;
    throw UnsupportedElementError("unknown element symbol: " + symbol);
}

struct Atom {
    std::string symbol;
    int z = 0;
    Eigen::Vector3d position_bohr = Eigen::Vector3d::Zero();
};

struct Geometry {
    std::vector<Atom> atoms;
    int charge = 0;
    int multiplicity = 1;

    void validate() const {
        if (atoms.empty()) throw std::invalid_argument("Geometry: no atoms");
        for (std::size_t i = 0; i < atoms.size(); ++i)
            for (std::size_t j = i + 1; j < atoms.size(); ++j)
                if ((atoms[i].position_bohr - atoms[j].position_bohr).norm() < 1e-6)
                    throw std::invalid_argument("Geometry: atoms " + std::to_string(i) +
                                                " and " + std::to_string(j) +
                                                " are closer than 1e-6 bohr");
    }

    int n_electrons() const {
        int z_total = 0;
        for (const auto& a : atoms) z_total += a.z;
        return z_total - charge;
    }

    int n_parameters() const { return 3 * static_cast<int>(atoms.size()); }

    RealVector coordinates_angstrom() const {
        RealVector x(n_parameters());
        for (std::size_t i = 0; i < atoms.size(); ++i)
            for (int k = 0; k < 3; ++k)
                x[3 * static_cast<int>(i) + k] = atoms[i].position_bohr[k] * angstrom_per_bohr;
        return x;
    }

    Geometry with_coordinates_angstrom(const RealVector& x) const {
        if (x.size() != n_parameters())
            throw std::invalid_argument("Geometry: coordinate vector size mismatch");
        Geometry g = *this;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            for (int k = 0; k < 3; ++k)
                g.atoms[i].position_bohr[k] =
                    x[3 * static_cast<int>(i) + k] * bohr_per_angstrom;
        return g;
    }

    double nuclear_repulsion() const {
        double e = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            for (std::size_t j = i + 1; j < atoms.size(); ++j)
                e += atoms[i].z * atoms[j].z /
                     (atoms[i].position_bohr - atoms[j].position_bohr).norm();
        return e;
    }

    // hartree per angstrom, flattened over (atom, xyz)
    RealVector nuclear_repulsion_gradient() const {
        RealVector g = RealVector::Zero(n_parameters());
        for (std::size_t i = 0; i < atoms.size(); ++i)
            for (std::size_t j = 0; j < atoms.size(); ++j) {
                if (i == j) continue;
                const Eigen::Vector3d d = atoms[i].position_bohr - atoms[j].position_bohr;
                const double r = d.norm();
                const Eigen::Vector3d gi = -atoms[i].z * atoms[j].z * d / (r * r * r);
                for (int k = 0; k < 3; ++k)
                    g[3 * static_cast<int>(i) + k] += gi[k] * bohr_per_angstrom;
            }
        return g;
    }

    // bond length between two atoms, angstrom
    double bond_angstrom(int i, int j) const {
        return (atoms[static_cast<std::size_t>(i)].position_bohr -
                atoms[static_cast<std::size_t>(j)].position_bohr)
                   .norm() *
               angstrom_per_bohr;
    }
};

inline Geometry make_geometry(const std::vector<std::pair<std::string, Eigen::Vector3d>>& atoms_angstrom,
                              int charge = 0, int multiplicity = 1) {
    Geometry g;
    g.charge = charge;
    g.multiplicity = multiplicity;
    for (const auto& [sym, pos] : atoms_angstrom)
        g.atoms.push_back({sym, element_charge(sym), pos * bohr_per_angstrom});
    g.validate();
    return g;
}

// XYZ format, angstrom. The comment line may carry "charge=<n>" and
// "multiplicity=<n>" tokens.
inline Geometry read_xyz(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("read_xyz: empty stream");
    int n_atoms = 0;
    try {
        n_atoms = std::stoi(line);
    } catch (...) {
        throw std::invalid_argument("read_xyz: bad atom count line: " + line);
    }
    if (n_atoms < 1) throw std::invalid_argument("read_xyz: atom count must be positive");

    Geometry g;
    if (!std::getline(in, line)) throw std::invalid_argument("read_xyz: missing comment line");
    std::istringstream comment(line);
    std::string token;
    while (comment >> token) {
        if (token.rfind("charge=", 0) == 0) g.charge = std::stoi(token.substr(7));
        if (token.rfind("multiplicity=", 0) == 0) g.multiplicity = std::stoi(token.substr(13));
    }

    for (int i = 0; i < n_atoms; ++i) {
        if (!std::getline(in, line))
            throw std::invalid_argument("read_xyz: truncated file at atom " + std::to_string(i));
        std::istringstream row(line);
        std::string sym;
        double x, y, z;
        if (!(row >> sym >> x >> y >> z))
            throw std::invalid_argument("read_xyz: bad atom line: " + line);
        g.atoms.push_back(
            {sym, element_charge(sym), Eigen::Vector3d(x, y, z) * bohr_per_angstrom});
    }
    g.validate();
    return g;
}

inline void write_xyz(std::ostream& out, const Geometry& g, const std::string& comment = "") {
    out << g.atoms.size() << "\n";
    out << "charge=" << g.charge << " multiplicity=" << g.multiplicity;
    if (!comment.empty()) out << " " << comment;
    out << "\n";
    out.precision(12);
    for (const auto& a : g.atoms) {
        const Eigen::Vector3d p = a.position_bohr * angstrom_per_bohr;
        out << a.symbol << " " << p[0] << " " << p[1] << " " << p[2] << "\n";
    }
}

}  // namespace dqpe::chem
