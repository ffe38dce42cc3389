// integrals.hpp — contracted s-orbital Gaussian integrals (overlap, kinetic,
// nuclear attraction, two-electron repulsion) over the minimal basis.

#pragma once

#include "dqpe/chem/geometry.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace dqpe::chem {

// Minimal-basis 1s contractions. Only s-orbital species are supported here;
// heavier elements enter through integral-file import instead.
struct ContractedS {
    Eigen::Vector3d center;
    std::array<double, 3> exponents;
    std::array<double, 3> coefficients;  // primitive normalization folded in
};

inline std::vector<ContractedS> minimal_s_basis(const Geometry& geom) {
    std::vector<ContractedS> basis;
    for (const auto& atom : geom.atoms) {
        ContractedS f;
        f.center = atom.position_bohr;
        if (atom.symbol == "H") {
            f.exponents = {3.425250914, 0.6239137298, 0.1688554040};
        } else if (atom.symbol == "He") {
            f.exponents = {6.362421394, 1.158923, 0.3136497915};
        } else {
            throw UnsupportedElementError(
                "element " + atom.symbol +
                " needs p or d orbitals; import its integrals from an FCIDUMP file instead");
        }
        const std::array<double, 3> contraction = {0.1543289673, 0.5353281423, 0.4446345422};
        for (int i = 0; i < 3; ++i)
            f.coefficients[i] =
                contraction[i] * std::pow(2.0 * f.exponents[i] / std::numbers::pi, 0.75);

        // renormalize so the contracted self-overlap is exactly 1
        double self = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double p = f.exponents[i] + f.exponents[j];
                self += f.coefficients[i] * f.coefficients[j] *
                        std::pow(std::numbers::pi / p, 1.5);
            }
        for (auto& c : f.coefficients) c /= std::sqrt(self);
        basis.push_back(f);
    }
    return basis;
}

inline double boys_f0(double x) {
    if (x < 1e-13) return 1.0 - x / 3.0;
    return 0.5 * std::sqrt(std::numbers::pi / x) * std::erf(std::sqrt(x));
}

struct AoIntegrals {
    RealMatrix overlap;
    RealMatrix kinetic;
    RealMatrix nuclear;  // summed over nuclei, attraction included with its sign
    std::vector<double> eri;  // chemist (ij|kl), dense n^4
    int n = 0;

    double g(int i, int j, int k, int l) const {
        return eri[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)];
    }
    double& g(int i, int j, int k, int l) {
        return eri[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)];
    }
    RealMatrix core() const { return kinetic + nuclear; }
};

inline AoIntegrals compute_integrals(const Geometry& geom) {
    geom.validate();
    const auto basis = minimal_s_basis(geom);
    const int n = static_cast<int>(basis.size());

    AoIntegrals out;
    out.n = n;
    out.overlap = RealMatrix::Zero(n, n);
    out.kinetic = RealMatrix::Zero(n, n);
    out.nuclear = RealMatrix::Zero(n, n);
    out.eri.assign(static_cast<std::size_t>(n) * n * n * n, 0.0);

    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            const auto& fa = basis[static_cast<std::size_t>(a)];
            const auto& fb = basis[static_cast<std::size_t>(b)];
            const double rab2 = (fa.center - fb.center).squaredNorm();
            double s = 0.0, t = 0.0, v = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double alpha = fa.exponents[i], beta = fb.exponents[j];
                    const double p = alpha + beta;
                    const double mu = alpha * beta / p;
                    const double pref = fa.coefficients[i] * fb.coefficients[j] *
                                        std::exp(-mu * rab2);
                    const double s_ij = pref * std::pow(std::numbers::pi / p, 1.5);
                    s += s_ij;
                    t += mu * (3.0 - 2.0 * mu * rab2) * s_ij;
                    const Eigen::Vector3d pc =
                        (alpha * fa.center + beta * fb.center) / p;
                    for (const auto& atom : geom.atoms)
                        v -= atom.z * pref * (2.0 * std::numbers::pi / p) *
                             boys_f0(p * (pc - atom.position_bohr).squaredNorm());
                }
            out.overlap(a, b) = out.overlap(b, a) = s;
            out.kinetic(a, b) = out.kinetic(b, a) = t;
            out.nuclear(a, b) = out.nuclear(b, a) = v;
        }

    // unique (ij|kl) under the 8-fold symmetry, mirrored exactly
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
            for (int k = 0; k <= i; ++k)
                for (int l = 0; l <= (k == i ? j : k); ++l) {
                    const auto& fi = basis[static_cast<std::size_t>(i)];
                    const auto& fj = basis[static_cast<std::size_t>(j)];
                    const auto& fk = basis[static_cast<std::size_t>(k)];
                    const auto& fl = basis[static_cast<std::size_t>(l)];
                    const double rij2 = (fi.center - fj.center).squaredNorm();
                    const double rkl2 = (fk.center - fl.center).squaredNorm();
                    double val = 0.0;
                    for (int pi = 0; pi < 3; ++pi)
                        for (int pj = 0; pj < 3; ++pj) {
                            const double a = fi.exponents[pi], b = fj.exponents[pj];
                            const double p = a + b;
                            const Eigen::Vector3d rp = (a * fi.center + b * fj.center) / p;
                            const double eij = std::exp(-a * b / p * rij2) *
                                               fi.coefficients[pi] * fj.coefficients[pj];
                            for (int pk = 0; pk < 3; ++pk)
                                for (int pl = 0; pl < 3; ++pl) {
                                    const double c = fk.exponents[pk], d = fl.exponents[pl];
                                    const double q = c + d;
                                    const Eigen::Vector3d rq =
                                        (c * fk.center + d * fl.center) / q;
                                    const double ekl = std::exp(-c * d / q * rkl2) *
                                                       fk.coefficients[pk] *
                                                       fl.coefficients[pl];
                                    val += eij * ekl * 2.0 *
                                           std::pow(std::numbers::pi, 2.5) /
                                           (p * q * std::sqrt(p + q)) *
                                           boys_f0(p * q / (p + q) *
                                                   (rp - rq).squaredNorm());
                                }
                        }
                    for (const auto& [pp, qq, rr, ss] :
                         std::array<std::array<int, 4>, 8>{{{i, j, k, l},
                                                            {j, i, k, l},
                                                            {i, j, l, k},
                                                            {j, i, l, k},
                                                            {k, l, i, j},
                                                            {l, k, i, j},
                                                            {k, l, j, i},
                                                            {l, k, j, i}}})
                        out.g(pp, qq, rr, ss) = val;
                }
    return out;
}

}  // namespace dqpe::chem
