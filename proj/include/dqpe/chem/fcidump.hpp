// fcidump.hpp — read and write the standard FCIDUMP integral text format:
// a &FCI header with NORB/NELEC/MS2, then `value i j k l` records, 1-based,
// chemist convention, with the (0,0,0,0) record carrying the core energy.

#pragma once

#include "dqpe/chem/second_quantized.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dqpe::chem {

class FcidumpError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline int header_int(const std::string& header, const std::string& key) {
    const auto pos = header.find(key);
    if (pos == std::string::npos)
        throw FcidumpError("fcidump: header is missing " + key);
    std::size_t i = pos + key.size();
    while (i < header.size() && (std::isspace(static_cast<unsigned char>(header[i])) || header[i] == '='))
        ++i;
    std::size_t j = i;
    while (j < header.size() &&
           (std::isdigit(static_cast<unsigned char>(header[j])) || header[j] == '-' || header[j] == '+'))
        ++j;
    if (i == j) throw FcidumpError("fcidump: cannot parse value of " + key);
    return std::stoi(header.substr(i, j - i));
}

}  // namespace detail

inline SecondQuantizedHamiltonian fcidump_read(std::istream& in) {
    std::string line, header;
    bool header_done = false;
    while (std::getline(in, line)) {
        header += " " + line;
        const auto upper = [&] {
            std::string u = line;
            for (auto& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            return u;
        }();
        if (upper.find("&END") != std::string::npos ||
            upper.find("$END") != std::string::npos ||
            upper.find('/') != std::string::npos) {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw FcidumpError("fcidump: unterminated header");
    if (header.find("&FCI") == std::string::npos && header.find("$FCI") == std::string::npos)
        throw FcidumpError("fcidump: missing &FCI marker");

    const int norb = detail::header_int(header, "NORB");
    if (norb < 1 || norb > 16)
        throw FcidumpError("fcidump: NORB " + std::to_string(norb) + " out of range [1, 16]");

    SecondQuantizedHamiltonian sq;
    sq.n_orbitals = norb;
    sq.n_electrons_hint = detail::header_int(header, "NELEC");
    try {
        sq.ms2_hint = detail::header_int(header, "MS2");
    } catch (const FcidumpError&) {
        sq.ms2_hint = 0;
    }
    sq.one_body = RealMatrix::Zero(norb, norb);
    sq.two_body.assign(static_cast<std::size_t>(norb) * norb * norb * norb, 0.0);

    std::vector<bool> h_set(static_cast<std::size_t>(norb) * norb, false);
    std::vector<bool> g_set(sq.two_body.size(), false);
    bool core_set = false;

    while (std::getline(in, line)) {
        std::istringstream row(line);
        double value;
        int i, j, k, l;
        if (!(row >> value >> i >> j >> k >> l)) {
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            throw FcidumpError("fcidump: malformed record: " + line);
        }
        const auto in_range = [&](int a) { return a >= 0 && a <= norb; };
        if (!in_range(i) || !in_range(j) || !in_range(k) || !in_range(l))
            throw FcidumpError("fcidump: index out of range in record: " + line);

        if (i == 0 && j == 0 && k == 0 && l == 0) {
            if (core_set && sq.core_energy != value)
                throw FcidumpError("fcidump: conflicting core-energy records");
            sq.core_energy = value;
            core_set = true;
        } else if (k == 0 && l == 0) {
            if (i == 0 || j == 0)
                throw FcidumpError("fcidump: bad one-electron record: " + line);
            const int p = i - 1, q = j - 1;
            for (const auto& [a, b] : {std::pair{p, q}, std::pair{q, p}}) {
                const std::size_t key = static_cast<std::size_t>(a) * norb + b;
                if (h_set[key] && std::abs(sq.one_body(a, b) - value) > 1e-12)
                    throw FcidumpError("fcidump: conflicting h records at " + line);
                sq.one_body(a, b) = value;
                h_set[key] = true;
            }
        } else {
            if (i == 0 || j == 0 || k == 0 || l == 0)
                throw FcidumpError("fcidump: bad two-electron record: " + line);
            const int p = i - 1, q = j - 1, r = k - 1, s = l - 1;
            const std::array<std::array<int, 4>, 8> images = {{{p, q, r, s},
                                                               {q, p, r, s},
                                                               {p, q, s, r},
                                                               {q, p, s, r},
                                                               {r, s, p, q},
                                                               {s, r, p, q},
                                                               {r, s, q, p},
                                                               {s, r, q, p}}};
            for (const auto& im : images) {
                const std::size_t key = static_cast<std::size_t>(
                    ((im[0] * norb + im[1]) * norb + im[2]) * norb + im[3]);
                if (g_set[key] && std::abs(sq.two_body[key] - value) > 1e-12)
                    throw FcidumpError("fcidump: conflicting g records at " + line);
                sq.two_body[key] = value;
                g_set[key] = true;
            }
        }
    }
    return sq;
}

inline SecondQuantizedHamiltonian fcidump_read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FcidumpError("fcidump: cannot open " + path);
    return fcidump_read(in);
}

inline void fcidump_write(std::ostream& out, const SecondQuantizedHamiltonian& sq,
                          int n_electrons = -1, int ms2 = 0) {
    const int norb = sq.n_orbitals;
    out << "&FCI NORB=" << norb
        << ",NELEC=" << (n_electrons >= 0 ? n_electrons : std::max(0, sq.n_electrons_hint))
        << ",MS2=" << ms2 << ",\n";
    out << " ORBSYM=";
    for (int i = 0; i < norb; ++i) out << "1,";
    out << "\n ISYM=1,\n&END\n";

    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    // unique two-electron records
    for (int i = 0; i < norb; ++i)
        for (int j = 0; j <= i; ++j)
            for (int k = 0; k <= i; ++k)
                for (int l = 0; l <= (k == i ? j : k); ++l) {
                    const double v = sq.g(i, j, k, l);
                    if (v != 0.0)
                        out << " " << v << " " << i + 1 << " " << j + 1 << " " << k + 1 << " "
                            << l + 1 << "\n";
                }
    for (int i = 0; i < norb; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = sq.one_body(i, j);
            if (v != 0.0) out << " " << v << " " << i + 1 << " " << j + 1 << " 0 0\n";
        }
    out << " " << sq.core_energy << " 0 0 0 0\n";
}

inline void fcidump_write_file(const std::string& path, const SecondQuantizedHamiltonian& sq,
                               int n_electrons = -1, int ms2 = 0) {
    std::ofstream out(path);
    if (!out) throw FcidumpError("fcidump: cannot open " + path + " for writing");
    fcidump_write(out, sq, n_electrons, ms2);
}

}  // namespace dqpe::chem
