#pragma once

#include <Eigen/Dense>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "uhdtest/errors.hpp"
#include "uhdtest/report.hpp"
#include "uhdtest/spectra.hpp"

namespace uhdtest::io {

static_assert(std::endian::native == std::endian::little,
              "UHDM binary format assumes a little-endian host");

inline constexpr char kMagic[4] = {'U', 'H', 'D', 'M'};

// CSV: rows are observations, comma-separated, optional single header line.
inline DataMatrix load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) { blank = false; break; }
        if (blank) continue;
        std::vector<double> row;
        bool bad_token = false;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            std::size_t a = pos, b = comma;
            while (a < b && std::isspace(static_cast<unsigned char>(line[a]))) ++a;
            while (b > a && std::isspace(static_cast<unsigned char>(line[b - 1]))) --b;
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(line.data() + a, line.data() + b, v);
            if (ec != std::errc{} || ptr != line.data() + b) bad_token = true;
            row.push_back(v);
            pos = comma + 1;
            if (comma == line.size()) break;
        }
        if (bad_token) {
            if (first) { first = false; continue; }  // header line
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": non-numeric entry");
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(rows.front().size()) + " columns, got " +
                             std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no numeric rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return make_data_matrix(std::move(m));
}

inline void save_matrix_csv(const std::string& path, const DataMatrix& data) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (int i = 0; i < data.n(); ++i) {
        for (int j = 0; j < data.p(); ++j) {
            if (j) out << ',';
            out << format_double(data.values(i, j));
        }
        out << '\n';
    }
}

// Raw binary: magic "UHDM", then unsigned 32-bit little-endian n and p, then
// n*p 64-bit floats row-major.
inline DataMatrix load_matrix_uhdm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError(path + ": bad magic, not a UHDM matrix");
    std::uint32_t n = 0, p = 0;
    if (!in.read(reinterpret_cast<char*>(&n), 4) ||
        !in.read(reinterpret_cast<char*>(&p), 4))
        throw ParseError(path + ": truncated header");
    if (n == 0 || p == 0 || static_cast<std::uint64_t>(n) * p > (1ull << 31))
        throw ParseError(path + ": implausible dimensions " + std::to_string(n) + "x" +
                         std::to_string(p));
    Eigen::MatrixXd m(n, p);
    std::vector<double> row(p);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!in.read(reinterpret_cast<char*>(row.data()),
                     static_cast<std::streamsize>(sizeof(double) * p)))
            throw ParseError(path + ": truncated data at row " + std::to_string(i));
        for (std::uint32_t j = 0; j < p; ++j) m(i, j) = row[j];
    }
    return make_data_matrix(std::move(m));
}

inline void save_matrix_uhdm(const std::string& path, const DataMatrix& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(kMagic, 4);
    const std::uint32_t n = static_cast<std::uint32_t>(data.n());
    const std::uint32_t p = static_cast<std::uint32_t>(data.p());
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&p), 4);
    std::vector<double> row(p);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < p; ++j) row[j] = data.values(i, j);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(sizeof(double) * p));
    }
}

// Sniff the magic to pick a loader.
inline DataMatrix load_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (std::memcmp(magic, kMagic, 4) == 0) return load_matrix_uhdm(path);
    return load_matrix_csv(path);
}

// One eigenvalue per line (or comma-separated), for population overlays.
inline std::vector<double> load_value_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<double> out;
    std::string tok;
    while (std::getline(in, tok)) {
        std::size_t pos = 0;
        while (pos < tok.size()) {
            std::size_t comma = tok.find(',', pos);
            if (comma == std::string::npos) comma = tok.size();
            std::string piece = tok.substr(pos, comma - pos);
            pos = comma + 1;
            bool blank = true;
            for (char ch : piece)
                if (!std::isspace(static_cast<unsigned char>(ch))) { blank = false; break; }
            if (blank) continue;
            out.push_back(parse_double(piece));
        }
    }
    if (out.empty()) throw ParseError(path + ": no values");
    return out;
}

}  // namespace uhdtest::io
