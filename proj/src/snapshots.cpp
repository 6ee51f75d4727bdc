// SPDX-License-Identifier: Apache-2.0
#include "qdoa/snapshots.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace qdoa {

namespace {

struct Header {
    Field field;
    Index p;
};

Header parse_header(const std::string& line) {
    std::istringstream in(line);
    std::string hash;
    in >> hash;
    if (hash != "#") throw Error(ErrorKind::HeaderMismatch, "first line must start with '# '");
    std::optional<Field> field;
    std::optional<Index> p;
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        if (key == "field") {
            if (value == "complex") field = Field::Complex;
            else if (value == "real") field = Field::Real;
            else throw Error(ErrorKind::HeaderMismatch, "unknown field '" + value + "'");
        } else if (key == "p") {
            try {
                size_t used = 0;
                const long long v = std::stoll(value, &used);
                if (used != value.size() || v < 1) throw std::invalid_argument(value);
                p = static_cast<Index>(v);
            } catch (const std::exception&) {
                throw Error(ErrorKind::HeaderMismatch, "bad p '" + value + "'");
            }
        }
    }
    if (!field || !p) throw Error(ErrorKind::HeaderMismatch, "header needs field=<real|complex> and p=<int>");
    return {*field, *p};
}

std::vector<double> parse_row(const std::string& line, Index line_no) {
    std::vector<double> values;
    std::string cell;
    std::istringstream in(line);
    Index col = 0;
    while (std::getline(in, cell, ',')) {
        ++col;
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        const std::string t = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
        try {
            size_t used = 0;
            const double v = std::stod(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            values.push_back(v);
        } catch (const std::exception&) {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ", column " +
                                                   std::to_string(col) + ": not a number '" + t + "'");
        }
    }
    return values;
}

}  // namespace

SnapshotBatch read_snapshots(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::HeaderMismatch, "empty snapshot file");
    const Header header = parse_header(line);
    const Index width = header.field == Field::Complex ? 2 * header.p : header.p;

    std::vector<double> flat;
    Index n = 0;
    Index line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto row = parse_row(line, line_no);
        if (static_cast<Index>(row.size()) != width)
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(width) + " values, found " +
                                                   std::to_string(row.size()));
        flat.insert(flat.end(), row.begin(), row.end());
        ++n;
    }
    if (n == 0) throw Error(ErrorKind::EmptyBatch, "snapshot file has no rows");

    SnapshotBatch batch;
    batch.field = header.field;
    batch.data.resize(header.p, n);
    for (Index k = 0; k < n; ++k)
        for (Index i = 0; i < header.p; ++i) {
            const size_t base = static_cast<size_t>(k * width);
            if (header.field == Field::Complex)
                batch.data(i, k) = {flat[base + 2 * i], flat[base + 2 * i + 1]};
            else
                batch.data(i, k) = {flat[base + i], 0.0};
        }
    return batch;
}

SnapshotBatch ingest_snapshots(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    return read_snapshots(in);
}

void write_snapshots(std::ostream& out, const SnapshotBatch& batch) {
    const auto old = out.precision(17);
    out << "# field=" << to_string(batch.field) << " p=" << batch.p() << '\n';
    for (Index k = 0; k < batch.n(); ++k) {
        for (Index i = 0; i < batch.p(); ++i) {
            if (i > 0) out << ',';
            if (batch.field == Field::Complex)
                out << batch.data(i, k).real() << ',' << batch.data(i, k).imag();
            else
                out << batch.data(i, k).real();
        }
        out << '\n';
    }
    out.precision(old);
}

void write_snapshots(const std::string& path, const SnapshotBatch& batch) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    write_snapshots(out, batch);
    if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

}  // namespace qdoa
