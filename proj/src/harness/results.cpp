// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qdoa/harness.hpp"

namespace qdoa {

namespace {

constexpr const char* kHeader = "experiment,quantizer,n,bits,median,quantile25,quantile75,success_frac,failures,seed";

}  // namespace

std::vector<ResultRow> ResultTable::series(const std::string& label) const {
    std::vector<ResultRow> out;
    for (const auto& row : rows)
        if (row.quantizer == label) out.push_back(row);
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorKind::EmptyBatch, "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

SlopeFit fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw Error(ErrorKind::SizeMismatch, "x and y differ in length");
    if (xs.size() < 2) throw Error(ErrorKind::TooFewPoints, "slope fit needs at least two points");
    const auto n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0) || !(ys[i] > 0)) throw Error(ErrorKind::NonPositive, "log-log fit needs positive data");
        mx += std::log(xs[i]);
        my += std::log(ys[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double dx = std::log(xs[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(ys[i]) - my);
    }
    if (sxx == 0) throw Error(ErrorKind::TooFewPoints, "slope fit needs two distinct x values");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

std::string series_label(const std::string& base, const std::string& key, double value) {
    std::ostringstream out;
    out.precision(6);
    out << base << '@' << key << '=' << value;
    return out.str();
}

std::optional<std::int64_t> usual_success_bits(const std::vector<ResultRow>& series, double threshold) {
    for (const auto& row : series)
        if (row.success_frac >= threshold) return row.bits;
    return std::nullopt;
}

std::optional<TransitionFit> fit_phase_transition(const ResultTable& table, const QuantizerSpec& spec,
                                                  const std::vector<double>& epsilons, double threshold) {
    TransitionFit out;
    for (double eps : epsilons) {
        const auto bits = usual_success_bits(table.series(series_label(spec.label(), "eps", eps)), threshold);
        if (!bits) continue;
        out.inv_eps.push_back(1.0 / eps);
        out.bits.push_back(static_cast<double>(*bits));
    }
    if (out.inv_eps.size() < 2) return std::nullopt;
    out.fit = fit_loglog_slope(out.inv_eps, out.bits);
    return out;
}

void emit_results(const ResultTable& table, std::ostream& out) {
    const auto old = out.precision(17);
    out << kHeader << '\n';
    for (const auto& r : table.rows)
        out << r.experiment << ',' << r.quantizer << ',' << r.n << ',' << r.bits << ',' << r.median << ','
            << r.quantile25 << ',' << r.quantile75 << ',' << r.success_frac << ',' << r.failures << ',' << r.seed
            << '\n';
    out.precision(old);
}

void emit_results(const ResultTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    emit_results(table, out);
    if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

void emit_metadata(const ResultTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    for (const auto& [key, value] : table.metadata) out << key << '=' << value << '\n';
    if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

ResultTable read_results(std::istream& in) {
    ResultTable table;
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw Error(ErrorKind::HeaderMismatch, "unexpected results header");
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream row(line);
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 10)
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 10 fields");
        try {
            ResultRow r;
            r.experiment = cells[0];
            r.quantizer = cells[1];
            r.n = std::stoll(cells[2]);
            r.bits = std::stoll(cells[3]);
            r.median = std::stod(cells[4]);
            r.quantile25 = std::stod(cells[5]);
            r.quantile75 = std::stod(cells[6]);
            r.success_frac = std::stod(cells[7]);
            r.failures = std::stoi(cells[8]);
            r.seed = std::stoull(cells[9]);
            table.rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad numeric field");
        }
    }
    return table;
}

}  // namespace qdoa
