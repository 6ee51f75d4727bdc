// SPDX-License-Identifier: Apache-2.0
#include "qdoa/quantize.hpp"

#include <sstream>
#include <vector>

namespace qdoa {

namespace {

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Rectangular: return "rect";
        case Scheme::Triangular: return "tri";
        case Scheme::DirectRound: return "round";
    }
    return "?";
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    return parts;
}

double parse_double(const std::string& s, const std::string& text) {
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::ParseError, "bad number '" + s + "' in quantizer '" + text + "'");
}

}  // namespace

QuantizerSpec QuantizerSpec::rectangular(double lambda, Field field) {
    QuantizerSpec s{Scheme::Rectangular, lambda, 0, field};
    s.validate();
    return s;
}

QuantizerSpec QuantizerSpec::triangular(double lambda, int bits, Field field) {
    QuantizerSpec s{Scheme::Triangular, lambda, bits, field};
    s.validate();
    return s;
}

QuantizerSpec QuantizerSpec::direct_round(double lambda, int bits, Field field) {
    QuantizerSpec s{Scheme::DirectRound, lambda, bits, field};
    s.validate();
    return s;
}

void QuantizerSpec::validate() const {
    if (!(lambda > 0)) throw Error(ErrorKind::NonPositiveRange, "quantizer range lambda must be > 0");
    if (scheme == Scheme::Triangular && bits < 2)
        throw Error(ErrorKind::BitsTooSmall, "triangular quantizer needs b >= 2");
    if (scheme == Scheme::DirectRound && bits < 1)
        throw Error(ErrorKind::BitsTooSmall, "direct rounding needs b >= 1");
}

double QuantizerSpec::resolution() const { return bbit_resolution(lambda, bits); }

int QuantizerSpec::bits_per_scalar() const {
    const int cf = field_factor(field);
    return scheme == Scheme::Rectangular ? 2 * cf : cf * bits;
}

std::string QuantizerSpec::label() const {
    if (scheme == Scheme::Rectangular) return "rect";
    return std::string(scheme_name(scheme)) + "_b" + std::to_string(bits);
}

std::string QuantizerSpec::to_string() const {
    std::ostringstream out;
    out.precision(17);
    out << scheme_name(scheme) << ":lambda=" << lambda;
    if (scheme != Scheme::Rectangular) out << ":b=" << bits;
    out << ":field=" << qdoa::to_string(field);
    return out.str();
}

QuantizerSpec QuantizerSpec::parse(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.empty()) throw Error(ErrorKind::ParseError, "empty quantizer specification");
    QuantizerSpec spec;
    if (parts[0] == "rect") spec.scheme = Scheme::Rectangular;
    else if (parts[0] == "tri") spec.scheme = Scheme::Triangular;
    else if (parts[0] == "round") spec.scheme = Scheme::DirectRound;
    else throw Error(ErrorKind::ParseError, "unknown quantizer scheme '" + parts[0] + "'");
    for (size_t i = 1; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::ParseError, "expected key=value in quantizer '" + text + "'");
        const std::string key = parts[i].substr(0, eq);
        const std::string value = parts[i].substr(eq + 1);
        if (key == "lambda") spec.lambda = parse_double(value, text);
        else if (key == "b") spec.bits = static_cast<int>(parse_double(value, text));
        else if (key == "field") {
            if (value == "real") spec.field = Field::Real;
            else if (value == "complex") spec.field = Field::Complex;
            else throw Error(ErrorKind::ParseError, "unknown field '" + value + "'");
        } else {
            throw Error(ErrorKind::ParseError, "unknown quantizer key '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

std::int64_t bits_used(const QuantizerSpec& spec, std::int64_t n, std::int64_t p) {
    return static_cast<std::int64_t>(spec.bits_per_scalar()) * p * n;
}

double bbit_resolution(double lambda, int bits) {
    if (bits < 2) throw Error(ErrorKind::BitsTooSmall, "b-bit triangular quantizer needs b >= 2");
    if (!(lambda > 0)) throw Error(ErrorKind::NonPositiveRange, "lambda must be > 0");
    return lambda / (std::ldexp(1.0, bits) - 2.0);
}

}  // namespace qdoa
