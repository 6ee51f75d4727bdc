// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qdoa/doa.hpp"
#include "qdoa/harness.hpp"

namespace qdoa {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::ConfigInvalid, what); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(value);
    while (std::getline(in, cell, ',')) {
        cell = trim(cell);
        if (!cell.empty()) out.push_back(cell);
    }
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    try {
        size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        invalid(key + ": not a number '" + text + "'");
    }
}

long long to_int(const std::string& key, const std::string& text) {
    try {
        size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        invalid(key + ": not an integer '" + text + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
    try {
        size_t used = 0;
        if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
        const unsigned long long v = std::stoull(text, &used, 0);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        invalid(key + ": not an unsigned integer '" + text + "'");
    }
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& cell : split_list(value)) out.push_back(to_double(key, cell));
    return out;
}

// Integer-valued geometric grid from lo to hi (inclusive), duplicates removed.
std::vector<double> geomspace(double lo, double hi, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        const double v = std::round(lo * std::pow(hi / lo, t));
        if (out.empty() || v > out.back()) out.push_back(v);
    }
    return out;
}

std::string join(const std::vector<double>& values) {
    std::ostringstream out;
    out.precision(17);
    for (size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
    return out.str();
}

bool strictly_increasing_positive(const std::vector<double>& v) {
    for (size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0)) return false;
        if (i > 0 && !(v[i] > v[i - 1])) return false;
    }
    return true;
}

const char* kTrialNote = "desk scale: 100 trials per point (reference setup uses 500)";

}  // namespace

const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::Adversarial: return "adversarial";
        case Experiment::EigendepRect: return "eigendep_rect";
        case Experiment::EigendepTri: return "eigendep_tri";
        case Experiment::WellsepDoa: return "wellsep_doa";
        case Experiment::PhaseTransition: return "phase_transition";
        case Experiment::Custom: return "custom";
    }
    return "unknown";
}

Experiment parse_experiment(const std::string& name) {
    for (auto e : {Experiment::Adversarial, Experiment::EigendepRect, Experiment::EigendepTri,
                   Experiment::WellsepDoa, Experiment::PhaseTransition, Experiment::Custom})
        if (name == to_string(e)) return e;
    invalid("unknown experiment '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (p < 2) invalid("p must be >= 2");
    if (s < 1 || s >= p) invalid("s must satisfy 1 <= s < p");
    if (!(nu >= 0) || !std::isfinite(nu)) invalid("nu must be finite and >= 0");
    if (trials < 1) invalid("trials must be >= 1");
    if (workers < 1) invalid("workers must be >= 1");
    if (grid.empty()) invalid("grid must not be empty");
    if (!strictly_increasing_positive(grid)) invalid("grid must be positive and strictly increasing");
    if (quantizers.empty()) invalid("at least one quantizer is required");
    for (const auto& q : quantizers) {
        try {
            q.validate();
        } catch (const Error& e) {
            invalid(std::string("quantizer: ") + e.what());
        }
    }

    const bool doa = experiment == Experiment::WellsepDoa || experiment == Experiment::PhaseTransition ||
                     experiment == Experiment::Custom;
    const Field want = doa ? Field::Complex : Field::Real;
    for (const auto& q : quantizers)
        if (q.field != want)
            invalid(std::string(to_string(experiment)) + " needs " + qdoa::to_string(want) + " quantizers");
    if (doa && s > 9) invalid("DOA experiments support at most 9 sources");

    switch (experiment) {
        case Experiment::EigendepRect:
            if (betas.empty()) invalid("eigendep_rect needs betas");
            if (!(zeta_scale > 0)) invalid("zeta_scale must be > 0");
            for (const auto& q : quantizers)
                if (q.scheme != Scheme::Rectangular) invalid("eigendep_rect uses rectangular quantizers");
            break;
        case Experiment::EigendepTri:
            if (s != 2) invalid("eigendep_tri uses circle data of rank 2");
            if (p < 3) invalid("eigendep_tri needs p >= 3");
            break;
        case Experiment::PhaseTransition:
            if (s != 3) invalid("phase_transition uses the three sources {0, eps, 1/2}");
            if (epsilons.empty()) invalid("phase_transition needs epsilons");
            for (double e : epsilons)
                if (!(e > 0 && e < 0.25)) invalid("epsilons must lie in (0, 1/4)");
            if (!(success_threshold > 0 && success_threshold <= 1)) invalid("success_threshold must be in (0, 1]");
            if (!(success_factor > 0)) invalid("success_factor must be > 0");
            break;
        case Experiment::Custom:
            if (static_cast<Index>(thetas.size()) != s) invalid("custom needs exactly s thetas");
            if (amplitudes != "canonical" && amplitudes != "uniform")
                invalid("amplitudes must be 'canonical' or 'uniform'");
            try {
                AngleSet check(thetas);
            } catch (const Error& e) {
                invalid(std::string("thetas: ") + e.what());
            }
            break;
        default: break;
    }
}

ExperimentConfig preset(Experiment e) {
    ExperimentConfig cfg;
    cfg.experiment = e;
    cfg.trials = 100;
    cfg.notes.push_back(kTrialNote);
    switch (e) {
        case Experiment::Adversarial:
            cfg.p = 32;
            cfg.s = 8;
            cfg.nu = 0.01;
            cfg.quantizers = {QuantizerSpec::rectangular(2, Field::Real), QuantizerSpec::triangular(2, 2, Field::Real),
                              QuantizerSpec::triangular(2, 4, Field::Real),
                              QuantizerSpec::direct_round(2, 2, Field::Real),
                              QuantizerSpec::direct_round(2, 4, Field::Real)};
            cfg.grid = geomspace(1.6e4, 1.6e7, 10);
            cfg.notes.push_back("desk scale: largest budget 1.6e7 bits (at most 2.5e5 snapshots)");
            break;
        case Experiment::EigendepRect:
            cfg.p = 20;
            cfg.s = 15;
            cfg.nu = 0.0;
            cfg.quantizers = {QuantizerSpec::rectangular(1.5, Field::Real)};
            // zeta = 20 n^(-beta) stays <= 1 on the whole grid, so lambda_r(Sigma_x) = zeta.
            cfg.grid = geomspace(3e3, 1e5, 8);
            cfg.betas = {3.0 / 8, 7.0 / 16, 1.0 / 2, 9.0 / 16, 5.0 / 8};
            cfg.zeta_scale = 20.0;
            cfg.notes.push_back("desk scale: n from 3e3 to 1e5 (reference setup runs to 1e7)");
            cfg.notes.push_back("lambda = 1.5 and zeta_scale = 20 are not fixed by the reference setup; chosen by calibration");
            break;
        case Experiment::EigendepTri:
            cfg.p = 8;
            cfg.s = 2;
            cfg.nu = 0.01;
            for (int b : {2, 4, 6, 8}) cfg.quantizers.push_back(QuantizerSpec::triangular(2, b, Field::Real));
            cfg.grid = geomspace(1e3, 1e5, 16);
            cfg.notes.push_back("desk scale: 16 grid points up to n = 1e5 (reference setup uses 32 up to 1e7)");
            break;
        case Experiment::WellsepDoa:
            cfg.p = 32;
            cfg.s = 4;
            cfg.nu = 0.01;
            cfg.quantizers = {QuantizerSpec::rectangular(6), QuantizerSpec::triangular(6, 4),
                              QuantizerSpec::triangular(6, 8), QuantizerSpec::direct_round(6, 4),
                              QuantizerSpec::direct_round(6, 8)};
            cfg.grid = geomspace(1.6e5, 1.6e8, 10);
            cfg.notes.push_back("reported slopes fit the upper half of the budget grid (slope_full.* uses all points)");
            break;
        case Experiment::PhaseTransition:
            cfg.p = 32;
            cfg.s = 3;
            cfg.nu = 0.01;
            cfg.quantizers = {QuantizerSpec::rectangular(5), QuantizerSpec::triangular(5, 2)};
            // Eight separations log-spaced over [1/(4p), 1/p]; below that the
            // transition lies beyond the largest budget that fits the desk runtime.
            for (int k = 0; k < 8; ++k) cfg.epsilons.push_back(std::pow(4.0, -k / 7.0) / 32.0);
            std::reverse(cfg.epsilons.begin(), cfg.epsilons.end());
            cfg.grid = geomspace(1e4, 1e4 * std::pow(10.0, 11.0 / 3.0), 12);
            cfg.notes.push_back("8 epsilon values in [1/128, 1/32] x 12 bit budgets in [1e4, 4.6e7]");
            break;
        case Experiment::Custom:
            cfg.p = 16;
            cfg.s = 2;
            cfg.nu = 0.01;
            cfg.thetas = {0.1, 0.35};
            cfg.amplitudes = "uniform";
            cfg.quantizers = {QuantizerSpec::rectangular(3), QuantizerSpec::triangular(3, 4)};
            cfg.grid = geomspace(1e4, 1e6, 5);
            break;
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig cfg) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool notes_reset = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) invalid("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "experiment") cfg.experiment = parse_experiment(value);
        else if (key == "p") cfg.p = to_int(key, value);
        else if (key == "s" || key == "r") cfg.s = to_int(key, value);
        else if (key == "nu") cfg.nu = to_double(key, value);
        else if (key == "trials") cfg.trials = static_cast<int>(to_int(key, value));
        else if (key == "workers") cfg.workers = static_cast<int>(to_int(key, value));
        else if (key == "seed") cfg.seed = to_u64(key, value);
        else if (key == "out") cfg.out = value;
        else if (key == "grid") cfg.grid = to_doubles(key, value);
        else if (key == "betas") cfg.betas = to_doubles(key, value);
        else if (key == "zeta_scale") cfg.zeta_scale = to_double(key, value);
        else if (key == "epsilons") cfg.epsilons = to_doubles(key, value);
        else if (key == "success_threshold") cfg.success_threshold = to_double(key, value);
        else if (key == "success_factor") cfg.success_factor = to_double(key, value);
        else if (key == "thetas") cfg.thetas = to_doubles(key, value);
        else if (key == "amplitudes") cfg.amplitudes = value;
        else if (key == "note") {
            if (!notes_reset) cfg.notes.clear();
            notes_reset = true;
            cfg.notes.push_back(value);
        } else if (key == "quantizers") {
            cfg.quantizers.clear();
            for (const auto& cell : split_list(value)) {
                try {
                    cfg.quantizers.push_back(QuantizerSpec::parse(cell));
                } catch (const Error& e) {
                    invalid("quantizers: " + std::string(e.what()));
                }
            }
        } else {
            invalid("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), std::move(base));
}

std::string format_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "experiment = " << to_string(cfg.experiment) << '\n'
        << "p = " << cfg.p << '\n'
        << "s = " << cfg.s << '\n'
        << "nu = " << cfg.nu << '\n'
        << "trials = " << cfg.trials << '\n'
        << "workers = " << cfg.workers << '\n'
        << "seed = " << cfg.seed << '\n'
        << "out = " << cfg.out << '\n'
        << "grid = " << join(cfg.grid) << '\n'
        << "quantizers = ";
    for (size_t i = 0; i < cfg.quantizers.size(); ++i) out << (i ? "," : "") << cfg.quantizers[i].to_string();
    out << '\n'
        << "betas = " << join(cfg.betas) << '\n'
        << "zeta_scale = " << cfg.zeta_scale << '\n'
        << "epsilons = " << join(cfg.epsilons) << '\n'
        << "success_threshold = " << cfg.success_threshold << '\n'
        << "success_factor = " << cfg.success_factor << '\n'
        << "thetas = " << join(cfg.thetas) << '\n'
        << "amplitudes = " << cfg.amplitudes << '\n';
    for (const auto& note : cfg.notes) out << "note = " << note << '\n';
    return out.str();
}

}  // namespace qdoa
