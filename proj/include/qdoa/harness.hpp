// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdoa/common.hpp"
#include "qdoa/quantize.hpp"

namespace qdoa {

enum class Experiment { Adversarial, EigendepRect, EigendepTri, WellsepDoa, PhaseTransition, Custom };

const char* to_string(Experiment e);
Experiment parse_experiment(const std::string& name);

/// Parameters of one Monte-Carlo study. `grid` holds total bit budgets for
/// the bit-normalized studies (adversarial, wellsep_doa, phase_transition,
/// custom) and sample counts n for the eigenvalue-dependence studies.
struct ExperimentConfig {
    Experiment experiment = Experiment::Custom;
    Index p = 32;
    Index s = 4;  // subspace dimension r for the subspace studies
    double nu = 0.01;
    std::vector<QuantizerSpec> quantizers;
    std::vector<double> grid;
    int trials = 100;
    std::uint64_t seed = 1;
    std::string out = ".";
    int workers = 1;

    // eigendep_rect: lambda_r(Sigma_x) = zeta_scale * n^(-beta)
    std::vector<double> betas;
    double zeta_scale = 1.0;

    // phase_transition: sources {0, eps, 1/2}; success iff md <= success_factor * eps
    std::vector<double> epsilons;
    double success_threshold = 0.95;
    double success_factor = 0.25;

    // custom: fixed source angles and amplitude model ("canonical" or "uniform")
    std::vector<double> thetas;
    std::string amplitudes = "canonical";

    /// Free-form notes on deviations from the reference setup, stamped into
    /// the result metadata.
    std::vector<std::string> notes;

    /// Throws ConfigInvalid when the configuration cannot be run.
    void validate() const;
};

/// Built-in desk-scale defaults for each study.
ExperimentConfig preset(Experiment e);

/// Applies "key = value" lines (with '#' comments) on top of `base`.
/// Lists are comma separated; quantizers use QuantizerSpec::to_string form.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base);
ExperimentConfig load_config(const std::string& path, ExperimentConfig base);

/// Serializes every field in the format accepted by parse_config.
std::string format_config(const ExperimentConfig& cfg);

struct ResultRow {
    std::string experiment;
    std::string quantizer;  // series label
    std::int64_t n = 0;
    std::int64_t bits = 0;
    double median = 0;
    double quantile25 = 0;
    double quantile75 = 0;
    double success_frac = 0;
    int failures = 0;
    std::uint64_t seed = 0;
    /// Series parameter (beta, epsilon, ...) and x-coordinate used for
    /// slope fits; not part of the CSV.
    double param = 0;
    double x = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::map<std::string, std::string> metadata;

    /// Rows of one series in grid order.
    std::vector<ResultRow> series(const std::string& label) const;
};

struct SlopeFit {
    double slope = 0;
    double intercept = 0;
};

/// Ordinary least squares of log(y) on log(x). Throws TooFewPoints below two
/// points (or when all x coincide) and NonPositive for any value <= 0.
SlopeFit fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

/// Series label carrying a parameter, e.g. "rect@eps=0.03125".
std::string series_label(const std::string& base, const std::string& key, double value);

/// Smallest bit budget in a phase-transition series whose success fraction
/// reaches `threshold`.
std::optional<std::int64_t> usual_success_bits(const std::vector<ResultRow>& series, double threshold);

/// Per-quantizer fit of log(usual bits) against log(1 / eps) over the
/// epsilons that reached the threshold.
struct TransitionFit {
    SlopeFit fit;
    std::vector<double> inv_eps;
    std::vector<double> bits;
};
std::optional<TransitionFit> fit_phase_transition(const ResultTable& table, const QuantizerSpec& spec,
                                                  const std::vector<double>& epsilons, double threshold);

ResultTable run_adversarial(const ExperimentConfig& cfg);
ResultTable run_eigendep_rect(const ExperimentConfig& cfg);
ResultTable run_eigendep_tri(const ExperimentConfig& cfg);
ResultTable run_wellsep_doa(const ExperimentConfig& cfg);
ResultTable run_phase_transition(const ExperimentConfig& cfg);
ResultTable run_custom(const ExperimentConfig& cfg);
ResultTable run_experiment(const ExperimentConfig& cfg);

/// CSV with header
/// experiment,quantizer,n,bits,median,quantile25,quantile75,success_frac,failures,seed
/// and rows in table order (series, then grid point).
void emit_results(const ResultTable& table, std::ostream& out);
void emit_results(const ResultTable& table, const std::string& path);

/// key=value metadata sidecar.
void emit_metadata(const ResultTable& table, const std::string& path);

/// Reads a CSV written by emit_results (for round-trip checks and tooling).
ResultTable read_results(std::istream& in);

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

inline constexpr const char* kVersion = "qdoa 1.0.0";

}  // namespace qdoa
