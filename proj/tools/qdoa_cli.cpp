// SPDX-License-Identifier: Apache-2.0
// Command-line front end: Monte-Carlo studies, DOA estimation and quantization
// of snapshot files.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "qdoa/doa.hpp"
#include "qdoa/harness.hpp"

namespace {

using namespace qdoa;

QuantizerSpec make_spec(const std::string& scheme, double lambda, int bits, Field field) {
    if (scheme == "rect") return QuantizerSpec::rectangular(lambda, field);
    if (scheme == "tri") return QuantizerSpec::triangular(lambda, bits, field);
    if (scheme == "round") return QuantizerSpec::direct_round(lambda, bits, field);
    throw Error(ErrorKind::ConfigInvalid, "unknown scheme '" + scheme + "'");
}

int run_command(const std::string& name, const std::string& config, std::optional<std::uint64_t> seed,
                const std::string& out_dir, std::optional<int> trials, std::optional<int> workers) {
    ExperimentConfig cfg = preset(parse_experiment(name));
    if (!config.empty()) cfg = load_config(config, cfg);
    if (cfg.experiment != parse_experiment(name))
        throw Error(ErrorKind::ConfigInvalid, "config selects a different experiment than '" + name + "'");
    if (seed) cfg.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (workers) cfg.workers = *workers;
    if (!out_dir.empty()) cfg.out = out_dir;

    std::filesystem::create_directories(cfg.out);
    const ResultTable table = run_experiment(cfg);
    const std::string stem = (std::filesystem::path(cfg.out) / to_string(cfg.experiment)).string();
    emit_results(table, stem + ".csv");
    emit_metadata(table, stem + ".meta");
    std::cout << "wrote " << stem << ".csv (" << table.rows.size() << " rows) and " << stem << ".meta\n";
    for (const auto& [key, value] : table.metadata)
        if (key.rfind("slope", 0) == 0) std::cout << key << " = " << value << '\n';
    return 0;
}

int doa_command(const std::string& input, const std::string& scheme, double lambda, int bits, Index sources,
                std::uint64_t seed) {
    const SnapshotBatch analog = ingest_snapshots(input);
    if (analog.field != Field::Complex) throw Error(ErrorKind::HeaderMismatch, "DOA estimation needs complex snapshots");
    AngleSet est;
    if (scheme == "none") {
        est = esprit(leading_eigenspace(covariance_from_batch(analog), sources));
    } else {
        const QuantizerSpec spec = make_spec(scheme, lambda, bits, Field::Complex);
        RngStream da(seed, substream_id(0, Role::DitherA)), db(seed, substream_id(0, Role::DitherB));
        est = esprit_from_quantized(analog, spec, sources, da, db).estimated;
    }
    std::cout.precision(17);
    std::cout << "theta\n";
    for (double t : est.values()) std::cout << t << '\n';
    return 0;
}

int quantize_command(const std::string& input, const std::string& scheme, double lambda, int bits,
                     const std::string& out, std::string paired_out, std::uint64_t seed) {
    const SnapshotBatch analog = ingest_snapshots(input);
    const QuantizerSpec spec = make_spec(scheme, lambda, bits, analog.field);
    RngStream da(seed, substream_id(0, Role::DitherA)), db(seed, substream_id(0, Role::DitherB));
    const SnapshotBatch q = quantize_batch(analog, spec, da, db);
    write_snapshots(out, q);
    if (spec.scheme == Scheme::Rectangular) {
        if (paired_out.empty()) paired_out = out + ".dot.csv";
        SnapshotBatch dot = q;
        dot.data = q.paired;
        write_snapshots(paired_out, dot);
    }
    std::cerr << "quantized " << q.n() << " snapshots with " << spec.to_string() << " ("
              << bits_used(spec, q.n(), q.p()) << " bits)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantized covariance estimation and direction-of-arrival studies"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a Monte-Carlo study and write CSV plus metadata");
    std::string experiment, config, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials, workers;
    run->add_option("experiment", experiment,
                    "adversarial | eigendep_rect | eigendep_tri | wellsep_doa | phase_transition | custom")
        ->required();
    run->add_option("--config", config, "key = value overrides applied on top of the preset");
    run->add_option("--seed", seed, "master seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--trials", trials, "trials per grid point")->check(CLI::PositiveNumber);
    run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

    auto* doa = app.add_subcommand("doa", "Direction-of-arrival estimation");
    doa->require_subcommand(1);
    auto* estimate = doa->add_subcommand("estimate", "ESPRIT on (quantized) snapshots; prints angles as CSV");
    std::string input, scheme = "rect";
    double lambda = 1.0;
    int bits = 4;
    Index sources = 1;
    std::uint64_t dither_seed = 1;
    estimate->add_option("--input", input, "snapshot CSV")->required();
    estimate->add_option("--scheme", scheme, "rect | tri | round | none")
        ->check(CLI::IsMember({"rect", "tri", "round", "none"}));
    estimate->add_option("--lambda", lambda, "quantizer range");
    estimate->add_option("--bits", bits, "bits per real scalar (tri, round)");
    estimate->add_option("--sources", sources, "number of sources")->required();
    estimate->add_option("--seed", dither_seed, "dither seed");

    auto* quantize = app.add_subcommand("quantize", "Quantize a snapshot file");
    std::string q_out, q_paired;
    quantize->add_option("--input", input, "snapshot CSV")->required();
    quantize->add_option("--scheme", scheme, "rect | tri | round")->check(CLI::IsMember({"rect", "tri", "round"}));
    quantize->add_option("--lambda", lambda, "quantizer range");
    quantize->add_option("--bits", bits, "bits per real scalar (tri, round)");
    quantize->add_option("--out", q_out, "quantized snapshot CSV")->required();
    quantize->add_option("--paired-out", q_paired, "second rectangular output (default <out>.dot.csv)");
    quantize->add_option("--seed", dither_seed, "dither seed");

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) return run_command(experiment, config, seed, out_dir, trials, workers);
        if (estimate->parsed()) return doa_command(input, scheme, lambda, bits, sources, dither_seed);
        if (quantize->parsed()) return quantize_command(input, scheme, lambda, bits, q_out, q_paired, dither_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
