#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdoa/harness.hpp"
#include "qdoa/snapshots.hpp"
#include "test_util.hpp"

using namespace qdoa;
using C = std::complex<double>;

namespace {

std::string csv_of(const ResultTable& t) {
    std::ostringstream out;
    emit_results(t, out);
    return out.str();
}

// A deliberately tiny configuration of each study.
ExperimentConfig tiny(Experiment e) {
    ExperimentConfig cfg = preset(e);
    cfg.trials = 4;
    switch (e) {
        case Experiment::Adversarial: cfg.grid = {1.6e4, 6.4e4}; break;
        case Experiment::EigendepRect:
            cfg.grid = {500, 1000};
            cfg.betas = {0.5};
            break;
        case Experiment::EigendepTri: cfg.grid = {1000, 4000}; break;
        case Experiment::WellsepDoa: cfg.grid = {1.6e5, 6.4e5}; break;
        case Experiment::PhaseTransition:
            cfg.grid = {1e4, 1e5};
            cfg.epsilons = {1.0 / 32};
            break;
        case Experiment::Custom: cfg.grid = {1e4, 4e4}; break;
    }
    return cfg;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::IoError;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("log-log slope fit") {
    const std::vector<double> xs{1, 10, 100, 1000};
    CHECK(fit_loglog_slope(xs, xs).slope == doctest::Approx(1).epsilon(1e-14));
    std::vector<double> ys;
    for (double x : xs) ys.push_back(3 / std::sqrt(x));
    CHECK(std::abs(fit_loglog_slope(xs, ys).slope + 0.5) <= 1e-12);

    RngStream rng(1, 0);
    std::vector<double> nx, ny;
    for (int i = 0; i < 50; ++i) {
        const double x = std::pow(10.0, 1 + 4 * i / 49.0);
        nx.push_back(x);
        ny.push_back(std::pow(x, -0.5) * (1 + 0.01 * (2 * rng.uniform01() - 1)));
    }
    const double s = fit_loglog_slope(nx, ny).slope;
    CHECK(s >= -0.55);
    CHECK(s <= -0.45);

    CHECK(kind_of([] { fit_loglog_slope({1}, {1}); }) == ErrorKind::TooFewPoints);
    CHECK(kind_of([] { fit_loglog_slope({1, 2}, {1, -1}); }) == ErrorKind::NonPositive);
}

TEST_CASE("quantiles interpolate order statistics") {
    CHECK(quantile({3, 1, 2}, 0.5) == 2);
    CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile({1, 2, 3, 4, 5}, 0.25) == 2);
    CHECK_THROWS_AS(quantile({}, 0.5), Error);
}

TEST_CASE("usual success threshold") {
    std::vector<ResultRow> s(3);
    s[0].bits = 10, s[0].success_frac = 0.5;
    s[1].bits = 20, s[1].success_frac = 0.96;
    s[2].bits = 40, s[2].success_frac = 1.0;
    CHECK(usual_success_bits(s, 0.95) == 20);
    CHECK_FALSE(usual_success_bits(s, 1.01).has_value());
    CHECK(series_label("rect", "eps", 0.03125) == "rect@eps=0.03125");
}

TEST_CASE("experiment names") {
    for (auto e : {Experiment::Adversarial, Experiment::EigendepRect, Experiment::EigendepTri,
                   Experiment::WellsepDoa, Experiment::PhaseTransition, Experiment::Custom})
        CHECK(parse_experiment(to_string(e)) == e);
    CHECK(kind_of([] { parse_experiment("fig7"); }) == ErrorKind::ConfigInvalid);
}

TEST_CASE("configuration text round trip") {
    for (auto e : {Experiment::Adversarial, Experiment::EigendepRect, Experiment::EigendepTri,
                   Experiment::WellsepDoa, Experiment::PhaseTransition, Experiment::Custom}) {
        const ExperimentConfig cfg = preset(e);
        cfg.validate();
        const ExperimentConfig back = parse_config(format_config(cfg), ExperimentConfig{});
        CHECK(format_config(back) == format_config(cfg));
    }
}

TEST_CASE("configuration overrides and errors") {
    const ExperimentConfig base = preset(Experiment::Custom);
    const ExperimentConfig cfg = parse_config(
        "# comment\n trials = 7\nquantizers = rect:lambda=2:field=complex, tri:lambda=2:b=4:field=complex\n"
        "grid = 1e4, 2e4\nthetas = 0.1, 0.4\n",
        base);
    CHECK(cfg.trials == 7);
    CHECK(cfg.quantizers.size() == 2);
    CHECK(cfg.quantizers[1] == QuantizerSpec::triangular(2, 4));
    CHECK(cfg.grid == std::vector<double>{1e4, 2e4});
    CHECK(kind_of([&] { parse_config("colour = red\n", base); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([&] { parse_config("trials = 0\n", base).validate(); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([&] { parse_config("grid =\n", base).validate(); }) == ErrorKind::ConfigInvalid);
    CHECK_THROWS_AS(load_config("/nonexistent/qdoa.cfg", base), Error);
}

TEST_CASE("results CSV") {
    ResultTable empty;
    CHECK(csv_of(empty) == "experiment,quantizer,n,bits,median,quantile25,quantile75,success_frac,failures,seed\n");

    ResultTable t;
    ResultRow r;
    r.experiment = "custom";
    r.quantizer = "rect";
    r.n = 12345;
    r.bits = 987654321;
    r.median = 0.1 + 0.2;
    r.quantile25 = 1.0 / 3;
    r.quantile75 = std::nextafter(0.5, 1.0);
    r.success_frac = 0.97;
    r.failures = 2;
    r.seed = 18446744073709551615ULL;
    t.rows = {r, r};
    std::istringstream in(csv_of(t));
    const ResultTable back = read_results(in);
    REQUIRE(back.rows.size() == 2);
    const ResultRow& b = back.rows[1];
    CHECK(b.quantizer == "rect");
    CHECK(b.n == r.n);
    CHECK(b.bits == r.bits);
    CHECK(b.median == r.median);
    CHECK(b.quantile25 == r.quantile25);
    CHECK(b.quantile75 == r.quantile75);
    CHECK(b.success_frac == r.success_frac);
    CHECK(b.failures == 2);
    CHECK(b.seed == r.seed);
}

TEST_CASE("snapshot file parsing") {
    std::istringstream in("# field=complex p=2\n1,0,0,1\n");
    const SnapshotBatch b = read_snapshots(in);
    REQUIRE(b.n() == 1);
    CHECK(b.data(0, 0) == C(1, 0));
    CHECK(b.data(1, 0) == C(0, 1));
    CHECK(b.is_analog());

    std::istringstream bad("# field=complex p=2\n1,0,0,1\n1,2,3\n");
    try {
        read_snapshots(bad);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream nohead("1,0,0,1\n");
    CHECK(kind_of([&] { read_snapshots(nohead); }) == ErrorKind::HeaderMismatch);
    std::istringstream real("# field=real p=3\n1,2,3\n-4,5e-3,6\n");
    const SnapshotBatch rb = read_snapshots(real);
    CHECK(rb.field == Field::Real);
    CHECK(rb.data(1, 1) == C(5e-3, 0));
}

TEST_CASE("snapshot files round trip bit for bit") {
    RngStream rng(2, 0);
    SnapshotBatch b;
    b.data = test::random_complex(rng, 5, 20);
    b.data(0, 0) = C(1.0 / 3, -std::nextafter(1.0, 2.0));
    const auto path = std::filesystem::temp_directory_path() / "qdoa_roundtrip.csv";
    write_snapshots(path.string(), b);
    const SnapshotBatch back = ingest_snapshots(path.string());
    std::filesystem::remove(path);
    CHECK(back.data == b.data);
    CHECK(kind_of([] { ingest_snapshots("/nonexistent/snapshots.csv"); }) == ErrorKind::IoError);
}

TEST_CASE("every study runs at a tiny scale") {
    for (auto e : {Experiment::Adversarial, Experiment::EigendepRect, Experiment::EigendepTri,
                   Experiment::WellsepDoa, Experiment::PhaseTransition, Experiment::Custom}) {
        CAPTURE(to_string(e));
        const ExperimentConfig cfg = tiny(e);
        const ResultTable t = run_experiment(cfg);
        CHECK(!t.rows.empty());
        CHECK(t.metadata.at("experiment") == to_string(e));
        CHECK(t.metadata.at("seed") == std::to_string(cfg.seed));
        CHECK(t.metadata.count("version") == 1);
        CHECK(t.metadata.count("timestamp") == 1);
        for (const auto& row : t.rows) {
            CHECK(row.experiment == to_string(e));
            CHECK(row.median >= 0);
            CHECK(row.quantile25 <= row.median);
            CHECK(row.median <= row.quantile75);
        }
    }
}

TEST_CASE("runs reject a mismatched configuration") {
    ExperimentConfig cfg = tiny(Experiment::Adversarial);
    CHECK(kind_of([&] { run_wellsep_doa(cfg); }) == ErrorKind::ConfigInvalid);
    cfg.grid.clear();
    CHECK(kind_of([&] { run_experiment(cfg); }) == ErrorKind::ConfigInvalid);
}

}  // TEST_SUITE

TEST_SUITE("properties") {

TEST_CASE("identical configuration and seed give identical results") {
    const ExperimentConfig cfg = tiny(Experiment::Custom);
    CHECK(csv_of(run_experiment(cfg)) == csv_of(run_experiment(cfg)));
    ExperimentConfig other = cfg;
    other.seed = cfg.seed + 1;
    CHECK(csv_of(run_experiment(other)) != csv_of(run_experiment(cfg)));
}

TEST_CASE("results do not depend on the number of workers") {
    for (auto e : {Experiment::Adversarial, Experiment::EigendepTri, Experiment::PhaseTransition}) {
        ExperimentConfig one = tiny(e);
        one.trials = 5;
        ExperimentConfig many = one;
        many.workers = 3;
        CHECK(csv_of(run_experiment(one)) == csv_of(run_experiment(many)));
    }
}

TEST_CASE("rows are aligned by bits computed through the quantizer") {
    const ExperimentConfig cfg = tiny(Experiment::Adversarial);
    const ResultTable t = run_experiment(cfg);
    for (const auto& spec : cfg.quantizers) {
        const auto rows = t.series(spec.label());
        REQUIRE(rows.size() == cfg.grid.size());
        for (size_t g = 0; g < rows.size(); ++g) {
            CHECK(rows[g].bits == bits_used(spec, rows[g].n, cfg.p));
            // Budgets may not divide evenly; n is the largest count that fits.
            CHECK(rows[g].bits <= static_cast<std::int64_t>(cfg.grid[g]));
            CHECK(bits_used(spec, rows[g].n + 1, cfg.p) > static_cast<std::int64_t>(cfg.grid[g]));
        }
    }
}

TEST_CASE("preset parameters are stamped into the metadata") {
    const ResultTable t = run_experiment(tiny(Experiment::EigendepTri));
    CHECK(t.metadata.at("config.p") == "8");
    CHECK(t.metadata.count("note.0") == 1);
}

}  // TEST_SUITE
