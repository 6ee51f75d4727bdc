// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// non-zero when any selected criterion fails.
//
//   acceptance [--criterion N]... [--out DIR]
//
// Studies write their CSV and metadata into DIR (default ./acceptance_out).
// The aggregate rate check (12) reuses those files when they are newer than
// this binary and were produced with the desk-scale settings, otherwise it
// reruns the studies.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "qdoa/doa.hpp"
#include "qdoa/harness.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace qdoa;
using C = std::complex<double>;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string num(double v, int precision = 4) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

fs::path g_out = "acceptance_out";

// ---------------------------------------------------------------- studies

std::vector<double> medians(const std::vector<ResultRow>& rows) {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r.median);
    return out;
}

std::vector<double> bits_of(const std::vector<ResultRow>& rows) {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(static_cast<double>(r.bits));
    return out;
}

// Index of the grid value closest to `target` on a log scale.
size_t nearest_log(const std::vector<double>& xs, double target) {
    size_t best = 0;
    for (size_t i = 1; i < xs.size(); ++i)
        if (std::abs(std::log(xs[i] / target)) < std::abs(std::log(xs[best] / target))) best = i;
    return best;
}

double slope_from(const std::vector<double>& xs, const std::vector<double>& ys, size_t first = 0) {
    return fit_loglog_slope(std::vector<double>(xs.begin() + long(first), xs.end()),
                            std::vector<double>(ys.begin() + long(first), ys.end()))
        .slope;
}

std::vector<std::string> labels_of(const ResultTable& t) {
    std::vector<std::string> out;
    for (const auto& r : t.rows)
        if (std::find(out.begin(), out.end(), r.quantizer) == out.end()) out.push_back(r.quantizer);
    return out;
}

double label_param(const std::string& label) { return std::stod(label.substr(label.find('=') + 1)); }

std::string label_base(const std::string& label) { return label.substr(0, label.find('@')); }

fs::path self_path() { return fs::read_symlink("/proc/self/exe"); }

std::map<std::string, std::string> read_meta(const fs::path& path) {
    std::map<std::string, std::string> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

// Runs a desk-scale study and stores it under g_out, or loads a stored copy
// when `reuse` is set and the copy is current.
ResultTable study(Experiment e, bool reuse) {
    const ExperimentConfig cfg = preset(e);
    const fs::path csv = g_out / (std::string(to_string(e)) + ".csv");
    const fs::path meta = g_out / (std::string(to_string(e)) + ".meta");
    if (reuse && fs::exists(csv) && fs::exists(meta) && fs::last_write_time(csv) > fs::last_write_time(self_path())) {
        const auto m = read_meta(meta);
        if (m.count("trials") && m.at("trials") == std::to_string(cfg.trials) && m.at("seed") == std::to_string(cfg.seed) &&
            m.at("version") == kVersion) {
            std::ifstream in(csv);
            std::cout << "  (reusing " << csv.string() << ")\n";
            return read_results(in);
        }
    }
    fs::create_directories(g_out);
    ResultTable t = run_experiment(cfg);
    emit_results(t, csv.string());
    emit_metadata(t, meta.string());
    return t;
}

// ------------------------------------------------------- study checks (6-10)

Outcome check_adversarial(const ResultTable& t) {
    Outcome o;
    for (const auto& label : labels_of(t)) {
        const auto rows = t.series(label);
        const auto b = bits_of(rows);
        const auto m = medians(rows);
        const size_t last = rows.size() - 1;
        if (label.rfind("round", 0) == 0) {
            const size_t half = nearest_log(b, b[last] / 2);
            const double ratio = m[last] / m[half];
            o.require(std::abs(ratio - 1) <= 0.10, label + " plateau max/half " + num(ratio));
        } else {
            const size_t tenth = nearest_log(b, b[last] / 10);
            const double ratio = m[last] / m[tenth];
            o.require(ratio < 0.7, label + " max/tenth " + num(ratio));
        }
    }
    return o;
}

Outcome check_eigendep_rect(const ResultTable& t) {
    Outcome o;
    for (const auto& label : labels_of(t)) {
        const auto rows = t.series(label);
        std::vector<double> n;
        for (const auto& r : rows) n.push_back(static_cast<double>(r.n));
        const auto m = medians(rows);
        const double beta = label_param(label);
        if (std::abs(beta - 3.0 / 8) < 1e-9) {
            const double s = slope_from(n, m);
            o.require(s <= -0.05, "beta=3/8 slope " + num(s));
        } else if (std::abs(beta - 0.5) < 1e-9) {
            const double s = slope_from(n, m, n.size() / 2);
            o.require(std::abs(s) <= 0.05, "beta=1/2 upper-half slope " + num(s));
        } else if (std::abs(beta - 5.0 / 8) < 1e-9) {
            o.require(m.back() >= 0.95, "beta=5/8 final median " + num(m.back()));
        }
    }
    return o;
}

Outcome check_eigendep_tri(const ResultTable& t) {
    Outcome o;
    std::vector<double> sigma_r;
    for (const auto& r : t.series("ref_inv_sigma_r")) sigma_r.push_back(1.0 / r.median);
    std::vector<std::pair<int, double>> last;  // (b, median at the largest n)
    for (const auto& label : labels_of(t)) {
        if (label == "ref_inv_sigma_r") continue;
        const auto m = medians(t.series(label));
        const double s = slope_from(sigma_r, m);
        o.require(s >= -1.2 && s <= -0.8, label + " slope vs sigma_r " + num(s));
        last.emplace_back(std::stoi(label.substr(label.find("_b") + 2)), m.back());
    }
    std::sort(last.begin(), last.end());
    bool monotone = true;
    for (size_t i = 1; i < last.size(); ++i) monotone &= last[i].second <= 1.05 * last[i - 1].second;
    o.require(monotone, "larger b gives smaller median at the largest n");
    return o;
}

Outcome check_wellsep(const ResultTable& t) {
    Outcome o;
    std::map<std::string, double> final_median;
    for (const auto& label : labels_of(t)) {
        const auto rows = t.series(label);
        const auto b = bits_of(rows);
        const auto m = medians(rows);
        final_median[label] = m.back();
        const size_t upper = b.size() / 2;
        const double s = slope_from(b, m, upper);
        if (label.rfind("round", 0) == 0) {
            o.require(s >= -0.1, label + " upper-half slope " + num(s));
            const size_t quarter = nearest_log(b, b.back() / 4);
            const double ratio = m.back() / m[quarter];
            o.require(ratio >= 0.5, label + " max/quarter " + num(ratio));
        } else {
            o.require(s >= -0.65 && s <= -0.35, label + " upper-half slope " + num(s));
        }
    }
    if (final_median.count("tri_b4") && final_median.count("tri_b8"))
        o.require(final_median["tri_b8"] <= final_median["tri_b4"], "tri_b8 <= tri_b4 at the largest budget");
    return o;
}

Outcome check_phase_transition(const ResultTable& t) {
    const ExperimentConfig cfg = preset(Experiment::PhaseTransition);
    Outcome o;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> points;
    int worst_inversions = 0;
    for (const auto& label : labels_of(t)) {
        const auto rows = t.series(label);
        int inversions = 0;
        for (size_t g = 1; g < rows.size(); ++g) inversions += rows[g].success_frac < rows[g - 1].success_frac;
        worst_inversions = std::max(worst_inversions, inversions);
        if (const auto bits = usual_success_bits(rows, cfg.success_threshold)) {
            auto& [x, y] = points[label_base(label)];
            x.push_back(1.0 / label_param(label));
            y.push_back(static_cast<double>(*bits));
        }
    }
    o.require(worst_inversions <= 1, "at most one success inversion per column (worst " +
                                         std::to_string(worst_inversions) + ")");
    for (const auto& spec : cfg.quantizers) {
        const auto it = points.find(spec.label());
        if (it == points.end() || it->second.first.size() < 2) {
            o.require(false, spec.label() + " has fewer than two usually-successful columns");
            continue;
        }
        const double s = fit_loglog_slope(it->second.first, it->second.second).slope;
        o.require(s >= 1.3 && s <= 2.2, spec.label() + " boundary slope " + num(s) + " over " +
                                             std::to_string(it->second.first.size()) + " columns");
    }
    return o;
}

// ------------------------------------------------------------- criteria

Outcome criterion1() {
    const double lambda = 2, nu = 0.1;
    const Index n = 1000000;
    Eigen::Vector4d x(1.5, -0.8, 0.3, -1.9);
    RngStream noise(101, substream_id(0, Role::Noise));
    RngStream a(101, substream_id(0, Role::DitherA)), b(101, substream_id(0, Role::DitherB));
    SignPairSum<double> acc(4);
    const Index block = 4096;
    RealMatrix y(4, block);
    for (Index k0 = 0; k0 < n; k0 += block) {
        const Index m = std::min(block, n - k0);
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i < 4; ++i) y(i, j) = x(i) + nu * (2 * noise.uniform01() - 1);
        acc.add(y.leftCols(m), lambda, a, b);
    }
    const RealMatrix est = rect_covariance_from_sum(acc.outer(), lambda).matrix;
    const RealMatrix truth = x * x.transpose() + RealMatrix::Identity(4, 4) * (nu * nu / 3);
    const double err = (est - truth).cwiseAbs().maxCoeff();
    Outcome o;
    o.require(err <= 0.05, "max-norm error " + num(err) + " at n = 1e6");
    return o;
}

Outcome criterion2() {
    const double mu = 1, nu = 0.5;
    const Index n = 1000000;
    Eigen::Vector4d x(0.3, -1.7, 2.2, 0.0);
    RngStream noise(102, substream_id(0, Role::Noise));
    RngStream re(102, substream_id(0, Role::DitherA)), im(102, substream_id(0, Role::DitherB));
    RealMatrix y(4, n);
    for (Index k = 0; k < n; ++k)
        for (Index i = 0; i < 4; ++i) y(i, k) = x(i) + nu * noise.normal();
    const RealMatrix xi = tri_quantize(y, mu, re, im).colwise() - x;
    const Eigen::Vector4d mean = xi.rowwise().mean();
    const RealMatrix centered = xi.colwise() - mean;
    const RealMatrix cov = centered * centered.transpose() / double(n);
    double worst_corr = 0, worst_var = 0;
    for (int i = 0; i < 4; ++i) {
        worst_var = std::max(worst_var, std::abs(cov(i, i) - (mu * mu + nu * nu)));
        for (int j = 0; j < 4; ++j)
            if (i != j) worst_corr = std::max(worst_corr, std::abs(cov(i, j)) / std::sqrt(cov(i, i) * cov(j, j)));
    }
    Outcome o;
    o.require(mean.cwiseAbs().maxCoeff() <= 0.01, "|mean xi| " + num(mean.cwiseAbs().maxCoeff()));
    o.require(worst_var <= 0.03, "|Var xi - (mu^2 + nu^2)| " + num(worst_var));
    o.require(worst_corr <= 0.005, "off-diagonal correlation " + num(worst_corr));
    return o;
}

Outcome criterion3() {
    RngStream rng(103, 0);
    int violations = 0;
    double worst = -1;
    for (int trial = 0; trial < 1000; ++trial) {
        const Index p = test::uniform_index(rng, 2, 12), s = test::uniform_index(rng, 1, p - 1);
        const ComplexMatrix q = haar_orthonormal<C>(rng, p, p);
        Eigen::VectorXd ev(p);
        for (Index i = 0; i < p; ++i) ev(i) = rng.uniform01();
        std::sort(ev.data(), ev.data() + p, std::greater<>());
        ev.head(s).array() += std::pow(10.0, -2 + 2 * rng.uniform01());
        const ComplexMatrix sigma = q * ev.cast<C>().asDiagonal() * q.adjoint();
        const ComplexMatrix e = std::pow(10.0, -4 + 4 * rng.uniform01()) * test::random_hermitian(rng, p);
        const double gap = ev(s - 1) - ev(s);
        const double bound = std::min(1.0, (1 + std::sqrt(2.0)) * svd(e).singular_values(0) / gap);
        const double d = sin_theta_dist(leading_eigenspace(ComplexMatrix(sigma + e), s).basis,
                                        ComplexMatrix(q.leftCols(s)));
        worst = std::max(worst, d - bound);
        if (d > bound + 1e-8) ++violations;
    }
    Outcome o;
    o.require(violations == 0, std::to_string(violations) + " violations in 1000 instances (max dist - bound " +
                                   num(worst) + ")");
    return o;
}

AngleSet separated_angles(RngStream& rng, Index s, double min_sep) {
    for (;;) {
        std::vector<double> t;
        for (int tries = 0; tries < 1000 && Index(t.size()) < s; ++tries) {
            const double c = rng.uniform01();
            if (std::all_of(t.begin(), t.end(), [&](double v) { return wrap_dist(v - c) > min_sep; })) t.push_back(c);
        }
        if (Index(t.size()) == s) return AngleSet(t);
    }
}

Outcome criterion4() {
    RngStream rng(104, 0);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Index p = Index(8) << (trial % 3);
        const Index s = test::uniform_index(rng, 2, p / 4);
        const AngleSet t = separated_angles(rng, s, 1.0 / double(p));
        const double delta = min_separation(t);
        const auto sv = svd(vandermonde(t, p)).singular_values;
        if (sv(s - 1) * sv(s - 1) < double(p) - 1 / delta || sv(0) * sv(0) > double(p) + 1 / delta) ++violations;
    }
    Outcome o;
    o.require(violations == 0, std::to_string(violations) + " violations in 1000 instances, p in {8, 16, 32}");
    return o;
}

Outcome criterion5() {
    RngStream rng(105, 0);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index s = test::uniform_index(rng, 1, 6);
        const Index p = test::uniform_index(rng, s + 1, 32);
        const AngleSet t = separated_angles(rng, s, 0.0);
        worst = std::max(worst, matching_distance(esprit(svd(vandermonde(t, p)).U), t).distance);
    }
    Outcome o;
    o.require(worst <= 1e-8, "worst md " + num(worst) + " over 100 instances");
    return o;
}

Outcome criterion6(bool reuse = false) { return check_adversarial(study(Experiment::Adversarial, reuse)); }
Outcome criterion7(bool reuse = false) { return check_eigendep_rect(study(Experiment::EigendepRect, reuse)); }
Outcome criterion8(bool reuse = false) { return check_eigendep_tri(study(Experiment::EigendepTri, reuse)); }
Outcome criterion9(bool reuse = false) { return check_wellsep(study(Experiment::WellsepDoa, reuse)); }
Outcome criterion10(bool reuse = false) {
    return check_phase_transition(study(Experiment::PhaseTransition, reuse));
}

Outcome criterion11() {
    doctest::Context ctx;
    ctx.setOption("test-suite", "properties");
    ctx.setOption("no-intro", true);
    ctx.setOption("no-version", true);
    const int rc = ctx.run();
    Outcome o;
    o.require(rc == 0, "property suites " + std::string(rc == 0 ? "passed" : "reported failures"));
    return o;
}

// The high-probability rates carry unspecified constants; their scaling laws are
// checked through the slope criteria of the studies instead.
Outcome criterion12() {
    Outcome o;
    const std::pair<int, std::function<Outcome()>> parts[] = {
        {6, [] { return criterion6(true); }},  {7, [] { return criterion7(true); }},
        {8, [] { return criterion8(true); }},  {9, [] { return criterion9(true); }},
        {10, [] { return criterion10(true); }},
    };
    for (const auto& [id, fn] : parts) o.require(fn().pass, "rate checks of criterion " + std::to_string(id));
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::vector<int> selected;
    std::string out = g_out.string();
    app.add_option("--criterion", selected, "criterion number (repeatable; default all)")->check(CLI::Range(1, 12));
    app.add_option("--out", out, "directory for study outputs");
    CLI11_PARSE(app, argc, argv);
    g_out = out;
    if (selected.empty())
        for (int c = 1; c <= 12; ++c) selected.push_back(c);

    const std::map<int, std::function<Outcome()>> criteria = {
        {1, criterion1}, {2, criterion2}, {3, criterion3},   {4, criterion4},
        {5, criterion5}, {6, [] { return criterion6(); }},  {7, [] { return criterion7(); }},
        {8, [] { return criterion8(); }},  {9, [] { return criterion9(); }},
        {10, [] { return criterion10(); }}, {11, criterion11}, {12, criterion12},
    };

    bool all = true;
    for (int c : selected) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria.at(c)();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        all &= o.pass;
        std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << "; "
                  << num(secs, 3) << " s)" << std::endl;
    }
    return all ? 0 : 1;
}
