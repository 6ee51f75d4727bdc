// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "qdoa/doa.hpp"
#include "qdoa/estimate.hpp"
#include "qdoa/harness.hpp"
#include "qdoa/random.hpp"
#include "qdoa/subspace.hpp"

namespace qdoa {

namespace {

// Substreams reserved for randomness fixed across trials (truth, amplitudes).
constexpr std::uint64_t kSetupSubstream = ~std::uint64_t(0);
constexpr std::uint64_t kAmplitudeSubstream = ~std::uint64_t(0) - 1;

constexpr Index kBlock = 256;

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Seed of an independent family of streams, e.g. the dithers of quantizer q.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) { return splitmix(seed ^ splitmix(tag)); }

std::uint64_t dither_tag(size_t quantizer) { return 0x100 + quantizer; }
std::uint64_t cell_tag(size_t a, size_t b) { return 0x10000 + (a << 20) + b; }

// Trial values per (series, grid point), written by trial index only.
class Collector {
public:
    Collector(size_t series, size_t points, int trials)
        : points_(points), trials_(static_cast<size_t>(trials)),
          values_(series * points * trials_, 0.0), failed_(series * points * trials_, 0) {}

    template <typename Fn>
    void record(size_t series, size_t point, int trial, double fail_value, Fn&& fn) {
        const size_t at = (series * points_ + point) * trials_ + static_cast<size_t>(trial);
        try {
            values_[at] = fn();
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoConvergence && e.kind() != ErrorKind::RankDeficientBlock &&
                e.kind() != ErrorKind::DuplicateAngles && e.kind() != ErrorKind::NonFinite)
                throw;
            values_[at] = fail_value;
            failed_[at] = 1;
        }
    }

    std::vector<double> values(size_t series, size_t point) const {
        const auto first = values_.begin() + static_cast<std::ptrdiff_t>((series * points_ + point) * trials_);
        return {first, first + static_cast<std::ptrdiff_t>(trials_)};
    }

    int failures(size_t series, size_t point) const {
        int count = 0;
        for (size_t t = 0; t < trials_; ++t) count += failed_[(series * points_ + point) * trials_ + t];
        return count;
    }

private:
    size_t points_;
    size_t trials_;
    std::vector<double> values_;
    std::vector<char> failed_;
};

// Runs fn(trial) for every trial; worker w takes trials w, w + K, ...
template <typename Fn>
void for_each_trial(const ExperimentConfig& cfg, Fn&& fn) {
    const int workers = std::min(cfg.workers, cfg.trials);
    if (workers <= 1) {
        for (int t = 0; t < cfg.trials; ++t) fn(t);
        return;
    }
    std::exception_ptr error;
    std::mutex mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int t = w; t < cfg.trials; t += workers) fn(t);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!error) error = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Per-quantizer dither streams for trial t: quantizer q draws from its own
// derived seed so adding a quantizer leaves the others' draws unchanged.
std::pair<std::vector<RngStream>, std::vector<RngStream>> dither_streams(const ExperimentConfig& cfg, int t) {
    std::vector<RngStream> a, b;
    for (size_t q = 0; q < cfg.quantizers.size(); ++q) {
        a.emplace_back(derive_seed(cfg.seed, dither_tag(q)), substream_id(static_cast<std::uint64_t>(t), Role::DitherA));
        b.emplace_back(derive_seed(cfg.seed, dither_tag(q)), substream_id(static_cast<std::uint64_t>(t), Role::DitherB));
    }
    return {std::move(a), std::move(b)};
}

template <typename Scalar>
void accumulate(const QuantizerSpec& spec, const Mat<Scalar>& y, RngStream& da, RngStream& db,
                OuterProductSum<Scalar>& acc) {
    switch (spec.scheme) {
        case Scheme::Rectangular: {
            const auto pair = rect_quantize_pair(y, spec.lambda, da, db);
            acc.add_cross(pair.q, pair.q_dot);
            break;
        }
        case Scheme::Triangular: acc.add_gram(tri_quantize_bbit(y, spec.lambda, spec.bits, da, db)); break;
        case Scheme::DirectRound: acc.add_gram(direct_round(y, spec.lambda, spec.bits)); break;
    }
}

template <typename Scalar>
Mat<Scalar> estimate(const QuantizerSpec& spec, const OuterProductSum<Scalar>& acc) {
    if (spec.scheme == Scheme::Rectangular) return rect_covariance_from_sum(acc, spec.lambda).matrix;
    return gram_covariance_from_sum(acc).matrix;
}

// Streams one snapshot sequence through several quantizers at once and
// evaluates quantizer q's covariance estimate after each prefix length in
// checkpoints[q] (non-decreasing). gen(k0, m, y) fills y with snapshots
// k0 .. k0 + m - 1 and is called once per block, so all quantizers see the
// same analog data. on_checkpoint(q, g, estimate).
template <typename Scalar, typename Gen, typename OnCheckpoint>
void run_prefix_all(const std::vector<QuantizerSpec>& specs, Index p,
                    const std::vector<std::vector<Index>>& checkpoints, Gen&& gen, std::vector<RngStream>& da,
                    std::vector<RngStream>& db, OnCheckpoint&& on_checkpoint) {
    const size_t nq = specs.size();
    std::vector<OuterProductSum<Scalar>> acc(nq, OuterProductSum<Scalar>(p));
    std::vector<SignPairSum<Scalar>> signs(nq, SignPairSum<Scalar>(p));
    std::vector<size_t> next(nq, 0);
    Index total = 0;
    for (const auto& c : checkpoints)
        if (!c.empty()) total = std::max(total, c.back());
    Mat<Scalar> y;
    Index done = 0;
    while (done < total) {
        Index m = std::min(kBlock, total - done);
        for (size_t q = 0; q < nq; ++q)
            if (next[q] < checkpoints[q].size()) m = std::min(m, checkpoints[q][next[q]] - done);
        y.resize(p, m);
        gen(done, m, y);
        for (size_t q = 0; q < nq; ++q) {
            if (next[q] >= checkpoints[q].size()) continue;
            if (specs[q].scheme == Scheme::Rectangular) signs[q].add(y, specs[q].lambda, da[q], db[q]);
            else accumulate(specs[q], y, da[q], db[q], acc[q]);
        }
        done += m;
        for (size_t q = 0; q < nq; ++q)
            while (next[q] < checkpoints[q].size() && checkpoints[q][next[q]] == done) {
                const bool rect = specs[q].scheme == Scheme::Rectangular;
                on_checkpoint(q, next[q], estimate(specs[q], rect ? signs[q].outer() : acc[q]));
                ++next[q];
            }
    }
}

// Single-quantizer form of run_prefix_all.
template <typename Scalar, typename Gen, typename OnCheckpoint>
void run_prefix(const QuantizerSpec& spec, Index p, const std::vector<Index>& checkpoints, Gen&& gen,
                RngStream& da, RngStream& db, OnCheckpoint&& on_checkpoint) {
    std::vector<RngStream> a{da}, b{db};
    run_prefix_all<Scalar>({spec}, p, {checkpoints}, gen, a, b,
                           [&](size_t, size_t g, const Mat<Scalar>& est) { on_checkpoint(g, est); });
    da = a[0];
    db = b[0];
}

template <typename Scalar>
double subspace_error(const Mat<Scalar>& est, const Mat<Scalar>& truth) {
    const auto sub = leading_eigenspace(est, truth.cols());
    return sin_theta_dist(sub.basis, truth);
}

double doa_error(const ComplexMatrix& est, const AngleSet& truth) {
    const auto sub = leading_eigenspace(est, truth.size());
    return matching_distance(truth, esprit(sub.basis)).distance;
}

double uniform_pm(RngStream& s, double nu) { return nu * (2.0 * s.uniform01() - 1.0); }

// Adds i.i.d. U(-nu, nu) noise to every real (and imaginary) part, column by column.
template <typename Scalar>
void add_uniform_noise(Mat<Scalar>& y, double nu, RngStream& stream) {
    constexpr Index per = is_complex_v<Scalar> ? 2 : 1;
    thread_local std::vector<double> u;
    u.resize(static_cast<size_t>(y.size() * per));
    stream.fill_uniform01(u.data(), u.size());
    const double* d = u.data();
    for (Index j = 0; j < y.cols(); ++j)
        for (Index i = 0; i < y.rows(); ++i, d += per) {
            if constexpr (is_complex_v<Scalar>)
                y(i, j) += Scalar(nu * (2.0 * d[0] - 1.0), nu * (2.0 * d[1] - 1.0));
            else
                y(i, j) += nu * (2.0 * d[0] - 1.0);
        }
}

ResultRow summarize(const ExperimentConfig& cfg, const Collector& col, size_t series, size_t point,
                    std::string label) {
    const auto v = col.values(series, point);
    ResultRow row;
    row.experiment = to_string(cfg.experiment);
    row.quantizer = std::move(label);
    row.median = quantile(v, 0.5);
    row.quantile25 = quantile(v, 0.25);
    row.quantile75 = quantile(v, 0.75);
    row.failures = col.failures(series, point);
    row.success_frac = static_cast<double>(cfg.trials - row.failures) / cfg.trials;
    row.seed = cfg.seed;
    return row;
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ResultTable start_table(const ExperimentConfig& cfg) {
    ResultTable table;
    table.metadata["experiment"] = to_string(cfg.experiment);
    table.metadata["seed"] = std::to_string(cfg.seed);
    table.metadata["version"] = kVersion;
    table.metadata["trials"] = std::to_string(cfg.trials);
    std::istringstream lines(format_config(cfg));
    std::string line;
    int note = 0;
    while (std::getline(lines, line)) {
        const auto eq = line.find(" = ");
        const std::string key = line.substr(0, eq);
        if (key == "workers" || key == "out") continue;  // do not affect results
        if (key == "note")
            table.metadata["note." + std::to_string(note++)] = line.substr(eq + 3);
        else
            table.metadata["config." + key] = line.substr(eq + 3);
    }
    return table;
}

// Snapshot count for a bit budget, rounded down to a multiple of `multiple`.
Index snapshots_for_budget(const QuantizerSpec& spec, double budget, Index p, Index multiple) {
    const auto per_snapshot = static_cast<double>(bits_used(spec, 1, p));
    Index n = static_cast<Index>(std::floor(budget / per_snapshot));
    n = (n / multiple) * multiple;
    return std::max(n, multiple);
}

enum class AmplitudeModel { Canonical, Uniform };

// Bit-normalized DOA sweep shared by wellsep_doa and custom.
ResultTable doa_sweep(const ExperimentConfig& cfg, const AngleSet& truth, AmplitudeModel model) {
    const Index p = cfg.p, s = truth.size();
    const ComplexMatrix phi = vandermonde(truth, p);
    const size_t nq = cfg.quantizers.size(), ng = cfg.grid.size();
    std::vector<std::vector<Index>> ns(nq);
    for (size_t q = 0; q < nq; ++q)
        for (double b : cfg.grid) ns[q].push_back(snapshots_for_budget(cfg.quantizers[q], b, p, s));

    Collector col(nq, ng, cfg.trials);
    for_each_trial(cfg, [&](int t) {
        RngStream noise(cfg.seed, substream_id(t, Role::Noise));
        RngStream amps(cfg.seed, kAmplitudeSubstream);
        auto [da, db] = dither_streams(cfg, t);
        Eigen::VectorXcd a(s);
        auto gen = [&](Index k0, Index m, ComplexMatrix& y) {
            for (Index j = 0; j < m; ++j) {
                if (model == AmplitudeModel::Canonical) {
                    y.col(j) = phi.col((k0 + j) % s);
                } else {
                    for (Index l = 0; l < s; ++l) {
                        const double re = uniform_pm(amps, 1.0);
                        a(l) = {re, uniform_pm(amps, 1.0)};
                    }
                    y.col(j).noalias() = phi * a;
                }
            }
            if (cfg.nu > 0) add_uniform_noise(y, cfg.nu, noise);
        };
        run_prefix_all<std::complex<double>>(cfg.quantizers, p, ns, gen, da, db,
                                             [&](size_t q, size_t g, const ComplexMatrix& est) {
                                                 col.record(q, g, t, 0.5, [&] { return doa_error(est, truth); });
                                             });
    });
    ResultTable table = start_table(cfg);
    std::ostringstream angles;
    angles.precision(17);
    for (Index k = 0; k < s; ++k) angles << (k ? "," : "") << truth[k];
    table.metadata["truth.thetas"] = angles.str();
    for (size_t q = 0; q < nq; ++q) {
        std::vector<double> xs, ys;
        for (size_t g = 0; g < ng; ++g) {
            ResultRow row = summarize(cfg, col, q, g, cfg.quantizers[q].label());
            row.n = ns[q][g];
            row.bits = bits_used(cfg.quantizers[q], row.n, p);
            row.x = static_cast<double>(row.bits);
            xs.push_back(row.x);
            ys.push_back(row.median);
            table.rows.push_back(std::move(row));
        }
        if (xs.size() >= 2 && *std::min_element(ys.begin(), ys.end()) > 0) {
            // The n^(-1/2) law is asymptotic; the headline slope uses the upper
            // half of the budget grid, where second-order terms have died out.
            const std::string label = cfg.quantizers[q].label();
            const size_t half = xs.size() / 2;
            const std::vector<double> xu(xs.begin() + static_cast<std::ptrdiff_t>(half), xs.end());
            const std::vector<double> yu(ys.begin() + static_cast<std::ptrdiff_t>(half), ys.end());
            table.metadata["slope." + label] = fmt(fit_loglog_slope(xu.size() >= 2 ? xu : xs, yu.size() >= 2 ? yu : ys).slope);
            table.metadata["slope_full." + label] = fmt(fit_loglog_slope(xs, ys).slope);
        }
    }
    return table;
}

void require(const ExperimentConfig& cfg, Experiment e) {
    cfg.validate();
    if (cfg.experiment != e)
        throw Error(ErrorKind::ConfigInvalid, std::string("config is for '") + to_string(cfg.experiment) +
                                                  "', runner expects '" + to_string(e) + "'");
}

}  // namespace

ResultTable run_adversarial(const ExperimentConfig& cfg) {
    require(cfg, Experiment::Adversarial);
    const Index p = cfg.p, s = cfg.s;
    RngStream setup(cfg.seed, kSetupSubstream);
    const RealMatrix u = haar_orthonormal<double>(setup, p, s);
    const size_t nq = cfg.quantizers.size(), ng = cfg.grid.size();
    std::vector<std::vector<Index>> ns(nq);
    for (size_t q = 0; q < nq; ++q)
        for (double b : cfg.grid) ns[q].push_back(snapshots_for_budget(cfg.quantizers[q], b, p, 1));

    Collector col(nq, ng, cfg.trials);
    for_each_trial(cfg, [&](int t) {
        RngStream noise(cfg.seed, substream_id(t, Role::Noise));
        auto [da, db] = dither_streams(cfg, t);
        auto gen = [&](Index k0, Index m, RealMatrix& y) {
            for (Index j = 0; j < m; ++j) y.col(j) = u.col((k0 + j) % s);
            if (cfg.nu > 0) add_uniform_noise(y, cfg.nu, noise);
        };
        run_prefix_all<double>(cfg.quantizers, p, ns, gen, da, db, [&](size_t q, size_t g, const RealMatrix& est) {
            col.record(q, g, t, 1.0, [&] { return subspace_error(est, u); });
        });
    });

    ResultTable table = start_table(cfg);
    for (size_t q = 0; q < nq; ++q)
        for (size_t g = 0; g < ng; ++g) {
            ResultRow row = summarize(cfg, col, q, g, cfg.quantizers[q].label());
            row.n = ns[q][g];
            row.bits = bits_used(cfg.quantizers[q], row.n, p);
            row.x = static_cast<double>(row.bits);
            table.rows.push_back(std::move(row));
        }
    return table;
}

ResultTable run_eigendep_rect(const ExperimentConfig& cfg) {
    require(cfg, Experiment::EigendepRect);
    const Index p = cfg.p, r = cfg.s;
    RngStream setup(cfg.seed, kSetupSubstream);
    const RealMatrix rot = haar_orthonormal<double>(setup, p, p);
    const RealMatrix u = rot.leftCols(r);
    const size_t nq = cfg.quantizers.size(), nb = cfg.betas.size(), ng = cfg.grid.size();

    Collector col(nq * nb, ng, cfg.trials);
    for_each_trial(cfg, [&](int t) {
        for (size_t q = 0; q < nq; ++q)
            for (size_t bi = 0; bi < nb; ++bi)
                for (size_t g = 0; g < ng; ++g) {
                    const auto n = static_cast<Index>(cfg.grid[g]);
                    const double zeta = cfg.zeta_scale * std::pow(static_cast<double>(n), -cfg.betas[bi]);
                    // x = R diag(1, zeta, ..., zeta, 0, ..., 0)^(1/2) g: only the first r columns of R matter.
                    RealMatrix mix = u;
                    mix.rightCols(r - 1) *= std::sqrt(zeta);
                    const std::uint64_t cell = derive_seed(cfg.seed, cell_tag(bi, g));
                    RngStream data(cell, substream_id(t, Role::Data));
                    RngStream noise(cell, substream_id(t, Role::Noise));
                    RngStream da(derive_seed(cell, dither_tag(q)), substream_id(t, Role::DitherA));
                    RngStream db(derive_seed(cell, dither_tag(q)), substream_id(t, Role::DitherB));
                    RealMatrix z;
                    auto gen = [&](Index, Index m, RealMatrix& y) {
                        z.resize(r, m);
                        for (Index j = 0; j < m; ++j)
                            for (Index i = 0; i < r; ++i) z(i, j) = data.normal();
                        y.noalias() = mix * z;
                        if (cfg.nu > 0) add_uniform_noise(y, cfg.nu, noise);
                    };
                    run_prefix<double>(cfg.quantizers[q], p, {n}, gen, da, db, [&](size_t, const RealMatrix& est) {
                        col.record(q * nb + bi, g, t, 1.0, [&] { return subspace_error(est, u); });
                    });
                }
    });

    ResultTable table = start_table(cfg);
    for (size_t q = 0; q < nq; ++q)
        for (size_t bi = 0; bi < nb; ++bi) {
            const std::string label = series_label(cfg.quantizers[q].label(), "beta", cfg.betas[bi]);
            std::vector<double> xs, ys;
            for (size_t g = 0; g < ng; ++g) {
                ResultRow row = summarize(cfg, col, q * nb + bi, g, label);
                row.n = static_cast<std::int64_t>(cfg.grid[g]);
                row.bits = bits_used(cfg.quantizers[q], row.n, p);
                row.param = cfg.betas[bi];
                row.x = static_cast<double>(row.n);
                xs.push_back(row.x);
                ys.push_back(row.median);
                table.rows.push_back(std::move(row));
            }
            if (xs.size() >= 2 && *std::min_element(ys.begin(), ys.end()) > 0)
                table.metadata["slope." + label] = fmt(fit_loglog_slope(xs, ys).slope);
        }
    return table;
}

ResultTable run_eigendep_tri(const ExperimentConfig& cfg) {
    require(cfg, Experiment::EigendepTri);
    const Index p = cfg.p;
    const RealMatrix u = RealMatrix::Identity(p, 2);
    const size_t nq = cfg.quantizers.size(), ng = cfg.grid.size();

    // Eight turns around the unit circle spread over the N snapshots.
    auto point = [](Index k, Index total) {
        const double angle = 16.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(total);
        return std::pair{std::cos(angle), std::sin(angle)};
    };
    std::vector<double> sigma_r(ng);
    for (size_t g = 0; g < ng; ++g) {
        const auto total = static_cast<Index>(cfg.grid[g]);
        Eigen::Matrix2d gram = Eigen::Matrix2d::Zero();
        for (Index k = 0; k < total; ++k) {
            const auto [c, s] = point(k, total);
            gram(0, 0) += c * c;
            gram(0, 1) += c * s;
            gram(1, 1) += s * s;
        }
        gram(1, 0) = gram(0, 1);
        sigma_r[g] = std::sqrt(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(gram).eigenvalues()(0));
    }

    Collector col(nq, ng, cfg.trials);
    for_each_trial(cfg, [&](int t) {
        for (size_t g = 0; g < ng; ++g) {
            const auto total = static_cast<Index>(cfg.grid[g]);
            const std::uint64_t cell = derive_seed(cfg.seed, cell_tag(0, g));
            for (size_t q = 0; q < nq; ++q) {
                RngStream noise(cell, substream_id(t, Role::Noise));
                RngStream da(derive_seed(cell, dither_tag(q)), substream_id(t, Role::DitherA));
                RngStream db(derive_seed(cell, dither_tag(q)), substream_id(t, Role::DitherB));
                auto gen = [&](Index k0, Index m, RealMatrix& y) {
                    y.setZero();
                    for (Index j = 0; j < m; ++j) {
                        const auto [c, s] = point(k0 + j, total);
                        y(0, j) = c;
                        y(1, j) = s;
                    }
                    if (cfg.nu > 0) add_uniform_noise(y, cfg.nu, noise);
                };
                run_prefix<double>(cfg.quantizers[q], p, {total}, gen, da, db, [&](size_t, const RealMatrix& est) {
                    col.record(q, g, t, 1.0, [&] { return subspace_error(est, u); });
                });
            }
        }
    });

    ResultTable table = start_table(cfg);
    for (size_t q = 0; q < nq; ++q) {
        std::vector<double> ys;
        for (size_t g = 0; g < ng; ++g) {
            ResultRow row = summarize(cfg, col, q, g, cfg.quantizers[q].label());
            row.n = static_cast<std::int64_t>(cfg.grid[g]);
            row.bits = bits_used(cfg.quantizers[q], row.n, p);
            row.param = cfg.quantizers[q].bits;
            row.x = sigma_r[g];
            ys.push_back(row.median);
            table.rows.push_back(std::move(row));
        }
        if (ng >= 2 && *std::min_element(ys.begin(), ys.end()) > 0)
            table.metadata["slope_vs_sigma_r." + cfg.quantizers[q].label()] = fmt(fit_loglog_slope(sigma_r, ys).slope);
    }
    // Reference series 1 / sigma_r(X_n) for the C / sigma_r guide line.
    for (size_t g = 0; g < ng; ++g) {
        ResultRow row;
        row.experiment = to_string(cfg.experiment);
        row.quantizer = "ref_inv_sigma_r";
        row.n = static_cast<std::int64_t>(cfg.grid[g]);
        row.median = row.quantile25 = row.quantile75 = 1.0 / sigma_r[g];
        row.success_frac = 1.0;
        row.seed = cfg.seed;
        row.x = sigma_r[g];
        table.rows.push_back(std::move(row));
    }
    return table;
}

ResultTable run_wellsep_doa(const ExperimentConfig& cfg) {
    require(cfg, Experiment::WellsepDoa);
    RngStream setup(cfg.seed, kSetupSubstream);
    const double p = static_cast<double>(cfg.p);
    std::vector<double> thetas;
    for (Index k = 1; k <= cfg.s; ++k) thetas.push_back(4.0 * static_cast<double>(k) / p + uniform_pm(setup, 1.0 / p));
    return doa_sweep(cfg, AngleSet(thetas), AmplitudeModel::Canonical);
}

ResultTable run_custom(const ExperimentConfig& cfg) {
    require(cfg, Experiment::Custom);
    return doa_sweep(cfg, AngleSet(cfg.thetas),
                     cfg.amplitudes == "uniform" ? AmplitudeModel::Uniform : AmplitudeModel::Canonical);
}

ResultTable run_phase_transition(const ExperimentConfig& cfg) {
    require(cfg, Experiment::PhaseTransition);
    const Index p = cfg.p, s = 3;
    const size_t nq = cfg.quantizers.size(), ne = cfg.epsilons.size(), ng = cfg.grid.size();
    std::vector<std::vector<Index>> ns(nq);
    for (size_t q = 0; q < nq; ++q)
        for (double b : cfg.grid) ns[q].push_back(snapshots_for_budget(cfg.quantizers[q], b, p, 1));
    std::vector<AngleSet> truths;
    std::vector<ComplexMatrix> phis;
    for (double eps : cfg.epsilons) {
        truths.emplace_back(std::vector<double>{0.0, eps, 0.5});
        phis.push_back(vandermonde(truths.back(), p));
    }

    // Trial values hold the matching distance; success is judged per cell below.
    Collector col(nq * ne, ng, cfg.trials);
    for_each_trial(cfg, [&](int t) {
        for (size_t e = 0; e < ne; ++e) {
            RngStream noise(cfg.seed, substream_id(t, Role::Noise));
            RngStream amps(cfg.seed, kAmplitudeSubstream);
            auto [da, db] = dither_streams(cfg, t);
            Eigen::VectorXcd a(s);
            auto gen = [&](Index, Index m, ComplexMatrix& y) {
                for (Index j = 0; j < m; ++j) {
                    for (Index l = 0; l < s; ++l) {
                        const double re = uniform_pm(amps, 1.0);
                        a(l) = {re, uniform_pm(amps, 1.0)};
                    }
                    y.col(j).noalias() = phis[e] * a;
                }
                if (cfg.nu > 0) add_uniform_noise(y, cfg.nu, noise);
            };
            run_prefix_all<std::complex<double>>(cfg.quantizers, p, ns, gen, da, db,
                                                 [&](size_t q, size_t g, const ComplexMatrix& est) {
                                                     col.record(q * ne + e, g, t, 0.5,
                                                                [&] { return doa_error(est, truths[e]); });
                                                 });
        }
    });

    ResultTable table = start_table(cfg);
    for (size_t q = 0; q < nq; ++q) {
        for (size_t e = 0; e < ne; ++e) {
            const double eps = cfg.epsilons[e];
            const std::string label = series_label(cfg.quantizers[q].label(), "eps", eps);
            for (size_t g = 0; g < ng; ++g) {
                ResultRow row = summarize(cfg, col, q * ne + e, g, label);
                const auto v = col.values(q * ne + e, g);
                const auto hits = std::count_if(v.begin(), v.end(), [&](double md) {
                    return md <= cfg.success_factor * eps;
                });
                row.success_frac = static_cast<double>(hits) / cfg.trials;
                row.n = ns[q][g];
                row.bits = bits_used(cfg.quantizers[q], row.n, p);
                row.param = eps;
                row.x = static_cast<double>(row.bits);
                table.rows.push_back(std::move(row));
            }
            const auto usual = usual_success_bits(table.series(label), cfg.success_threshold);
            table.metadata["usual_bits." + label] = usual ? std::to_string(*usual) : "none";
        }
        const auto fit = fit_phase_transition(table, cfg.quantizers[q], cfg.epsilons, cfg.success_threshold);
        const std::string key = cfg.quantizers[q].label();
        table.metadata["slope." + key] = fit ? fmt(fit->fit.slope) : "none";
        table.metadata["fit_points." + key] = std::to_string(fit ? fit->inv_eps.size() : 0);
    }
    return table;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
    ResultTable table;
    switch (cfg.experiment) {
        case Experiment::Adversarial: table = run_adversarial(cfg); break;
        case Experiment::EigendepRect: table = run_eigendep_rect(cfg); break;
        case Experiment::EigendepTri: table = run_eigendep_tri(cfg); break;
        case Experiment::WellsepDoa: table = run_wellsep_doa(cfg); break;
        case Experiment::PhaseTransition: table = run_phase_transition(cfg); break;
        case Experiment::Custom: table = run_custom(cfg); break;
    }
    table.metadata["timestamp"] = utc_timestamp();
    return table;
}

}  // namespace qdoa
