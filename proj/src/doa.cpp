// SPDX-License-Identifier: Apache-2.0
#include "qdoa/doa.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace qdoa {

namespace {

double reduce_unit(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r = 0.0;
    return r;
}

}  // namespace

AngleSet::AngleSet(std::vector<double> thetas) : values_(std::move(thetas)) {
    for (double& t : values_) {
        if (!std::isfinite(t)) throw Error(ErrorKind::NonFinite, "angle is not finite");
        t = reduce_unit(t);
    }
    for (size_t i = 0; i < values_.size(); ++i)
        for (size_t j = i + 1; j < values_.size(); ++j)
            if (wrap_dist(values_[i] - values_[j]) == 0.0)
                throw Error(ErrorKind::DuplicateAngles, "angles must be pairwise distinct");
}

AngleSet AngleSet::shifted(double c) const {
    std::vector<double> out = values_;
    for (double& t : out) t += c;
    return AngleSet(std::move(out));
}

MatchResult matching_distance(const AngleSet& a, const AngleSet& b) {
    if (a.size() != b.size()) throw Error(ErrorKind::SizeMismatch, "angle sets differ in size");
    if (a.size() > 9) throw Error(ErrorKind::TooManySources, "matching distance limited to 9 angles");
    const Index s = a.size();
    std::vector<Index> perm(static_cast<size_t>(s));
    std::iota(perm.begin(), perm.end(), Index(0));
    MatchResult best{std::numeric_limits<double>::infinity(), perm};
    if (s == 0) {
        best.distance = 0.0;
        return best;
    }
    do {
        double worst = 0.0;
        for (Index k = 0; k < s && worst < best.distance; ++k)
            worst = std::max(worst, wrap_dist(a[k] - b[perm[static_cast<size_t>(k)]]));
        if (worst < best.distance) {
            best.distance = worst;
            best.assignment = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double min_separation(const AngleSet& thetas) {
    if (thetas.size() == 0) throw Error(ErrorKind::SingleSource, "separation of an empty angle set");
    if (thetas.size() == 1) return 0.5;
    double best = 0.5;
    for (Index i = 0; i < thetas.size(); ++i)
        for (Index j = i + 1; j < thetas.size(); ++j) best = std::min(best, wrap_dist(thetas[i] - thetas[j]));
    return best;
}

ComplexMatrix vandermonde(const AngleSet& thetas, Index p) {
    const Index s = thetas.size();
    if (p < s) throw Error(ErrorKind::TooFewSensors, "Vandermonde matrix needs p >= s");
    ComplexMatrix phi(p, s);
    for (Index l = 0; l < s; ++l)
        for (Index j = 0; j < p; ++j) {
            // Reduce j * theta mod 1 before scaling by 2 pi to keep the phase accurate.
            const double frac = reduce_unit(static_cast<double>(j) * thetas[l]);
            const double phase = -2.0 * std::numbers::pi * frac;
            phi(j, l) = {std::cos(phase), std::sin(phase)};
        }
    return phi;
}

SnapshotBatch gen_snapshots(const AngleSet& thetas, Index p, const ComplexMatrix& amplitudes, double nu,
                            RngStream& noise, NoiseModel model) {
    if (amplitudes.rows() != thetas.size())
        throw Error(ErrorKind::ShapeMismatch, "amplitude rows must equal the number of sources");
    if (amplitudes.cols() < 1) throw Error(ErrorKind::ShapeMismatch, "need at least one snapshot");
    if (!(nu >= 0)) throw Error(ErrorKind::NonPositiveRange, "noise level must be >= 0");
    SnapshotBatch batch;
    batch.field = Field::Complex;
    batch.seed = noise.seed();
    batch.data = vandermonde(thetas, p) * amplitudes;
    if (nu > 0) {
        const Index n = amplitudes.cols();
        for (Index k = 0; k < n; ++k)
            for (Index i = 0; i < p; ++i) {
                double re, im;
                if (model == NoiseModel::ComplexUniform) {
                    re = nu * (2.0 * noise.uniform01() - 1.0);
                    im = nu * (2.0 * noise.uniform01() - 1.0);
                } else {
                    re = nu * noise.normal();
                    im = nu * noise.normal();
                }
                batch.data(i, k) += std::complex<double>(re, im);
            }
    }
    return batch;
}

AngleSet esprit(const ComplexMatrix& basis, const Tolerances& tol) {
    const Index p = basis.rows();
    const Index s = basis.cols();
    if (s < 1 || p < s + 1) throw Error(ErrorKind::BadDimension, "ESPRIT needs p >= s + 1");
    require_finite(basis, "ESPRIT basis");
    const ComplexMatrix u0 = basis.topRows(p - 1);
    const ComplexMatrix u1 = basis.bottomRows(p - 1);
    const auto f = svd(u0);
    if (f.singular_values(s - 1) <= tol.esprit_rank)
        throw Error(ErrorKind::RankDeficientBlock, "shifted basis block is rank deficient");
    const ComplexMatrix psi = pinv(u0, tol) * u1;
    const auto eig = small_eig(psi, tol);
    std::vector<double> thetas(static_cast<size_t>(s));
    for (Index k = 0; k < s; ++k) {
        double arg = std::arg(eig(k));  // (-pi, pi]
        if (arg < 0) arg += 2.0 * std::numbers::pi;
        thetas[static_cast<size_t>(k)] = reduce_unit(-arg / (2.0 * std::numbers::pi));
    }
    std::sort(thetas.begin(), thetas.end());
    return AngleSet(std::move(thetas));
}

namespace {

DOAResult score(AngleSet est, const std::optional<AngleSet>& truth) {
    DOAResult out{std::move(est), std::nullopt, std::nullopt};
    if (truth) {
        auto m = matching_distance(*truth, out.estimated);
        out.md_to_truth = m.distance;
        out.assignment = std::move(m.assignment);
    }
    return out;
}

}  // namespace

DOAResult esprit_from_quantized(const SnapshotBatch& analog, const QuantizerSpec& spec, Index s,
                                RngStream& dither_a, RngStream& dither_b, const std::optional<AngleSet>& truth,
                                const Tolerances& tol) {
    const SnapshotBatch q = quantize_batch(analog, spec, dither_a, dither_b);
    return esprit_from_quantized(q, spec, s, truth, tol);
}

DOAResult esprit_from_quantized(const SnapshotBatch& quantized, const QuantizerSpec& spec, Index s,
                                const std::optional<AngleSet>& truth, const Tolerances& tol) {
    const auto sub = subspace_from_quantized(quantized, spec, s, tol);
    return score(esprit(sub.basis, tol), truth);
}

}  // namespace qdoa
