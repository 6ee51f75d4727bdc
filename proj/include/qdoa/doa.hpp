// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "qdoa/numcore.hpp"
#include "qdoa/random.hpp"
#include "qdoa/snapshots.hpp"
#include "qdoa/subspace.hpp"

namespace qdoa {

/// Distance from x to the nearest integer, in [0, 1/2].
inline double wrap_dist(double x) { return std::abs(x - std::round(x)); }

/// Distinct angles on the torus R/Z, stored in [0, 1).
class AngleSet {
public:
    AngleSet() = default;
    explicit AngleSet(std::vector<double> thetas);
    AngleSet(std::initializer_list<double> thetas) : AngleSet(std::vector<double>(thetas)) {}

    Index size() const { return static_cast<Index>(values_.size()); }
    double operator[](Index i) const { return values_[static_cast<size_t>(i)]; }
    const std::vector<double>& values() const { return values_; }

    /// Every angle shifted by c, reduced mod 1.
    AngleSet shifted(double c) const;

private:
    std::vector<double> values_;
};

struct MatchResult {
    double distance = 0.0;
    /// assignment[k] is the index in the second set matched to element k of the first.
    std::vector<Index> assignment;
};

/// Matching distance min over permutations pi of max_k |a_k - b_pi(k)|_T.
/// Exhaustive search, limited to 9 angles.
MatchResult matching_distance(const AngleSet& a, const AngleSet& b);

/// Minimum pairwise wrap distance. A single angle has separation 1/2 by
/// convention; an empty set throws SingleSource.
double min_separation(const AngleSet& thetas);

/// Vandermonde matrix with entries exp(-2 pi i j theta_l), j = 0..p-1.
ComplexMatrix vandermonde(const AngleSet& thetas, Index p);

enum class NoiseModel {
    ComplexUniform,   // real and imaginary parts i.i.d. U(-nu, nu)
    ComplexGaussian,  // real and imaginary parts i.i.d. N(0, nu^2)
};

/// y_k = Phi(theta) a_k + e_k for the columns a_k of `amplitudes` (s x n).
SnapshotBatch gen_snapshots(const AngleSet& thetas, Index p, const ComplexMatrix& amplitudes,
                            double nu, RngStream& noise,
                            NoiseModel model = NoiseModel::ComplexUniform);

/// ESPRIT on an orthonormal p x s basis: eigenvalues of pinv(U0) U1, where U0
/// and U1 hold the first and last p - 1 rows, mapped to theta = -arg / 2pi
/// and returned in increasing order.
AngleSet esprit(const ComplexMatrix& basis, const Tolerances& tol = {});

inline AngleSet esprit(const SubspaceEstimate<std::complex<double>>& est, const Tolerances& tol = {}) {
    return esprit(est.basis, tol);
}

struct DOAResult {
    AngleSet estimated;
    std::optional<double> md_to_truth;
    std::optional<std::vector<Index>> assignment;
};

/// Quantize with `spec`, estimate the signal subspace, run ESPRIT and, when
/// `truth` is given, score the estimate by matching distance.
DOAResult esprit_from_quantized(const SnapshotBatch& analog, const QuantizerSpec& spec, Index s,
                                RngStream& dither_a, RngStream& dither_b,
                                const std::optional<AngleSet>& truth = std::nullopt,
                                const Tolerances& tol = {});

/// ESPRIT on an already quantized batch.
DOAResult esprit_from_quantized(const SnapshotBatch& quantized, const QuantizerSpec& spec, Index s,
                                const std::optional<AngleSet>& truth = std::nullopt,
                                const Tolerances& tol = {});

}  // namespace qdoa
