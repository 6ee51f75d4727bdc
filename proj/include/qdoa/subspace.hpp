// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>

#include "qdoa/estimate.hpp"
#include "qdoa/numcore.hpp"
#include "qdoa/snapshots.hpp"

namespace qdoa {

/// Orthonormal basis of a leading eigenspace together with the eigenvalues
/// that selected it. `tied` is set when lambda_s and lambda_{s+1} coincide,
/// in which case the span is one of several valid choices.
template <typename Scalar>
struct SubspaceEstimate {
    Mat<Scalar> basis;
    Vec<RealOf<Scalar>> selecting_eigenvalues;
    bool tied = false;
};

/// Leading s-dimensional eigenspace of a Hermitian matrix.
template <typename Derived>
SubspaceEstimate<typename Derived::Scalar> leading_eigenspace(const Eigen::MatrixBase<Derived>& a,
                                                              Index s, const Tolerances& tol = {}) {
    if (s < 1 || s > a.rows())
        throw Error(ErrorKind::BadDimension, "subspace dimension must satisfy 1 <= s <= p");
    const auto eig = hermitian_eig(a, tol);
    SubspaceEstimate<typename Derived::Scalar> out;
    out.basis = eig.eigenvectors.leftCols(s);
    out.selecting_eigenvalues = eig.eigenvalues.head(s);
    if (s < a.rows()) {
        const double scale = std::max(std::abs(double(eig.eigenvalues(0))),
                                      std::abs(double(eig.eigenvalues(a.rows() - 1))));
        out.tied = double(eig.eigenvalues(s - 1) - eig.eigenvalues(s)) <= tol.eigen_tie * scale;
    }
    return out;
}

template <typename Scalar>
SubspaceEstimate<Scalar> leading_eigenspace(const CovarianceEstimate<Scalar>& est, Index s,
                                            const Tolerances& tol = {}) {
    return leading_eigenspace(est.matrix, s, tol);
}

namespace detail {

template <typename DU>
void require_orthonormal(const Eigen::MatrixBase<DU>& u, const Tolerances& tol) {
    using Scalar = typename DU::Scalar;
    const Mat<Scalar> gram = u.adjoint() * u;
    const Mat<Scalar> eye = Mat<Scalar>::Identity(u.cols(), u.cols());
    if ((gram - eye).cwiseAbs().maxCoeff() > tol.orthonormality)
        throw Error(ErrorKind::NotOrthonormal, "basis columns are not orthonormal");
}

// sigma_max((I - U U^*) V), the sine of the largest principal angle.
template <typename DU, typename DV>
double projected_residual_norm(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v) {
    using Scalar = typename DU::Scalar;
    const Mat<Scalar> r = v - u * (u.adjoint() * v);
    return double(svd(r).singular_values(0));
}

}  // namespace detail

/// Sine-theta distance between the spans of two orthonormal p x s bases:
/// the sine of the largest principal angle, equal to ||U U^* - V V^*||.
///
/// Computed as ||(I - U U^*) V|| without forming p x p projectors; the
/// result is evaluated in both orders and the larger value returned, so
/// dist(U, V) == dist(V, U) bit for bit.
template <typename DU, typename DV>
double sin_theta_dist(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v,
                      const Tolerances& tol = {}) {
    if (u.rows() != v.rows() || u.cols() != v.cols() || u.cols() == 0)
        throw Error(ErrorKind::ShapeMismatch, "bases must have the same non-empty shape");
    detail::require_orthonormal(u, tol);
    detail::require_orthonormal(v, tol);
    const double d = std::max(detail::projected_residual_norm(u, v), detail::projected_residual_norm(v, u));
    return std::clamp(d, 0.0, 1.0);
}

/// Same distance through the smallest singular value of U^* V,
/// sqrt(1 - sigma_min^2). Loses accuracy for nearly identical spans.
template <typename DU, typename DV>
double sin_theta_dist_cosine(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v) {
    using Scalar = typename DU::Scalar;
    const Mat<Scalar> c = u.adjoint() * v;
    const auto sv = svd(c).singular_values;
    const double smin = double(sv(sv.size() - 1));
    return std::sqrt(std::clamp(1.0 - smin * smin, 0.0, 1.0));
}

/// Quantizes an analog batch with `spec`. Rectangular tau / tau_dot come from
/// `dither_a` / `dither_b`; triangular real / imaginary dithers likewise.
SnapshotBatch quantize_batch(const SnapshotBatch& analog, const QuantizerSpec& spec,
                             RngStream& dither_a, RngStream& dither_b);

/// Covariance estimate matching the batch: rectangular two-dither estimator,
/// triangular estimator, or sample covariance (analog and direct rounding).
CovarianceEstimate<std::complex<double>> covariance_from_batch(const SnapshotBatch& batch);

/// Leading s-dimensional eigenspace of the covariance estimate of a
/// quantized batch. The batch scheme must equal `spec`.
SubspaceEstimate<std::complex<double>> subspace_from_quantized(const SnapshotBatch& batch,
                                                               const QuantizerSpec& spec, Index s,
                                                               const Tolerances& tol = {});

}  // namespace qdoa
