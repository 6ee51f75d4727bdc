// SPDX-License-Identifier: Apache-2.0
#include "qdoa/subspace.hpp"

namespace qdoa {

namespace {

template <typename Scalar>
SnapshotBatch quantize_impl(const Mat<Scalar>& y, const SnapshotBatch& analog, const QuantizerSpec& spec,
                            RngStream& dither_a, RngStream& dither_b) {
    SnapshotBatch out;
    out.field = analog.field;
    out.scheme = spec;
    out.seed = analog.seed;
    switch (spec.scheme) {
        case Scheme::Rectangular: {
            auto pair = rect_quantize_pair(y, spec.lambda, dither_a, dither_b);
            out.data = pair.q.template cast<std::complex<double>>();
            out.paired = pair.q_dot.template cast<std::complex<double>>();
            break;
        }
        case Scheme::Triangular:
            out.data = tri_quantize_bbit(y, spec.lambda, spec.bits, dither_a, dither_b)
                           .template cast<std::complex<double>>();
            break;
        case Scheme::DirectRound:
            out.data = direct_round(y, spec.lambda, spec.bits).template cast<std::complex<double>>();
            break;
    }
    return out;
}

}  // namespace

SnapshotBatch quantize_batch(const SnapshotBatch& analog, const QuantizerSpec& spec, RngStream& dither_a,
                             RngStream& dither_b) {
    spec.validate();
    if (!analog.is_analog()) throw Error(ErrorKind::SchemeMismatch, "batch is already quantized");
    if (spec.field != analog.field)
        throw Error(ErrorKind::SchemeMismatch, "quantizer field differs from batch field");
    if (analog.n() == 0) throw Error(ErrorKind::EmptyBatch, "no snapshots to quantize");
    if (analog.field == Field::Real) {
        const RealMatrix y = analog.data.real();
        return quantize_impl(y, analog, spec, dither_a, dither_b);
    }
    return quantize_impl(analog.data, analog, spec, dither_a, dither_b);
}

CovarianceEstimate<std::complex<double>> covariance_from_batch(const SnapshotBatch& batch) {
    if (batch.n() == 0) throw Error(ErrorKind::EmptyBatch, "no snapshots");
    if (batch.scheme && batch.scheme->scheme == Scheme::Rectangular) {
        if (batch.paired.rows() != batch.data.rows() || batch.paired.cols() != batch.data.cols())
            throw Error(ErrorKind::ShapeMismatch, "rectangular batch needs a paired sign pattern");
        auto est = rect_covariance(QuantizedPair<std::complex<double>>{batch.data, batch.paired},
                                   batch.scheme->lambda);
        est.scheme = batch.scheme;
        return est;
    }
    auto est = sample_covariance(batch.data);
    est.scheme = batch.scheme;
    return est;
}

SubspaceEstimate<std::complex<double>> subspace_from_quantized(const SnapshotBatch& batch,
                                                               const QuantizerSpec& spec, Index s,
                                                               const Tolerances& tol) {
    if (!batch.scheme || !(*batch.scheme == spec))
        throw Error(ErrorKind::SchemeMismatch, "batch was not quantized with " + spec.to_string());
    return leading_eigenspace(covariance_from_batch(batch), s, tol);
}

}  // namespace qdoa
