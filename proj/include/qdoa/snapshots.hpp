// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include "qdoa/common.hpp"
#include "qdoa/quantize.hpp"

namespace qdoa {

/// n snapshots of length p stored as the columns of `data`. Real-field
/// batches keep zero imaginary parts. Quantized rectangular batches carry
/// the second sign pattern (q_dot) in `paired`; every other batch leaves it
/// empty. An empty `scheme` marks analog data.
struct SnapshotBatch {
    Field field = Field::Complex;
    ComplexMatrix data;
    ComplexMatrix paired;
    std::optional<QuantizerSpec> scheme;
    std::uint64_t seed = 0;

    Index p() const { return data.rows(); }
    Index n() const { return data.cols(); }
    bool is_analog() const { return !scheme.has_value(); }
};

/// Reads a snapshot CSV. The first line is a header
/// "# field=complex p=<p>" (or "field=real"); every following non-empty
/// line is one snapshot with 2p numbers alternating re,im (p numbers for
/// real files). Throws ParseError naming the offending line, or
/// HeaderMismatch for a missing or malformed header.
SnapshotBatch read_snapshots(std::istream& in);
SnapshotBatch ingest_snapshots(const std::string& path);

/// Writes `batch.data` in the same format with 17 significant digits.
void write_snapshots(std::ostream& out, const SnapshotBatch& batch);
void write_snapshots(const std::string& path, const SnapshotBatch& batch);

}  // namespace qdoa
