// SPDX-License-Identifier: Apache-2.0
#include "qdoa/common.hpp"

namespace qdoa {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonSquare: return "NonSquare";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::NotHermitian: return "NotHermitian";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::TooLarge: return "TooLarge";
        case ErrorKind::EmptyRange: return "EmptyRange";
        case ErrorKind::NonPositiveResolution: return "NonPositiveResolution";
        case ErrorKind::NonPositiveRange: return "NonPositiveRange";
        case ErrorKind::BitsTooSmall: return "BitsTooSmall";
        case ErrorKind::NotPSD: return "NotPSD";
        case ErrorKind::BadShape: return "BadShape";
        case ErrorKind::EmptyBatch: return "EmptyBatch";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::BadDimension: return "BadDimension";
        case ErrorKind::NotOrthonormal: return "NotOrthonormal";
        case ErrorKind::SchemeMismatch: return "SchemeMismatch";
        case ErrorKind::TooFewSensors: return "TooFewSensors";
        case ErrorKind::RankDeficientBlock: return "RankDeficientBlock";
        case ErrorKind::DuplicateAngles: return "DuplicateAngles";
        case ErrorKind::SizeMismatch: return "SizeMismatch";
        case ErrorKind::TooManySources: return "TooManySources";
        case ErrorKind::SingleSource: return "SingleSource";
        case ErrorKind::TooFewPoints: return "TooFewPoints";
        case ErrorKind::NonPositive: return "NonPositive";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::HeaderMismatch: return "HeaderMismatch";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    }
    return "Unknown";
}

}  // namespace qdoa
