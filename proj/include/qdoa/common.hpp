// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace qdoa {

using Index = Eigen::Index;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealOf = typename Eigen::NumTraits<Scalar>::Real;

using ComplexMatrix = Mat<std::complex<double>>;
using RealMatrix = Mat<double>;

template <typename Scalar>
inline constexpr bool is_complex_v = Eigen::NumTraits<Scalar>::IsComplex;

/// Scalar field of a quantity: real or complex. `c_F` is the squared
/// modulus of a sign output (1 for real, 2 for complex).
enum class Field { Real, Complex };

constexpr int field_factor(Field f) { return f == Field::Real ? 1 : 2; }

inline const char* to_string(Field f) { return f == Field::Real ? "real" : "complex"; }

enum class ErrorKind {
    NonSquare,
    NonFinite,
    NotHermitian,
    NoConvergence,
    TooLarge,
    EmptyRange,
    NonPositiveResolution,
    NonPositiveRange,
    BitsTooSmall,
    NotPSD,
    BadShape,
    EmptyBatch,
    ShapeMismatch,
    BadDimension,
    NotOrthonormal,
    SchemeMismatch,
    TooFewSensors,
    RankDeficientBlock,
    DuplicateAngles,
    SizeMismatch,
    TooManySources,
    SingleSource,
    TooFewPoints,
    NonPositive,
    ParseError,
    HeaderMismatch,
    IoError,
    ConfigInvalid,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Numerical tolerances shared by the linear-algebra and subspace layers.
struct Tolerances {
    double hermitian_symmetry = 1e-12;   // relative to max |a_ij|
    double pinv_cutoff = 1e-12;          // relative to sigma_1
    int small_eig_iterations_per_dim = 100;
    Index small_eig_max_dim = 64;
    double orthonormality = 1e-8;
    double esprit_rank = 1e-10;          // absolute floor on sigma_min of the shifted block
    double psd = 1e-10;                  // relative to lambda_1
    double eigen_tie = 1e-12;            // relative gap below which lambda_s == lambda_{s+1}
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
    if (!m.allFinite()) throw Error(ErrorKind::NonFinite, what);
}

}  // namespace qdoa
