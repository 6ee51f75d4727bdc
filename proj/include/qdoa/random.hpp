// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <array>
#include <cstddef>

#include <Eigen/QR>

#include "qdoa/common.hpp"
#include "qdoa/numcore.hpp"

namespace qdoa {

/// Roles a Monte-Carlo trial draws randomness for. Each role of each trial
/// gets its own substream: substream = trial_index * 4 + role.
enum class Role : std::uint64_t { Data = 0, Noise = 1, DitherA = 2, DitherB = 3 };

constexpr std::uint64_t substream_id(std::uint64_t trial, Role role) {
    return trial * 4 + static_cast<std::uint64_t>(role);
}

/// Philox4x32-10 block function (Salmon et al., SC'11): maps a 128-bit
/// counter and a 64-bit key to 128 pseudo-random bits.
struct Philox4x32 {
    using Block = std::array<std::uint32_t, 4>;
    static Block apply(Block ctr, std::array<std::uint32_t, 2> key);

    /// Blocks `first .. first + count - 1` of the counter layout
    /// (block_lo, block_hi, substream_lo, substream_hi), two 64-bit words
    /// each, written to out[0 .. 2 count).
    static void generate(std::uint64_t first, std::uint64_t count, std::uint64_t substream,
                         std::uint64_t seed, std::uint64_t* out);
};

/// Reproducible random stream keyed by (seed, substream). Counter-based:
/// word i of the stream is a pure function of (seed, substream, i), so any
/// substream is opened in O(1) and distinct substreams never overlap.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t substream) : seed_(seed), substream_(substream) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t substream() const noexcept { return substream_; }

    std::uint64_t next_u64() {
        if (buffered_ == 0) refill();
        return buffer_[2 - buffered_--];
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// `count` consecutive uniform01() draws written to `out`.
    void fill_uniform01(double* out, std::size_t count);

    /// Standard normal via Box-Muller.
    double normal();

private:
    void refill() {
        Philox4x32::generate(block_++, 1, substream_, seed_, buffer_.data());
        buffered_ = 2;
    }

    std::uint64_t seed_;
    std::uint64_t substream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

/// i.i.d. uniform draws on [a, b].
Eigen::VectorXd sample_uniform(RngStream& stream, double a, double b, Index count);

/// Draws of U(-mu, mu) * U(-mu, mu): each one is the sum of two independent
/// uniforms, supported on (-2 mu, 2 mu).
Eigen::VectorXd sample_triangular(RngStream& stream, double mu, Index count);

/// Complex draws with independent real and imaginary parts, each U[a, b].
Eigen::VectorXcd sample_complex_uniform(RngStream& stream, double a, double b, Index count);

/// i.i.d. standard normal draws.
Eigen::VectorXd sample_normal(RngStream& stream, Index count);

/// Circularly symmetric complex Gaussian vectors with E z z^* = covariance,
/// returned as the columns of a p x count matrix. Real and imaginary parts
/// of the underlying standard draw have variance 1/2 each.
ComplexMatrix sample_complex_gaussian(RngStream& stream, const ComplexMatrix& covariance,
                                      Index count, const Tolerances& tol = {});

/// Real Gaussian vectors N(0, covariance), p x count.
RealMatrix sample_real_gaussian(RngStream& stream, const RealMatrix& covariance, Index count,
                                const Tolerances& tol = {});

/// Haar-distributed p x s matrix with orthonormal columns (QR of a Gaussian
/// matrix with the diagonal of R rotated to be real positive).
template <typename Scalar>
Mat<Scalar> haar_orthonormal(RngStream& stream, Index p, Index s) {
    if (s < 1 || p < s) throw Error(ErrorKind::BadShape, "haar_orthonormal requires p >= s >= 1");
    Mat<Scalar> g(p, s);
    for (Index j = 0; j < s; ++j)
        for (Index i = 0; i < p; ++i) {
            if constexpr (is_complex_v<Scalar>) {
                const double re = stream.normal();
                const double im = stream.normal();
                g(i, j) = Scalar(re, im);
            } else {
                g(i, j) = stream.normal();
            }
        }
    Eigen::HouseholderQR<Mat<Scalar>> qr(g);
    Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(p, s);
    const Mat<Scalar> r = qr.matrixQR().topRows(s).template triangularView<Eigen::Upper>();
    for (Index j = 0; j < s; ++j) q.col(j) *= detail::phase_of(r(j, j));
    return q;
}

}  // namespace qdoa
