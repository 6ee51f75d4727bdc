// SPDX-License-Identifier: Apache-2.0
#include "qdoa/random.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif
#include <numbers>

namespace qdoa {

namespace {

constexpr std::uint64_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint64_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

void check_range(double a, double b) {
    if (!(a < b)) throw Error(ErrorKind::EmptyRange, "uniform range requires a < b");
}

// Symmetric square root factor of a PSD matrix, clipping tiny negative
// eigenvalues to zero.
template <typename Scalar>
Mat<Scalar> psd_factor(const Mat<Scalar>& cov, const Tolerances& tol) {
    const auto eig = hermitian_eig(cov, tol);
    const double top = std::max(0.0, eig.eigenvalues.size() ? eig.eigenvalues(0) : 0.0);
    Eigen::VectorXd root(eig.eigenvalues.size());
    for (Index i = 0; i < root.size(); ++i) {
        const double l = eig.eigenvalues(i);
        if (l < -tol.psd * top || (top == 0.0 && l < 0.0))
            throw Error(ErrorKind::NotPSD, "covariance has a negative eigenvalue");
        // Eigenvalues at rounding level are treated as exact zeros.
        root(i) = l <= tol.psd * top ? 0.0 : std::sqrt(l);
    }
    return eig.eigenvectors * root.asDiagonal();
}

}  // namespace

Philox4x32::Block Philox4x32::apply(Block c, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = kM0 * c[0];
        const std::uint64_t p1 = kM1 * c[2];
        c = {std::uint32_t(p1 >> 32) ^ c[1] ^ key[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ c[3] ^ key[1],
             std::uint32_t(p0)};
        key[0] += std::uint32_t(kW0);
        key[1] += std::uint32_t(kW1);
    }
    return c;
}

void Philox4x32::generate(std::uint64_t first, std::uint64_t count, std::uint64_t substream,
                          std::uint64_t seed, std::uint64_t* out) {
    constexpr std::uint64_t kLow = 0xFFFFFFFFu;
#if defined(__AVX512F__)
    // Eight counters per register. mul_epu32 reads only the low 32 bits of
    // each lane, so the high halves are allowed to carry junk until output.
    const __m512i low = _mm512_set1_epi64(kLow);
    const __m512i m0 = _mm512_set1_epi64(kM0), m1 = _mm512_set1_epi64(kM1);
    const __m512i iota = _mm512_set_epi64(7, 6, 5, 4, 3, 2, 1, 0);
    const __m512i pick_lo = _mm512_set_epi64(11, 3, 10, 2, 9, 1, 8, 0);
    const __m512i pick_hi = _mm512_set_epi64(15, 7, 14, 6, 13, 5, 12, 4);
    std::uint64_t b = 0;
    for (; b + 8 <= count; b += 8) {
        const __m512i ctr = _mm512_add_epi64(_mm512_set1_epi64(static_cast<long long>(first + b)), iota);
        __m512i x0 = ctr, x1 = _mm512_srli_epi64(ctr, 32);
        __m512i x2 = _mm512_set1_epi64(substream & kLow), x3 = _mm512_set1_epi64(substream >> 32);
        std::uint64_t k0 = seed & kLow, k1 = seed >> 32;
        for (int round = 0; round < 10; ++round) {
            const __m512i p0 = _mm512_mul_epu32(x0, m0), p1 = _mm512_mul_epu32(x2, m1);
            x0 = _mm512_ternarylogic_epi64(_mm512_srli_epi64(p1, 32), x1, _mm512_set1_epi64(k0), 0x96);
            x2 = _mm512_ternarylogic_epi64(_mm512_srli_epi64(p0, 32), x3, _mm512_set1_epi64(k1), 0x96);
            x1 = p1;
            x3 = p0;
            k0 = (k0 + kW0) & kLow;
            k1 = (k1 + kW1) & kLow;
        }
        const __m512i lo = _mm512_or_si512(_mm512_and_si512(x0, low), _mm512_slli_epi64(x1, 32));
        const __m512i hi = _mm512_or_si512(_mm512_and_si512(x2, low), _mm512_slli_epi64(x3, 32));
        _mm512_storeu_si512(out + 2 * b, _mm512_permutex2var_epi64(lo, pick_lo, hi));
        _mm512_storeu_si512(out + 2 * b + 8, _mm512_permutex2var_epi64(lo, pick_hi, hi));
    }
    for (; b < count; ++b) {
        const std::uint64_t ctr = first + b;
        const Block c = apply({std::uint32_t(ctr), std::uint32_t(ctr >> 32), std::uint32_t(substream),
                               std::uint32_t(substream >> 32)},
                              {std::uint32_t(seed), std::uint32_t(seed >> 32)});
        out[2 * b] = c[0] | (std::uint64_t(c[1]) << 32);
        out[2 * b + 1] = c[2] | (std::uint64_t(c[3]) << 32);
    }
#elif defined(__GNUC__)
    // Eight counters at a time, 32-bit words widened to 64-bit lanes so the
    // multiplies map onto vector instructions.
    using Lanes = std::uint64_t __attribute__((vector_size(64)));
    constexpr std::uint64_t kWidth = 8;
    for (std::uint64_t b = 0; b < count; b += kWidth) {
        Lanes x0, x1, x2, x3;
        for (std::uint64_t l = 0; l < kWidth; ++l) {
            const std::uint64_t ctr = first + b + l;
            x0[l] = ctr & kLow;
            x1[l] = ctr >> 32;
            x2[l] = substream & kLow;
            x3[l] = substream >> 32;
        }
        std::uint64_t k0 = seed & kLow, k1 = seed >> 32;
        for (int round = 0; round < 10; ++round) {
            const Lanes p0 = x0 * kM0, p1 = x2 * kM1;
            x0 = (p1 >> 32) ^ x1 ^ k0;
            x2 = (p0 >> 32) ^ x3 ^ k1;
            x1 = p1 & kLow;
            x3 = p0 & kLow;
            k0 = (k0 + kW0) & kLow;
            k1 = (k1 + kW1) & kLow;
        }
        const Lanes lo = x0 | (x1 << 32), hi = x2 | (x3 << 32);
        const std::uint64_t lanes = std::min(kWidth, count - b);
        for (std::uint64_t l = 0; l < lanes; ++l) {
            out[2 * (b + l)] = lo[l];
            out[2 * (b + l) + 1] = hi[l];
        }
    }
#else
    for (std::uint64_t b = 0; b < count; ++b) {
        const std::uint64_t ctr = first + b;
        const Block c = apply({std::uint32_t(ctr), std::uint32_t(ctr >> 32), std::uint32_t(substream),
                               std::uint32_t(substream >> 32)},
                              {std::uint32_t(seed), std::uint32_t(seed >> 32)});
        out[2 * b] = c[0] | (std::uint64_t(c[1]) << 32);
        out[2 * b + 1] = c[2] | (std::uint64_t(c[3]) << 32);
    }
    (void)kLow;
#endif
}

void RngStream::fill_uniform01(double* out, std::size_t count) {
    constexpr double kScale = 0x1.0p-53;
    std::size_t i = 0;
    while (i < count && buffered_ > 0) out[i++] = static_cast<double>(next_u64() >> 11) * kScale;
    // Whole blocks straight from the generator.
    thread_local std::vector<std::uint64_t> words;
    while (count - i >= 2) {
        const std::uint64_t blocks = std::min<std::uint64_t>((count - i) / 2, 1024);
        words.resize(2 * blocks);
        Philox4x32::generate(block_, blocks, substream_, seed_, words.data());
        block_ += blocks;
        for (std::uint64_t w = 0; w < 2 * blocks; ++w) out[i++] = static_cast<double>(words[w] >> 11) * kScale;
    }
    if (i < count) out[i++] = static_cast<double>(next_u64() >> 11) * kScale;
}

double RngStream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

Eigen::VectorXd sample_uniform(RngStream& stream, double a, double b, Index count) {
    check_range(a, b);
    Eigen::VectorXd out(count);
    const double w = b - a;
    for (Index i = 0; i < count; ++i) out(i) = a + w * stream.uniform01();
    return out;
}

Eigen::VectorXd sample_triangular(RngStream& stream, double mu, Index count) {
    if (!(mu > 0)) throw Error(ErrorKind::NonPositiveResolution, "triangular dither needs mu > 0");
    Eigen::VectorXd out(count);
    const double w = 2.0 * mu;
    for (Index i = 0; i < count; ++i) {
        const double u = stream.uniform01();
        const double v = stream.uniform01();
        out(i) = w * (u + v) - w;
    }
    return out;
}

Eigen::VectorXcd sample_complex_uniform(RngStream& stream, double a, double b, Index count) {
    check_range(a, b);
    Eigen::VectorXcd out(count);
    const double w = b - a;
    for (Index i = 0; i < count; ++i) {
        const double re = a + w * stream.uniform01();
        const double im = a + w * stream.uniform01();
        out(i) = {re, im};
    }
    return out;
}

Eigen::VectorXd sample_normal(RngStream& stream, Index count) {
    Eigen::VectorXd out(count);
    for (Index i = 0; i < count; ++i) out(i) = stream.normal();
    return out;
}

ComplexMatrix sample_complex_gaussian(RngStream& stream, const ComplexMatrix& covariance,
                                      Index count, const Tolerances& tol) {
    const ComplexMatrix factor = psd_factor(covariance, tol);
    const Index p = covariance.rows();
    ComplexMatrix g(p, count);
    const double scale = std::sqrt(0.5);
    for (Index k = 0; k < count; ++k)
        for (Index i = 0; i < p; ++i) {
            const double re = stream.normal();
            const double im = stream.normal();
            g(i, k) = {scale * re, scale * im};
        }
    return factor * g;
}

RealMatrix sample_real_gaussian(RngStream& stream, const RealMatrix& covariance, Index count,
                                const Tolerances& tol) {
    const RealMatrix factor = psd_factor(covariance, tol);
    const Index p = covariance.rows();
    RealMatrix g(p, count);
    for (Index k = 0; k < count; ++k)
        for (Index i = 0; i < p; ++i) g(i, k) = stream.normal();
    return factor * g;
}

}  // namespace qdoa
