// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qdoa/common.hpp"
#include "qdoa/random.hpp"

namespace qdoa {

enum class Scheme { Rectangular, Triangular, DirectRound };

/// A memoryless scalar quantization scheme together with its bit budget.
///
///  - Rectangular: a pair of sign quantizers with independent U[-lambda, lambda]
///    dithers; 2 * c_F bits per scalar.
///  - Triangular: Q_mu with triangular dither, mu = lambda / (2^b - 2),
///    saturating outside (-lambda - 2mu, lambda + 2mu); c_F * b bits.
///  - DirectRound: b-bit rounding on [-lambda, lambda] without dither; c_F * b bits.
struct QuantizerSpec {
    Scheme scheme = Scheme::Rectangular;
    double lambda = 1.0;
    int bits = 0;  // unused for Rectangular
    Field field = Field::Complex;

    static QuantizerSpec rectangular(double lambda, Field field = Field::Complex);
    static QuantizerSpec triangular(double lambda, int bits, Field field = Field::Complex);
    static QuantizerSpec direct_round(double lambda, int bits, Field field = Field::Complex);

    /// Throws NonPositiveRange / BitsTooSmall on invalid parameters.
    void validate() const;

    /// Resolution mu of the triangular quantizer.
    double resolution() const;

    /// Bits spent on one scalar of the field (one complex entry counts both parts).
    int bits_per_scalar() const;

    /// Short series name, e.g. "rect", "tri_b4", "round_b2".
    std::string label() const;

    /// Round-trippable text form, e.g. "tri:lambda=2:b=4:field=real".
    std::string to_string() const;
    static QuantizerSpec parse(const std::string& text);

    bool operator==(const QuantizerSpec&) const = default;
};

/// Total bits spent on n snapshots of length p.
std::int64_t bits_used(const QuantizerSpec& spec, std::int64_t n, std::int64_t p);

/// mu = lambda / (2^b - 2): the resolution that makes Q_mu a b-bit quantizer
/// on (-lambda - 2mu, lambda + 2mu).
double bbit_resolution(double lambda, int bits);

namespace detail {

// Flat view of the real and imaginary parts of a dense matrix.
template <typename Scalar>
double* parts(Mat<Scalar>& m) { return reinterpret_cast<double*>(m.data()); }
template <typename Scalar>
const double* parts(const Mat<Scalar>& m) { return reinterpret_cast<const double*>(m.data()); }
template <typename Scalar>
Index part_count(const Mat<Scalar>& m) { return m.size() * (is_complex_v<Scalar> ? 2 : 1); }

}  // namespace detail

/// sign with the convention sign(0) = +1.
inline double sign_scalar(double x) { return x >= 0.0 ? 1.0 : -1.0; }

/// Q_mu(x) = 2mu (floor(x / 2mu) + 1/2), values on the odd multiples of mu.
inline double uniform_quantize(double x, double mu) {
    if (!(mu > 0)) throw Error(ErrorKind::NonPositiveResolution, "Q_mu needs mu > 0");
    return 2.0 * mu * (std::floor(x / (2.0 * mu)) + 0.5);
}

/// b-bit direct rounding R_{lambda,b}; inputs outside [-lambda, lambda] are
/// clamped to the nearest endpoint first.
inline double direct_round(double x, double lambda, int bits) {
    if (!(lambda > 0)) throw Error(ErrorKind::NonPositiveRange, "direct rounding needs lambda > 0");
    if (bits < 1) throw Error(ErrorKind::BitsTooSmall, "direct rounding needs b >= 1");
    const double step = std::ldexp(lambda, -bits);
    if (x >= lambda) return lambda - step;
    if (x < -lambda) x = -lambda;
    return uniform_quantize(x, step);
}

template <typename Derived>
Mat<double> sign_real(const Eigen::MatrixBase<Derived>& x) {
    require_finite(x, "sign_real input");
    return x.derived().template cast<double>().unaryExpr([](double v) { return sign_scalar(v); });
}

template <typename Derived>
Mat<std::complex<double>> sign_complex(const Eigen::MatrixBase<Derived>& z) {
    require_finite(z, "sign_complex input");
    return z.derived().template cast<std::complex<double>>().unaryExpr([](std::complex<double> v) {
        return std::complex<double>(sign_scalar(v.real()), sign_scalar(v.imag()));
    });
}

template <typename Derived>
Mat<typename Derived::Scalar> uniform_quantize(const Eigen::MatrixBase<Derived>& x, double mu) {
    if (!(mu > 0)) throw Error(ErrorKind::NonPositiveResolution, "Q_mu needs mu > 0");
    return x.unaryExpr([mu](double v) { return uniform_quantize(v, mu); });
}

template <typename Derived>
Mat<typename Derived::Scalar> direct_round(const Eigen::MatrixBase<Derived>& x, double lambda,
                                           int bits) {
    using Scalar = typename Derived::Scalar;
    if (!(lambda > 0)) throw Error(ErrorKind::NonPositiveRange, "direct rounding needs lambda > 0");
    if (bits < 1) throw Error(ErrorKind::BitsTooSmall, "direct rounding needs b >= 1");
    // Q_mu with mu = lambda / 2^b, so cells have width 2 mu.
    const double mu = std::ldexp(lambda, -bits), width = 2.0 * mu;
    Mat<Scalar> out = x;
    // Complex storage is interleaved (re, im), so both parts round alike.
    double* v = detail::parts(out);
    const Index count = detail::part_count(out);
    for (Index i = 0; i < count; ++i) {
        const double c = std::max(v[i], -lambda);
        const double q = width * (std::floor(c / width) + 0.5);
        v[i] = c >= lambda ? lambda - mu : q;
    }
    return out;
}

/// Output of the two-dither sign quantizer: q = sign(y + tau), q_dot = sign(y + tau_dot).
template <typename Scalar>
struct QuantizedPair {
    Mat<Scalar> q;
    Mat<Scalar> q_dot;
};

namespace detail {

// Visits the columns of a rows x cols matrix in chunks, handing `fn` the next
// per_entry * rows * kc uniform draws of `stream` for columns k0 .. k0 + kc - 1.
// Draws are consumed in the same order as per-entry uniform01() calls would be.
template <typename Fn>
void with_uniform_chunks(RngStream& stream, Index rows, Index cols, Index per_entry, Fn&& fn) {
    thread_local std::vector<double> buffer;
    const Index chunk = std::max<Index>(1, 8192 / std::max<Index>(1, rows * per_entry));
    for (Index k0 = 0; k0 < cols; k0 += chunk) {
        const Index kc = std::min(chunk, cols - k0);
        const auto need = static_cast<std::size_t>(rows * kc * per_entry);
        buffer.resize(need);
        stream.fill_uniform01(buffer.data(), need);
        fn(k0, kc, buffer.data());
    }
}

// sign(v + tau) for tau = 2 lambda u - lambda.
inline double dithered_sign(double v, double lambda, double u) {
    return sign_scalar(v + (2.0 * lambda * u - lambda));
}

// Q_mu(v + tau) for the triangular dither tau = 2mu (u1 + u2) - 2mu, clamped
// to +-limit when limit > 0.
inline double tri_scalar(double v, double mu, double limit, double u1, double u2) {
    const double w = 2.0 * mu;
    const double tau = w * (u1 + u2) - w;
    double q = w * (std::floor((v + tau) / w) + 0.5);
    if (limit > 0) q = std::clamp(q, -limit, limit);
    return q;
}

// out = sign(y + tau) with tau = 2 lambda u - lambda, one draw per real part.
template <typename Scalar>
void sign_fill(const Mat<Scalar>& y, double lambda, RngStream& stream, Mat<Scalar>& out) {
    const double* v = parts(y);
    double* o = parts(out);
    const Index count = part_count(y);
    with_uniform_chunks(stream, 1, count, 1, [&](Index k0, Index kc, const double* u) {
        for (Index i = 0; i < kc; ++i) o[k0 + i] = dithered_sign(v[k0 + i], lambda, u[i]);
    });
}

// Triangular dither over `count` parts. Real-field parts draw two uniforms
// each from `re`; complex parts alternate (re, im) in storage, real parts
// drawing from `re` and imaginary parts from `im`.
inline void tri_fill(const double* v, double* o, Index count, bool complex, double mu, double limit,
                     RngStream& re, RngStream& im) {
    thread_local std::vector<double> ua, ub;
    constexpr Index kChunk = 4096;
    for (Index k0 = 0; k0 < count; k0 += kChunk) {
        const Index kc = std::min(kChunk, count - k0);
        if (!complex) {
            ua.resize(static_cast<std::size_t>(2 * kc));
            re.fill_uniform01(ua.data(), ua.size());
            for (Index i = 0; i < kc; ++i) o[k0 + i] = tri_scalar(v[k0 + i], mu, limit, ua[2 * i], ua[2 * i + 1]);
            continue;
        }
        // kc is even, so each stream supplies kc uniforms for kc / 2 parts.
        ua.resize(static_cast<std::size_t>(kc));
        ub.resize(static_cast<std::size_t>(kc));
        re.fill_uniform01(ua.data(), ua.size());
        im.fill_uniform01(ub.data(), ub.size());
        for (Index i = 0; i < kc / 2; ++i) {
            o[k0 + 2 * i] = tri_scalar(v[k0 + 2 * i], mu, limit, ua[2 * i], ua[2 * i + 1]);
            o[k0 + 2 * i + 1] = tri_scalar(v[k0 + 2 * i + 1], mu, limit, ub[2 * i], ub[2 * i + 1]);
        }
    }
}

}  // namespace detail

/// Rectangular dithered pair. Entries of tau are drawn from `dither_a`, entries
/// of tau_dot from `dither_b`, column by column (real part before imaginary part).
template <typename Derived>
QuantizedPair<typename Derived::Scalar> rect_quantize_pair(const Eigen::MatrixBase<Derived>& y,
                                                           double lambda, RngStream& dither_a,
                                                           RngStream& dither_b) {
    using Scalar = typename Derived::Scalar;
    if (!(lambda > 0)) throw Error(ErrorKind::NonPositiveRange, "rectangular dither needs lambda > 0");
    require_finite(y, "rect_quantize_pair input");
    const Mat<Scalar>& ye = y.eval();
    QuantizedPair<Scalar> out{Mat<Scalar>(y.rows(), y.cols()), Mat<Scalar>(y.rows(), y.cols())};
    detail::sign_fill(ye, lambda, dither_a, out.q);
    detail::sign_fill(ye, lambda, dither_b, out.q_dot);
    return out;
}

/// Triangular-dithered Q_mu. Real parts are dithered from `dither_re`,
/// imaginary parts from `dither_im`. `saturation > 0` clamps every output
/// part to [-saturation, saturation] (finite-bit variant).
template <typename Derived>
Mat<typename Derived::Scalar> tri_quantize(const Eigen::MatrixBase<Derived>& y, double mu,
                                           RngStream& dither_re, RngStream& dither_im,
                                           double saturation = 0.0) {
    using Scalar = typename Derived::Scalar;
    if (!(mu > 0)) throw Error(ErrorKind::NonPositiveResolution, "triangular dither needs mu > 0");
    require_finite(y, "tri_quantize input");
    const Mat<Scalar>& ye = y.eval();
    Mat<Scalar> out(y.rows(), y.cols());
    const double* v = detail::parts(ye);
    double* o = detail::parts(out);
    const Index count = detail::part_count(ye);
    detail::tri_fill(v, o, count, is_complex_v<Scalar>, mu, saturation, dither_re, dither_im);
    return out;
}

/// b-bit triangular quantizer: mu = lambda / (2^b - 2), outputs saturate at
/// the extreme alphabet points +-(2^b - 1) mu.
template <typename Derived>
Mat<typename Derived::Scalar> tri_quantize_bbit(const Eigen::MatrixBase<Derived>& y, double lambda,
                                                int bits, RngStream& dither_re, RngStream& dither_im) {
    const double mu = bbit_resolution(lambda, bits);
    const double limit = (std::ldexp(1.0, bits) - 1.0) * mu;
    return tri_quantize(y, mu, dither_re, dither_im, limit);
}

}  // namespace qdoa
