// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <ostream>

#include "qdoa/common.hpp"
#include "qdoa/quantize.hpp"
#include "qdoa/random.hpp"

namespace qdoa {

/// A Hermitian p x p covariance estimate. `scheme` is empty for the analog
/// sample covariance. Rectangular estimates may be indefinite.
template <typename Scalar>
struct CovarianceEstimate {
    Mat<Scalar> matrix;
    std::optional<QuantizerSpec> scheme;
    Index n_samples = 0;
};

/// Streaming sum of outer products sum_k a_k b_k^* over column blocks.
/// Partial sums built from disjoint blocks can be merged; the total is
/// independent of the partition up to floating-point reassociation.
template <typename Scalar>
class OuterProductSum {
public:
    explicit OuterProductSum(Index p) : sum_(Mat<Scalar>::Zero(p, p)), gram_(Mat<Scalar>::Zero(p, p)) {}

    Index dim() const { return sum_.rows(); }
    Index count() const { return count_; }

    /// Adds sum over the columns of a and b of a_k b_k^*.
    template <typename DA, typename DB>
    void add_cross(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
        check(a.rows(), a.cols());
        if (b.rows() != a.rows() || b.cols() != a.cols())
            throw Error(ErrorKind::ShapeMismatch, "paired blocks differ in shape");
        sum_.noalias() += a * b.adjoint();
        count_ += a.cols();
    }

    /// Adds sum over the columns of a of a_k a_k^*.
    template <typename DA>
    void add_gram(const Eigen::MatrixBase<DA>& a) {
        check(a.rows(), a.cols());
        gram_.template selfadjointView<Eigen::Lower>().rankUpdate(a.derived());
        count_ += a.cols();
    }

    /// Adds a precomputed cross sum over `count` snapshots.
    void add_sum(const Mat<Scalar>& s, Index count) {
        if (s.rows() != dim() || s.cols() != dim()) throw Error(ErrorKind::ShapeMismatch, "sum is not p x p");
        sum_ += s;
        count_ += count;
    }

    void merge(const OuterProductSum& other) {
        if (other.dim() != dim()) throw Error(ErrorKind::ShapeMismatch, "merging sums of different p");
        sum_ += other.sum_;
        gram_ += other.gram_;
        count_ += other.count_;
    }

    /// The accumulated sum (Gram contributions expanded to the full matrix).
    Mat<Scalar> sum() const {
        Mat<Scalar> out = gram_.template selfadjointView<Eigen::Lower>();
        out += sum_;
        return out;
    }

private:
    void check(Index rows, Index /*cols*/) const {
        if (rows != dim()) throw Error(ErrorKind::ShapeMismatch, "snapshot length differs from p");
    }

    Mat<Scalar> sum_;
    Mat<Scalar> gram_;
    Index count_ = 0;
};

/// Exact streaming form of rect_quantize_pair followed by add_cross. The signs
/// of 64 consecutive snapshots are packed into one word per real part, so
/// sum_k s_k t_k over a word is 64 - 2 popcount(s ^ t). Consumes the dither
/// streams in the same order as rect_quantize_pair and reproduces its sum
/// exactly.
template <typename Scalar>
class SignPairSum {
public:
    explicit SignPairSum(Index p)
        : p_(p), parts_(p * kParts), disagree_(static_cast<std::size_t>(parts_ * parts_), 0) {}

    Index dim() const { return p_; }
    Index count() const { return count_; }

    template <typename Derived>
    void add(const Eigen::MatrixBase<Derived>& y, double lambda, RngStream& dither_a, RngStream& dither_b) {
        if (!(lambda > 0)) throw Error(ErrorKind::NonPositiveRange, "rectangular dither needs lambda > 0");
        if (y.rows() != p_) throw Error(ErrorKind::ShapeMismatch, "snapshot length differs from p");
        require_finite(y, "SignPairSum input");
        const Mat<Scalar>& ye = y.eval();
        const double* v = detail::parts(ye);
        const auto P = static_cast<std::size_t>(parts_);
        std::vector<std::uint64_t> a(P), b(P);
        std::vector<double> ua, ub;
        for (Index k0 = 0; k0 < ye.cols(); k0 += 64) {
            const Index kc = std::min<Index>(64, ye.cols() - k0);
            const auto draws = P * static_cast<std::size_t>(kc);
            ua.resize(draws);
            ub.resize(draws);
            dither_a.fill_uniform01(ua.data(), draws);
            dither_b.fill_uniform01(ub.data(), draws);
            std::fill(a.begin(), a.end(), 0);
            std::fill(b.begin(), b.end(), 0);
            const double* col = v + static_cast<std::size_t>(k0) * P;
            for (Index k = 0; k < kc; ++k) {
                const std::size_t off = static_cast<std::size_t>(k) * P;
                for (std::size_t i = 0; i < P; ++i) {
                    const double x = col[off + i];
                    a[i] |= std::uint64_t(x + (2.0 * lambda * ua[off + i] - lambda) < 0.0) << k;
                    b[i] |= std::uint64_t(x + (2.0 * lambda * ub[off + i] - lambda) < 0.0) << k;
                }
            }
            for (std::size_t i = 0; i < P; ++i) {
                std::uint64_t* row = disagree_.data() + i * P;
                for (std::size_t j = 0; j < P; ++j) row[j] += std::uint64_t(std::popcount(a[i] ^ b[j]));
            }
        }
        count_ += ye.cols();
    }

    /// sum_k q_k q_dot_k^* as an OuterProductSum over count() snapshots.
    OuterProductSum<Scalar> outer() const {
        const auto P = static_cast<std::size_t>(parts_);
        const auto agree = [&](std::size_t i, std::size_t j) {
            return static_cast<double>(count_) - 2.0 * static_cast<double>(disagree_[i * P + j]);
        };
        Mat<Scalar> s(p_, p_);
        for (Index r = 0; r < p_; ++r)
            for (Index t = 0; t < p_; ++t) {
                const auto i = static_cast<std::size_t>(r * kParts), j = static_cast<std::size_t>(t * kParts);
                if constexpr (is_complex_v<Scalar>)
                    s(r, t) = Scalar(agree(i, j) + agree(i + 1, j + 1), agree(i + 1, j) - agree(i, j + 1));
                else
                    s(r, t) = agree(i, j);
            }
        OuterProductSum<Scalar> out(p_);
        out.add_sum(s, count_);
        return out;
    }

private:
    static constexpr Index kParts = is_complex_v<Scalar> ? 2 : 1;
    Index p_;
    Index parts_;
    std::vector<std::uint64_t> disagree_;
    Index count_ = 0;
};

/// Rectangular two-dither estimator 1/2 (S + S^*) with S = lambda^2 / n sum q_k q_dot_k^*.
template <typename Scalar>
CovarianceEstimate<Scalar> rect_covariance_from_sum(const OuterProductSum<Scalar>& acc, double lambda,
                                                    std::optional<QuantizerSpec> scheme = {}) {
    if (acc.count() == 0) throw Error(ErrorKind::EmptyBatch, "no quantized pairs");
    const Mat<Scalar> s = (lambda * lambda / static_cast<double>(acc.count())) * acc.sum();
    return {0.5 * (s + s.adjoint()), scheme, acc.count()};
}

/// (1/n) sum of outer products, symmetrized.
template <typename Scalar>
CovarianceEstimate<Scalar> gram_covariance_from_sum(const OuterProductSum<Scalar>& acc,
                                                    std::optional<QuantizerSpec> scheme = {}) {
    if (acc.count() == 0) throw Error(ErrorKind::EmptyBatch, "no snapshots");
    const Mat<Scalar> s = acc.sum() / static_cast<double>(acc.count());
    return {0.5 * (s + s.adjoint()), scheme, acc.count()};
}

/// Rectangular estimator from a batch of quantized pairs (columns are snapshots).
template <typename Scalar>
CovarianceEstimate<Scalar> rect_covariance(const QuantizedPair<Scalar>& pairs, double lambda) {
    if (!(lambda > 0)) throw Error(ErrorKind::NonPositiveRange, "lambda must be > 0");
    if (pairs.q.cols() == 0) throw Error(ErrorKind::EmptyBatch, "no quantized pairs");
    OuterProductSum<Scalar> acc(pairs.q.rows());
    acc.add_cross(pairs.q, pairs.q_dot);
    return rect_covariance_from_sum(acc, lambda);
}

/// Triangular estimator (1/n) sum q_k q_k^* (Hermitian PSD).
template <typename Derived>
CovarianceEstimate<typename Derived::Scalar> tri_covariance(const Eigen::MatrixBase<Derived>& q) {
    if (q.cols() == 0 || q.rows() == 0) throw Error(ErrorKind::EmptyBatch, "no quantized snapshots");
    OuterProductSum<typename Derived::Scalar> acc(q.rows());
    acc.add_gram(q);
    return gram_covariance_from_sum(acc);
}

/// Analog sample covariance (1/n) Y Y^*.
template <typename Derived>
CovarianceEstimate<typename Derived::Scalar> sample_covariance(const Eigen::MatrixBase<Derived>& y) {
    return tri_covariance(y);
}

/// Row-major CSV dump, one matrix row per line, each entry written as "re,im".
template <typename Scalar>
void write_csv(std::ostream& out, const CovarianceEstimate<Scalar>& est) {
    const auto old = out.precision(17);
    for (Index i = 0; i < est.matrix.rows(); ++i) {
        for (Index j = 0; j < est.matrix.cols(); ++j) {
            const std::complex<double> v(est.matrix(i, j));
            if (j > 0) out << ',';
            out << v.real() << ',' << v.imag();
        }
        out << '\n';
    }
    out.precision(old);
}

}  // namespace qdoa
