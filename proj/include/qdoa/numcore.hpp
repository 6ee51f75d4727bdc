// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qdoa/common.hpp"

namespace qdoa {

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are sorted
/// non-increasing; column j of `eigenvectors` belongs to eigenvalue j.
template <typename Scalar>
struct HermitianEig {
    Vec<RealOf<Scalar>> eigenvalues;
    Mat<Scalar> eigenvectors;
};

/// Thin SVD, A = U diag(sigma) V^*, singular values non-increasing.
template <typename Scalar>
struct SvdResult {
    Mat<Scalar> U;
    Vec<RealOf<Scalar>> singular_values;
    Mat<Scalar> V;
};

namespace detail {

template <typename Scalar>
RealOf<Scalar> max_abs(const Mat<Scalar>& a) {
    return a.size() == 0 ? RealOf<Scalar>(0) : a.cwiseAbs().maxCoeff();
}

// Unit-modulus phase of z (1 for z == 0).
template <typename Scalar>
Scalar phase_of(const Scalar& z) {
    using std::abs;
    const auto r = abs(z);
    return r == RealOf<Scalar>(0) ? Scalar(1) : z / r;
}

// Rotate every column so that its largest-modulus entry is real and positive.
template <typename Scalar>
void normalize_column_phases(Mat<Scalar>& v) {
    using std::abs;
    for (Index j = 0; j < v.cols(); ++j) {
        Index imax = 0;
        v.col(j).cwiseAbs().maxCoeff(&imax);
        const Scalar ph = phase_of(v(imax, j));
        v.col(j) *= Eigen::numext::conj(ph);
        if constexpr (is_complex_v<Scalar>) v(imax, j) = Scalar(std::real(v(imax, j)), 0);
    }
}

// Householder reduction of a Hermitian matrix to tridiagonal form.
// On return A = Q T Q^* where T has diagonal `diag` and real non-negative
// sub-diagonal `sub` (sub[i] couples i and i+1).
template <typename Scalar>
void tridiagonalize(Mat<Scalar> a, Mat<Scalar>& q, Vec<RealOf<Scalar>>& diag,
                    Vec<RealOf<Scalar>>& sub) {
    using Real = RealOf<Scalar>;
    using std::abs;
    const Index n = a.rows();
    q = Mat<Scalar>::Identity(n, n);
    for (Index k = 0; k + 2 < n; ++k) {
        const Index m = n - k - 1;
        Vec<Scalar> v = a.col(k).tail(m);
        const Real xnorm = v.norm();
        if (xnorm == Real(0)) continue;
        const Scalar alpha = -phase_of(v(0)) * xnorm;
        v(0) -= alpha;
        const Real vnorm = v.norm();
        if (vnorm == Real(0)) continue;
        v /= vnorm;

        auto block = a.bottomRightCorner(m, m);
        const Vec<Scalar> p = block * v;
        const Scalar vp = v.dot(p);  // v^* p, real for Hermitian block
        const Vec<Scalar> w = p - vp * v;
        block -= Real(2) * (v * w.adjoint() + w * v.adjoint());

        a.col(k).tail(m).setZero();
        a.row(k).tail(m).setZero();
        a(k + 1, k) = alpha;
        a(k, k + 1) = Eigen::numext::conj(alpha);

        auto qcols = q.rightCols(m);
        const Vec<Scalar> qv = qcols * v;
        qcols -= Real(2) * qv * v.adjoint();
    }

    diag.resize(n);
    sub = Vec<Real>::Zero(n);
    for (Index i = 0; i < n; ++i) diag(i) = Eigen::numext::real(a(i, i));
    // Diagonal unitary similarity making the sub-diagonal real and non-negative.
    Scalar d = Scalar(1);
    for (Index i = 0; i + 1 < n; ++i) {
        const Scalar e = a(i + 1, i);
        sub(i) = abs(e);
        d *= phase_of(e);
        q.col(i + 1) *= d;
    }
}

// Implicit-shift QL iteration on a real symmetric tridiagonal matrix.
// Rotations are accumulated into the columns of z.
template <typename Scalar>
void tridiagonal_ql(Vec<RealOf<Scalar>>& d, Vec<RealOf<Scalar>>& e, Mat<Scalar>& z) {
    using Real = RealOf<Scalar>;
    using std::abs;
    const Index n = d.size();
    const Real eps = std::numeric_limits<Real>::epsilon();
    const int max_iter = 60;
    for (Index l = 0; l < n; ++l) {
        int iter = 0;
        Index m = l;
        do {
            for (m = l; m + 1 < n; ++m) {
                const Real dd = abs(d(m)) + abs(d(m + 1));
                if (abs(e(m)) <= eps * dd) break;
            }
            if (m == l) break;
            if (iter++ == max_iter)
                throw Error(ErrorKind::NoConvergence, "tridiagonal QL iteration cap reached");
            Real g = (d(l + 1) - d(l)) / (Real(2) * e(l));
            Real r = std::hypot(g, Real(1));
            g = d(m) - d(l) + e(l) / (g + std::copysign(r, g));
            Real s = 1, c = 1, p = 0;
            Index i = m - 1;
            bool underflow = false;
            for (;; --i) {
                Real f = s * e(i);
                const Real b = c * e(i);
                r = std::hypot(f, g);
                e(i + 1) = r;
                if (r == Real(0)) {
                    d(i + 1) -= p;
                    e(m) = 0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d(i + 1) - p;
                r = (d(i) - g) * s + Real(2) * c * b;
                p = s * r;
                d(i + 1) = g + p;
                g = c * r - b;
                for (Index k = 0; k < z.rows(); ++k) {
                    const Scalar zf = z(k, i + 1);
                    z(k, i + 1) = s * z(k, i) + c * zf;
                    z(k, i) = c * z(k, i) - s * zf;
                }
                if (i == l) break;
            }
            if (underflow) continue;
            d(l) -= p;
            e(l) = g;
            e(m) = 0;
        } while (m != l);
    }
}

template <typename Scalar>
void require_square(const Mat<Scalar>& a) {
    if (a.rows() != a.cols() || a.rows() == 0)
        throw Error(ErrorKind::NonSquare, "expected a non-empty square matrix");
}

}  // namespace detail

/// Full eigen-decomposition of a Hermitian (real symmetric) matrix by
/// Householder tridiagonalization followed by implicit-shift QL.
///
/// The input is symmetrized as (A + A^*)/2 before the reduction; inputs that
/// deviate from Hermitian by more than `tol.hermitian_symmetry * max|a_ij|`
/// are rejected. Eigenvector phases are fixed so that the largest-modulus
/// entry of each column is real positive. Tied eigenvalues get an arbitrary
/// orthonormal basis of their eigenspace.
template <typename Derived>
HermitianEig<typename Derived::Scalar> hermitian_eig(const Eigen::MatrixBase<Derived>& input,
                                                     const Tolerances& tol = {}) {
    using Scalar = typename Derived::Scalar;
    using Real = RealOf<Scalar>;
    Mat<Scalar> a = input;
    detail::require_square(a);
    require_finite(a, "hermitian_eig input");
    const Real scale = detail::max_abs(a);
    const Real asym = detail::max_abs(Mat<Scalar>(a - a.adjoint()));
    if (asym > Real(tol.hermitian_symmetry) * scale)
        throw Error(ErrorKind::NotHermitian, "matrix is not Hermitian within tolerance");
    a = (Real(0.5) * (a + a.adjoint())).eval();

    const Index n = a.rows();
    Mat<Scalar> z;
    Vec<Real> d, e;
    detail::tridiagonalize(a, z, d, e);
    detail::tridiagonal_ql(d, e, z);

    std::vector<Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return d(i) > d(j); });

    HermitianEig<Scalar> out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        out.eigenvalues(j) = d(order[static_cast<size_t>(j)]);
        out.eigenvectors.col(j) = z.col(order[static_cast<size_t>(j)]);
    }
    detail::normalize_column_phases(out.eigenvectors);
    return out;
}

/// Thin singular value decomposition (two-sided Jacobi).
template <typename Derived>
SvdResult<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    Mat<Scalar> m = a;
    if (m.size() == 0) throw Error(ErrorKind::BadShape, "svd of an empty matrix");
    require_finite(m, "svd input");
    Eigen::JacobiSVD<Mat<Scalar>> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

/// Moore-Penrose pseudoinverse. Singular values below
/// `tol.pinv_cutoff * sigma_1` are treated as zero.
template <typename Derived>
Mat<typename Derived::Scalar> pinv(const Eigen::MatrixBase<Derived>& a, const Tolerances& tol = {}) {
    using Scalar = typename Derived::Scalar;
    using Real = RealOf<Scalar>;
    const auto f = svd(a);
    const Real cutoff = f.singular_values.size() > 0
                            ? Real(tol.pinv_cutoff) * f.singular_values(0)
                            : Real(0);
    Vec<Real> inv = Vec<Real>::Zero(f.singular_values.size());
    for (Index i = 0; i < inv.size(); ++i)
        if (f.singular_values(i) > cutoff) inv(i) = Real(1) / f.singular_values(i);
    return f.V * inv.asDiagonal() * f.U.adjoint();
}

/// Eigenvalues of a small general square matrix (Hessenberg reduction and
/// shifted complex QR). Fails with NoConvergence once the total iteration
/// count exceeds `tol.small_eig_iterations_per_dim * dim`.
template <typename Derived>
Vec<std::complex<RealOf<typename Derived::Scalar>>> small_eig(const Eigen::MatrixBase<Derived>& a,
                                                              const Tolerances& tol = {}) {
    using Real = RealOf<typename Derived::Scalar>;
    using C = std::complex<Real>;
    Mat<C> m = a.template cast<C>();
    detail::require_square(m);
    require_finite(m, "small_eig input");
    if (m.rows() > tol.small_eig_max_dim)
        throw Error(ErrorKind::TooLarge, "small_eig is limited to dimension " +
                                             std::to_string(tol.small_eig_max_dim));
    Eigen::ComplexEigenSolver<Mat<C>> solver;
    solver.setMaxIterations(tol.small_eig_iterations_per_dim * m.rows());
    solver.compute(m, false);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorKind::NoConvergence, "complex QR iteration cap reached");
    return solver.eigenvalues();
}

}  // namespace qdoa
