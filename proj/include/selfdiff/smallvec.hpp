#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

// Small dense linear algebra for low-dimensional state vectors and
// Hessian inspection. Dimensions here are tiny (d <= 8 in practice),
// so plain O(d^3) routines are fine.

namespace selfdiff {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Vec sub(std::span<const double> a, std::span<const double> b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Row-major square matrix.
struct SquareMat {
    int n = 0;
    std::vector<double> a;  // n*n

    explicit SquareMat(int n_ = 0) : n(n_), a(static_cast<std::size_t>(n_) * n_, 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// Throws on (numerically) singular A.
inline Vec solve_linear(SquareMat A, Vec b) {
    const int n = A.n;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(A(r, col)) > std::fabs(A(piv, col))) piv = r;
        if (std::fabs(A(piv, col)) < 1e-14)
            throw std::runtime_error("solve_linear: singular matrix");
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(A(piv, c), A(col, c));
            std::swap(b[piv], b[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = A(r, col) / A(col, col);
            for (int c = col; c < n; ++c) A(r, c) -= f * A(col, c);
            b[r] -= f * b[col];
        }
    }
    Vec x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= A(r, c) * x[c];
        x[r] = s / A(r, r);
    }
    return x;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline Vec symmetric_eigenvalues(SquareMat A) {
    const int n = A.n;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(A(p, q)) < 1e-30) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    Vec ev(n);
    for (int i = 0; i < n; ++i) ev[i] = A(i, i);
    return ev;
}

}  // namespace selfdiff
