#pragma once

#include <cstddef>
#include <vector>

#include "afe/error.hpp"
#include "afe/numerics/decompositions.hpp"
#include "afe/numerics/matrix.hpp"

namespace afe {

/**
 * Solve the continuous Lyapunov equation a^T P + P a = -q.
 *
 * Uses the column-major vectorization vec(a^T P + P a) = (I (x) a^T + a^T (x) I) vec(P),
 * an n^2 x n^2 dense system solved by lu_solve. Throws SingularMatrix when two
 * eigenvalues of a sum to zero. The result is symmetrized.
 */
[[nodiscard]] inline Matrix lyap_solve(const Matrix& a, const Matrix& q) {
    if (!a.is_square() || !q.is_square() || a.rows() != q.rows())
        throw DimensionMismatch("lyap_solve: a and q must be square and of equal size");
    const std::size_t n = a.rows();
    const Matrix at = a.transpose();
    const Matrix eye = Matrix::identity(n);
    const Matrix kron_sum = kron(eye, at) + kron(at, eye);

    Matrix rhs(n * n, 1);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            rhs(i + j * n, 0) = -q(i, j);

    Matrix vec_p(1, 1);
    try {
        vec_p = lu_solve(kron_sum, rhs);
    } catch (const SingularMatrix&) {
        throw SingularMatrix("lyap_solve: a has eigenvalues symmetric about the imaginary axis; no unique solution");
    }

    Matrix p(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            p(i, j) = vec_p(i + j * n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            p(i, j) = p(j, i) = 0.5 * (p(i, j) + p(j, i));
    return p;
}

/// Frobenius residual ||a^T P + P a + q||_F.
[[nodiscard]] inline double lyap_residual(const Matrix& a, const Matrix& p, const Matrix& q) {
    return (a.transpose() * p + p * a + q).frobenius_norm();
}

} // namespace afe
