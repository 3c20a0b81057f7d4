#pragma once

#include <cstddef>

#include "afe/model.hpp"
#include "afe/numerics/decompositions.hpp"
#include "afe/numerics/matrix.hpp"

namespace afe {

/// [B, AB, ..., A^{n-1}B]
[[nodiscard]] inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
    if (!a.is_square() || b.rows() != a.rows())
        throw DimensionMismatch("controllability_matrix: incompatible a, b");
    const std::size_t n = a.rows();
    Matrix out(n, n * b.cols());
    Matrix block = b;
    for (std::size_t k = 0; k < n; ++k) {
        out.set_block(0, k * b.cols(), block);
        block = a * block;
    }
    return out;
}

/// [C; CA; ...; CA^{n-1}]
[[nodiscard]] inline Matrix observability_matrix(const Matrix& a, const Matrix& c) {
    if (!a.is_square() || c.cols() != a.rows())
        throw DimensionMismatch("observability_matrix: incompatible a, c");
    const std::size_t n = a.rows();
    Matrix out(n * c.rows(), n);
    Matrix block = c;
    for (std::size_t k = 0; k < n; ++k) {
        out.set_block(k * c.rows(), 0, block);
        block = block * a;
    }
    return out;
}

[[nodiscard]] inline Matrix controllability_matrix(const LinearModel& m) { return controllability_matrix(m.a, m.b1); }
[[nodiscard]] inline Matrix observability_matrix(const LinearModel& m) { return observability_matrix(m.a, m.c); }

struct StructuralReport {
    Matrix ctrb_matrix;
    Matrix obsv_matrix;
    std::size_t ctrb_rank = 0;
    std::size_t obsv_rank = 0;
    bool controllable = false;
    bool observable = false;
};

[[nodiscard]] inline std::size_t controllability_rank(const Matrix& a, const Matrix& b, RankOptions opts = {}) {
    return numerical_rank(controllability_matrix(a, b), opts);
}

[[nodiscard]] inline std::size_t observability_rank(const Matrix& a, const Matrix& c, RankOptions opts = {}) {
    return numerical_rank(observability_matrix(a, c), opts);
}

[[nodiscard]] inline StructuralReport structural_report(const LinearModel& m, RankOptions opts = {}) {
    StructuralReport r;
    r.ctrb_matrix = controllability_matrix(m);
    r.obsv_matrix = observability_matrix(m);
    r.ctrb_rank = numerical_rank(r.ctrb_matrix, opts);
    r.obsv_rank = numerical_rank(r.obsv_matrix, opts);
    r.controllable = r.ctrb_rank == m.a.rows();
    r.observable = r.obsv_rank == m.a.rows();
    return r;
}

} // namespace afe
