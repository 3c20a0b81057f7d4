#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "afe/error.hpp"

namespace afe {

template<typename T>
struct is_complex : std::false_type {};
template<typename R>
struct is_complex<std::complex<R>> : std::true_type {};

template<typename T>
struct real_of {
    using type = T;
};
template<typename R>
struct real_of<std::complex<R>> {
    using type = R;
};
template<typename T>
using real_of_t = typename real_of<T>::type;

template<typename T>
[[nodiscard]] constexpr T conj_if_complex(const T& v) {
    if constexpr (is_complex<T>::value)
        return std::conj(v);
    else
        return v;
}

template<typename T>
[[nodiscard]] inline bool is_finite_scalar(const T& v) {
    if constexpr (is_complex<T>::value)
        return std::isfinite(v.real()) && std::isfinite(v.imag());
    else
        return std::isfinite(v);
}

/**
 * Dense row-major matrix with value semantics.
 *
 * Dimensions are fixed at construction and are always at least 1x1. The
 * constructors that take caller data reject NaN/Inf; element writes through
 * operator() are unchecked and are meant for the numerical kernels.
 */
template<typename T>
class BasicMatrix {
  public:
    using value_type = T;
    using real_type = real_of_t<T>;

    BasicMatrix() : BasicMatrix(1, 1) {}

    BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0)
            throw DimensionMismatch("matrix dimensions must be at least 1x1");
        if (!is_finite_scalar(fill))
            throw NonFiniteValue("matrix fill value is not finite");
    }

    BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> row_major)
        : rows_(rows), cols_(cols), data_(std::move(row_major)) {
        if (rows == 0 || cols == 0)
            throw DimensionMismatch("matrix dimensions must be at least 1x1");
        if (data_.size() != rows * cols)
            throw DimensionMismatch("matrix data size does not match dimensions");
        check_finite();
    }

    BasicMatrix(std::initializer_list<std::initializer_list<T>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        if (rows_ == 0 || cols_ == 0)
            throw DimensionMismatch("matrix dimensions must be at least 1x1");
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_)
                throw DimensionMismatch("ragged matrix initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
        check_finite();
    }

    [[nodiscard]] static BasicMatrix identity(std::size_t n) {
        BasicMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = T{1};
        return m;
    }

    [[nodiscard]] static BasicMatrix diagonal(std::span<const T> d) {
        BasicMatrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            m(i, i) = d[i];
        return m;
    }

    [[nodiscard]] static BasicMatrix column(std::span<const T> v) { return BasicMatrix(v.size(), 1, std::vector<T>(v.begin(), v.end())); }
    [[nodiscard]] static BasicMatrix row(std::span<const T> v) { return BasicMatrix(1, v.size(), std::vector<T>(v.begin(), v.end())); }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool is_square() const noexcept { return rows_ == cols_; }
    [[nodiscard]] std::span<const T> data() const noexcept { return data_; }

    [[nodiscard]] T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    [[nodiscard]] const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](const T& v) { return is_finite_scalar(v); });
    }

    [[nodiscard]] BasicMatrix transpose() const {
        BasicMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                t(j, i) = (*this)(i, j);
        return t;
    }

    /// Conjugate transpose; identical to transpose() for real matrices.
    [[nodiscard]] BasicMatrix adjoint() const {
        BasicMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                t(j, i) = conj_if_complex((*this)(i, j));
        return t;
    }

    [[nodiscard]] std::vector<T> col(std::size_t j) const {
        std::vector<T> v(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            v[i] = (*this)(i, j);
        return v;
    }

    [[nodiscard]] std::vector<T> row_vector(std::size_t i) const {
        return std::vector<T>(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                              data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
    }

    void set_col(std::size_t j, std::span<const T> v) {
        if (v.size() != rows_)
            throw DimensionMismatch("set_col: length mismatch");
        for (std::size_t i = 0; i < rows_; ++i)
            (*this)(i, j) = v[i];
    }

    [[nodiscard]] BasicMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_)
            throw DimensionMismatch("block out of range");
        BasicMatrix b(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j)
                b(i, j) = (*this)(r0 + i, c0 + j);
        return b;
    }

    void set_block(std::size_t r0, std::size_t c0, const BasicMatrix& b) {
        if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_)
            throw DimensionMismatch("set_block out of range");
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j)
                (*this)(r0 + i, c0 + j) = b(i, j);
    }

    [[nodiscard]] real_type frobenius_norm() const {
        real_type s{};
        for (const auto& v : data_)
            s += std::norm(v);
        return std::sqrt(s);
    }

    /// Maximum absolute row sum.
    [[nodiscard]] real_type inf_norm() const {
        real_type best{};
        for (std::size_t i = 0; i < rows_; ++i) {
            real_type s{};
            for (std::size_t j = 0; j < cols_; ++j)
                s += std::abs((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    [[nodiscard]] real_type max_abs() const {
        real_type best{};
        for (const auto& v : data_)
            best = std::max(best, static_cast<real_type>(std::abs(v)));
        return best;
    }

    [[nodiscard]] T trace() const {
        require_square("trace");
        T s{};
        for (std::size_t i = 0; i < rows_; ++i)
            s += (*this)(i, i);
        return s;
    }

    BasicMatrix& operator+=(const BasicMatrix& o) {
        require_same(o, "+=");
        for (std::size_t k = 0; k < data_.size(); ++k)
            data_[k] += o.data_[k];
        return *this;
    }
    BasicMatrix& operator-=(const BasicMatrix& o) {
        require_same(o, "-=");
        for (std::size_t k = 0; k < data_.size(); ++k)
            data_[k] -= o.data_[k];
        return *this;
    }
    BasicMatrix& operator*=(const T& s) {
        for (auto& v : data_)
            v *= s;
        return *this;
    }

    friend BasicMatrix operator+(BasicMatrix a, const BasicMatrix& b) { return a += b; }
    friend BasicMatrix operator-(BasicMatrix a, const BasicMatrix& b) { return a -= b; }
    friend BasicMatrix operator*(BasicMatrix a, const T& s) { return a *= s; }
    friend BasicMatrix operator*(const T& s, BasicMatrix a) { return a *= s; }
    friend BasicMatrix operator-(BasicMatrix a) { return a *= T{-1}; }

    friend BasicMatrix operator*(const BasicMatrix& a, const BasicMatrix& b) {
        if (a.cols_ != b.rows_)
            throw DimensionMismatch("matrix product: inner dimensions differ (" + std::to_string(a.cols_) + " vs " +
                                    std::to_string(b.rows_) + ")");
        BasicMatrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T aik = a(i, k);
                if (aik == T{})
                    continue;
                for (std::size_t j = 0; j < b.cols_; ++j)
                    c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend std::vector<T> operator*(const BasicMatrix& a, std::span<const T> x) {
        if (a.cols_ != x.size())
            throw DimensionMismatch("matrix-vector product: dimension mismatch");
        std::vector<T> y(a.rows_, T{});
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t j = 0; j < a.cols_; ++j)
                y[i] += a(i, j) * x[j];
        return y;
    }

    friend bool operator==(const BasicMatrix& a, const BasicMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    void check_finite() const {
        if (!all_finite())
            throw NonFiniteValue("matrix entries must be finite");
    }
    void require_same(const BasicMatrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw DimensionMismatch(std::string("matrix ") + op + ": shapes differ");
    }
    void require_square(const char* op) const {
        if (!is_square())
            throw DimensionMismatch(std::string(op) + ": matrix is not square");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using ComplexMatrix = BasicMatrix<std::complex<double>>;
using Eigenvalue = std::complex<double>;

[[nodiscard]] inline ComplexMatrix to_complex(const Matrix& m) {
    ComplexMatrix c(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            c(i, j) = m(i, j);
    return c;
}

[[nodiscard]] inline Matrix real_part(const ComplexMatrix& m) {
    Matrix r(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            r(i, j) = m(i, j).real();
    return r;
}

template<typename T>
[[nodiscard]] BasicMatrix<T> hstack(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
    if (a.rows() != b.rows())
        throw DimensionMismatch("hstack: row counts differ");
    BasicMatrix<T> out(a.rows(), a.cols() + b.cols());
    out.set_block(0, 0, a);
    out.set_block(0, a.cols(), b);
    return out;
}

template<typename T>
[[nodiscard]] BasicMatrix<T> vstack(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
    if (a.cols() != b.cols())
        throw DimensionMismatch("vstack: column counts differ");
    BasicMatrix<T> out(a.rows() + b.rows(), a.cols());
    out.set_block(0, 0, a);
    out.set_block(a.rows(), 0, b);
    return out;
}

/// Kronecker product, used to vectorize matrix equations.
template<typename T>
[[nodiscard]] BasicMatrix<T> kron(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
    BasicMatrix<T> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

template<typename T>
[[nodiscard]] real_of_t<T> vector_norm(std::span<const T> v) {
    real_of_t<T> s{};
    for (const auto& x : v)
        s += std::norm(x);
    return std::sqrt(s);
}

/// Hermitian inner product <a, b> = sum conj(a_i) b_i.
template<typename T>
[[nodiscard]] T inner(std::span<const T> a, std::span<const T> b) {
    T s{};
    for (std::size_t i = 0; i < a.size(); ++i)
        s += conj_if_complex(a[i]) * b[i];
    return s;
}

} // namespace afe
