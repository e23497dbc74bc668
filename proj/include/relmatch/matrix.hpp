#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace relmatch {

/// Dense row-major matrix of doubles. Column vectors are n x 1 matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols);  // zero-filled
    Matrix(int rows, int cols, std::vector<double> data);

    static Matrix identity(int n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix column(std::span<const double> v);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;
    void fill(double v);
    std::string shape_str() const;  // e.g. "3x4"

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

bool operator==(const Matrix& a, const Matrix& b);  // exact, bitwise on entries

// Kernels. All shape mismatches throw DimensionError naming both shapes.
Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix col_sum(const Matrix& a);   // r x c -> r x 1
Matrix col_mean(const Matrix& a);  // r x c -> r x 1

/// exp(v[i]/tau) normalized to sum 1, computed with max-subtraction. tau must be > 0.
std::vector<double> softmax(std::span<const double> v, double tau);

/// Column-wise softmax with temperature.
Matrix softmax_cols(const Matrix& a, double tau);

/// u.v/(|u||v|), clamped to [-1,1]. Either norm <= 1e-12 gives 0; both give 1.
double cosine(std::span<const double> u, std::span<const double> v);

/// Splits each column of t and v into k contiguous channel blocks and returns the
/// k x N matrix of per-block cosines. Requires t.rows() % k == 0.
Matrix block_cosine_cols(const Matrix& t, const Matrix& v, int k);

/// Soft cross entropy over columns: -sum_q sum_p T[p][q] * log softmax_col(X/tau)[p][q].
/// If grad_out is non-null it receives d/dX = (P .* colsum(T) - T) / tau.
double soft_ce_cols(const Matrix& logits, const Matrix& targets, double tau,
                    Matrix* grad_out = nullptr);

double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace relmatch
