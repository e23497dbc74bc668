#include "relmatch/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relmatch/errors.hpp"

namespace relmatch {

namespace {

constexpr double kNormFloor = 1e-12;

void check_positive_tau(double tau, const char* who) {
    if (!(tau > 0.0)) {
        throw ParameterError(std::string(who) + ": temperature must be > 0, got " +
                             std::to_string(tau));
    }
}

}  // namespace

Matrix::Matrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw DimensionError("Matrix: negative dimension");
}

Matrix::Matrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(rows) * cols) {
        throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str());
    }
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) {
            throw DimensionError("Matrix::from_rows: ragged rows");
        }
        int j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix Matrix::column(std::span<const double> v) {
    Matrix m(static_cast<int>(v.size()), 1);
    std::copy(v.begin(), v.end(), m.data());
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool operator==(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.data()[i] != b.data()[i]) return false;
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree: (" + a.shape_str() + ") * (" +
                             b.shape_str() + ")");
    }
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            for (int j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: leading dimensions disagree: (" + a.shape_str() +
                             ")^T * (" + b.shape_str() + ")");
    }
    Matrix c(a.cols(), b.cols());
    for (int k = 0; k < a.rows(); ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (int i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.row(i);
            for (int j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: trailing dimensions disagree: (" + a.shape_str() +
                             ") * (" + b.shape_str() + ")^T");
    }
    Matrix c(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int j = 0; j < b.rows(); ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
            crow[j] = s;
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    }
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("add: shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    }
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("sub: shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    }
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
    return c;
}

Matrix col_sum(const Matrix& a) {
    Matrix c(a.rows(), 1);
    for (int i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += arow[j];
        c(i, 0) = s;
    }
    return c;
}

Matrix col_mean(const Matrix& a) {
    if (a.cols() == 0) throw DimensionError("col_mean: empty matrix");
    return scale(col_sum(a), 1.0 / a.cols());
}

std::vector<double> softmax(std::span<const double> v, double tau) {
    check_positive_tau(tau, "softmax");
    std::vector<double> out(v.size());
    if (v.empty()) return out;
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp((v[i] - m) / tau);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

Matrix softmax_cols(const Matrix& a, double tau) {
    check_positive_tau(tau, "softmax_cols");
    Matrix out(a.rows(), a.cols());
    for (int j = 0; j < a.cols(); ++j) {
        double m = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < a.rows(); ++i) m = std::max(m, a(i, j));
        double z = 0.0;
        for (int i = 0; i < a.rows(); ++i) {
            out(i, j) = std::exp((a(i, j) - m) / tau);
            z += out(i, j);
        }
        for (int i = 0; i < a.rows(); ++i) out(i, j) /= z;
    }
    return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DimensionError("cosine: length mismatch: " + std::to_string(u.size()) + " vs " +
                             std::to_string(v.size()));
    }
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
        uv += u[i] * v[i];
    }
    const double nu = std::sqrt(uu), nv = std::sqrt(vv);
    if (nu <= kNormFloor && nv <= kNormFloor) return 1.0;
    if (nu <= kNormFloor || nv <= kNormFloor) return 0.0;
    return std::clamp(uv / (nu * nv), -1.0, 1.0);
}

Matrix block_cosine_cols(const Matrix& t, const Matrix& v, int k) {
    if (!t.same_shape(v)) {
        throw DimensionError("block_cosine_cols: shape mismatch: " + t.shape_str() + " vs " +
                             v.shape_str());
    }
    if (k < 1 || t.rows() % k != 0) {
        throw ConfigError("block_cosine_cols: rows " + std::to_string(t.rows()) +
                          " not divisible by k=" + std::to_string(k));
    }
    const int block = t.rows() / k;
    Matrix out(k, t.cols());
    for (int j = 0; j < t.cols(); ++j) {
        for (int s = 0; s < k; ++s) {
            double uu = 0.0, vv = 0.0, uv = 0.0;
            for (int r = s * block; r < (s + 1) * block; ++r) {
                uu += t(r, j) * t(r, j);
                vv += v(r, j) * v(r, j);
                uv += t(r, j) * v(r, j);
            }
            const double nu = std::sqrt(uu), nv = std::sqrt(vv);
            double c;
            if (nu <= kNormFloor && nv <= kNormFloor) {
                c = 1.0;
            } else if (nu <= kNormFloor || nv <= kNormFloor) {
                c = 0.0;
            } else {
                c = std::clamp(uv / (nu * nv), -1.0, 1.0);
            }
            out(s, j) = c;
        }
    }
    return out;
}

double soft_ce_cols(const Matrix& logits, const Matrix& targets, double tau, Matrix* grad_out) {
    check_positive_tau(tau, "soft_ce_cols");
    if (!logits.same_shape(targets)) {
        throw DimensionError("soft_ce_cols: shape mismatch: " + logits.shape_str() + " vs " +
                             targets.shape_str());
    }
    double total = 0.0;
    if (grad_out) *grad_out = Matrix(logits.rows(), logits.cols());
    std::vector<double> logp(static_cast<std::size_t>(logits.rows()));
    for (int j = 0; j < logits.cols(); ++j) {
        double m = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < logits.rows(); ++i) m = std::max(m, logits(i, j) / tau);
        double z = 0.0;
        for (int i = 0; i < logits.rows(); ++i) z += std::exp(logits(i, j) / tau - m);
        const double lse = m + std::log(z);
        double tcol = 0.0;
        for (int i = 0; i < logits.rows(); ++i) {
            logp[i] = logits(i, j) / tau - lse;
            total -= targets(i, j) * logp[i];
            tcol += targets(i, j);
        }
        if (grad_out) {
            for (int i = 0; i < logits.rows(); ++i) {
                (*grad_out)(i, j) = (std::exp(logp[i]) * tcol - targets(i, j)) / tau;
            }
        }
    }
    return total;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("max_abs_diff: shape mismatch: " + a.shape_str() + " vs " +
                             b.shape_str());
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    }
    return m;
}

}  // namespace relmatch
