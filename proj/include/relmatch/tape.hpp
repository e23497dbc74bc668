#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "relmatch/matrix.hpp"

namespace relmatch {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid for the tape's lifetime.
struct Value {
    const Tape* owner = nullptr;
    int id = -1;
    int rows = 0;
    int cols = 0;
};

/// A trainable tensor with its gradient accumulator.
struct Param {
    std::string name;
    Matrix value;
    Matrix grad;

    Param(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {
        grad = Matrix(value.rows(), value.cols());
    }
    void reset_grad() { grad.fill(0.0); }
};

/// Records forward primitives in execution order and replays their vector-Jacobian
/// products in exact reverse order. A value consumed twice accumulates the sum of
/// both gradient contributions. Single-threaded; one tape per pipeline instance.
class Tape {
public:
    Tape() = default;
    explicit Tape(bool grad_enabled) : grad_enabled_(grad_enabled) {}

    bool grad_enabled() const { return grad_enabled_; }

    Value constant(Matrix m);  // input that never receives gradients
    Value param(Param& p);     // leaf; backward() adds into p.grad (cached per tape)

    Value matmul(Value a, Value b);     // a * b
    Value matmul_tn(Value a, Value b);  // a^T * b
    Value transpose(Value a);
    Value add(Value a, Value b);
    Value scale(Value a, double s);
    Value col_sum(Value a);
    Value col_mean(Value a);
    Value sum_all(Value a);  // 1x1
    Value softmax_cols(Value a, double tau);
    Value block_cosine_cols(Value t, Value v, int k);
    /// Targets are constant. Returns 1x1 cross entropy over columns of softmax(x/tau).
    Value soft_ce_cols(Value logits, Matrix targets, double tau);
    /// grid[r][c] must be 1x1 nodes; returns the assembled rows x cols matrix.
    Value stack_scalars(const std::vector<std::vector<Value>>& grid);

    const Matrix& value(Value v) const;
    const Matrix& grad(Value v) const;
    double scalar(Value v) const;

    /// Seeds d(seed)/d(seed) = 1 and propagates to every recorded input, writing
    /// Param gradients additively. seed must be a 1x1 node of this tape.
    void backward(Value seed);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&)> vjp;
        Param* bound = nullptr;
        bool needs_grad = false;
        bool touched = false;
    };

    int push(Matrix value, bool needs_grad, std::function<void(Tape&)> vjp);
    Value wrap(int id) const;
    void check(Value v, const char* who) const;
    Matrix& grad_ref(int id);
    void accumulate(int id, const Matrix& g);

    std::vector<Node> nodes_;
    std::unordered_map<const Param*, int> param_leaves_;
    bool grad_enabled_ = true;
};

}  // namespace relmatch
