#include "relmatch/tape.hpp"

#include <cmath>
#include <utility>

#include "relmatch/errors.hpp"

namespace relmatch {

namespace {
constexpr double kNormFloor = 1e-12;
}

int Tape::push(Matrix value, bool needs_grad, std::function<void(Tape&)> vjp) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = grad_enabled_ && needs_grad;
    if (n.needs_grad) {
        n.grad = Matrix(n.value.rows(), n.value.cols());
        n.vjp = std::move(vjp);
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Value Tape::wrap(int id) const {
    const Matrix& m = nodes_[id].value;
    return Value{this, id, m.rows(), m.cols()};
}

void Tape::check(Value v, const char* who) const {
    if (v.owner != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
        throw UsageError(std::string(who) + ": value does not belong to this tape");
    }
}

Matrix& Tape::grad_ref(int id) { return nodes_[id].grad; }

void Tape::accumulate(int id, const Matrix& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    for (std::size_t i = 0; i < g.size(); ++i) n.grad.data()[i] += g.data()[i];
    n.touched = true;
}

Value Tape::constant(Matrix m) { return wrap(push(std::move(m), false, {})); }

Value Tape::param(Param& p) {
    auto it = param_leaves_.find(&p);
    if (it != param_leaves_.end()) return wrap(it->second);
    const int id = push(p.value, true, {});  // leaf: backward() flushes into p.grad
    nodes_[id].bound = &p;
    param_leaves_.emplace(&p, id);
    return wrap(id);
}

Value Tape::matmul(Value a, Value b) {
    check(a, "matmul");
    check(b, "matmul");
    Matrix c = relmatch::matmul(nodes_[a.id].value, nodes_[b.id].value);
    const bool ng = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    const int ia = a.id, ib = b.id;
    const int id = push(std::move(c), ng, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, ia, ib](Tape& t) {
            const Matrix& g = t.nodes_[id].grad;
            if (t.nodes_[ia].needs_grad) {
                t.accumulate(ia, matmul_nt(g, t.nodes_[ib].value));
            }
            if (t.nodes_[ib].needs_grad) {
                t.accumulate(ib, relmatch::matmul_tn(t.nodes_[ia].value, g));
            }
        };
    }
    return wrap(id);
}

Value Tape::matmul_tn(Value a, Value b) {
    check(a, "matmul_tn");
    check(b, "matmul_tn");
    Matrix c = relmatch::matmul_tn(nodes_[a.id].value, nodes_[b.id].value);
    const bool ng = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    const int ia = a.id, ib = b.id;
    const int id = push(std::move(c), ng, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, ia, ib](Tape& t) {
            // c = a^T b: da = b g^T, db = a g
            const Matrix& g = t.nodes_[id].grad;
            if (t.nodes_[ia].needs_grad) {
                t.accumulate(ia, matmul_nt(t.nodes_[ib].value, g));
            }
            if (t.nodes_[ib].needs_grad) {
                t.accumulate(ib, relmatch::matmul(t.nodes_[ia].value, g));
            }
        };
    }
    return wrap(id);
}

Value Tape::transpose(Value a) {
    check(a, "transpose");
    Matrix c = relmatch::transpose(nodes_[a.id].value);
    const int ia = a.id;
    const int id = push(std::move(c), nodes_[ia].needs_grad, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, ia](Tape& t) {
            t.accumulate(ia, relmatch::transpose(t.nodes_[id].grad));
        };
    }
    return wrap(id);
}

Value Tape::add(Value a, Value b) {
    check(a, "add");
    check(b, "add");
    Matrix c = relmatch::add(nodes_[a.id].value, nodes_[b.id].value);
    const bool ng = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    const int ia = a.id, ib = b.id;
    const int id = push(std::move(c), ng, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, ia, ib](Tape& t) {
            const Matrix& g = t.nodes_[id].grad;
            t.accumulate(ia, g);
            t.accumulate(ib, g);
        };
    }
    return wrap(id);
}

Value Tape::scale(Value a, double s) {
    check(a, "scale");
    Matrix c = relmatch::scale(nodes_[a.id].value, s);
    const int ia = a.id;
    const int id = push(std::move(c), nodes_[ia].needs_grad, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, ia, s](Tape& t) {
            t.accumulate(ia, relmatch::scale(t.nodes_[id].grad, s));
        };
    }
    return wrap(id);
}

Value Tape::col_sum(Value a) {
    check(a, "col_sum");
    Matrix c = relmatch::col_sum(nodes_[a.id].value);
    const int ia = a.id;
    const int id = push(std::move(c), nodes_[ia].needs_grad, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, ia](Tape& t) {
            const Matrix& g = t.nodes_[id].grad;  // r x 1
            const Matrix& av = t.nodes_[ia].value;
            Matrix ga(av.rows(), av.cols());
            for (int i = 0; i < av.rows(); ++i) {
                for (int j = 0; j < av.cols(); ++j) ga(i, j) = g(i, 0);
            }
            t.accumulate(ia, ga);
        };
    }
    return wrap(id);
}

Value Tape::col_mean(Value a) {
    Value s = col_sum(a);
    return scale(s, 1.0 / nodes_[a.id].value.cols());
}

Value Tape::sum_all(Value a) {
    check(a, "sum_all");
    const Matrix& av = nodes_[a.id].value;
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av.data()[i];
    Matrix c(1, 1);
    c(0, 0) = s;
    const int ia = a.id;
    const int id = push(std::move(c), nodes_[ia].needs_grad, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, ia](Tape& t) {
            const double g = t.nodes_[id].grad(0, 0);
            const Matrix& av2 = t.nodes_[ia].value;
            Matrix ga(av2.rows(), av2.cols());
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] = g;
            t.accumulate(ia, ga);
        };
    }
    return wrap(id);
}

Value Tape::softmax_cols(Value a, double tau) {
    check(a, "softmax_cols");
    Matrix y = relmatch::softmax_cols(nodes_[a.id].value, tau);
    const int ia = a.id;
    const int id = push(std::move(y), nodes_[ia].needs_grad, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, ia, tau](Tape& t) {
            // dx[:,j] = (y .* (g - <g, y>)) / tau per column
            const Matrix& g = t.nodes_[id].grad;
            const Matrix& y2 = t.nodes_[id].value;
            Matrix ga(y2.rows(), y2.cols());
            for (int j = 0; j < y2.cols(); ++j) {
                double dot = 0.0;
                for (int i = 0; i < y2.rows(); ++i) dot += g(i, j) * y2(i, j);
                for (int i = 0; i < y2.rows(); ++i) {
                    ga(i, j) = y2(i, j) * (g(i, j) - dot) / tau;
                }
            }
            t.accumulate(ia, ga);
        };
    }
    return wrap(id);
}

Value Tape::block_cosine_cols(Value tv, Value vv, int k) {
    check(tv, "block_cosine_cols");
    check(vv, "block_cosine_cols");
    Matrix out = relmatch::block_cosine_cols(nodes_[tv.id].value, nodes_[vv.id].value, k);
    const bool ng = nodes_[tv.id].needs_grad || nodes_[vv.id].needs_grad;
    const int it = tv.id, iv = vv.id;
    const int id = push(std::move(out), ng, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, it, iv, k](Tape& t) {
            const Matrix& g = t.nodes_[id].grad;  // k x N
            const Matrix& tm = t.nodes_[it].value;
            const Matrix& vm = t.nodes_[iv].value;
            const int block = tm.rows() / k;
            Matrix gt(tm.rows(), tm.cols());
            Matrix gv(vm.rows(), vm.cols());
            for (int j = 0; j < tm.cols(); ++j) {
                for (int s = 0; s < k; ++s) {
                    const double gs = g(s, j);
                    if (gs == 0.0) continue;
                    double uu = 0.0, ww = 0.0, uw = 0.0;
                    for (int r = s * block; r < (s + 1) * block; ++r) {
                        uu += tm(r, j) * tm(r, j);
                        ww += vm(r, j) * vm(r, j);
                        uw += tm(r, j) * vm(r, j);
                    }
                    const double nu = std::sqrt(uu), nw = std::sqrt(ww);
                    if (nu <= kNormFloor || nw <= kNormFloor) continue;  // flat by definition
                    const double c = uw / (nu * nw);
                    const double inv = 1.0 / (nu * nw);
                    for (int r = s * block; r < (s + 1) * block; ++r) {
                        gt(r, j) += gs * (vm(r, j) * inv - c * tm(r, j) / uu);
                        gv(r, j) += gs * (tm(r, j) * inv - c * vm(r, j) / ww);
                    }
                }
            }
            t.accumulate(it, gt);
            t.accumulate(iv, gv);
        };
    }
    return wrap(id);
}

Value Tape::soft_ce_cols(Value logits, Matrix targets, double tau) {
    check(logits, "soft_ce_cols");
    Matrix grad_buf;
    const bool ng = nodes_[logits.id].needs_grad;
    const double ce =
        relmatch::soft_ce_cols(nodes_[logits.id].value, targets, tau, ng ? &grad_buf : nullptr);
    Matrix c(1, 1);
    c(0, 0) = ce;
    const int il = logits.id;
    const int id = push(std::move(c), ng, {});
    if (nodes_[id].needs_grad) {
        auto shared = std::make_shared<Matrix>(std::move(grad_buf));
        nodes_[id].vjp = [id, il, shared](Tape& t) {
            const double g = t.nodes_[id].grad(0, 0);
            t.accumulate(il, relmatch::scale(*shared, g));
        };
    }
    return wrap(id);
}

Value Tape::stack_scalars(const std::vector<std::vector<Value>>& grid) {
    const int r = static_cast<int>(grid.size());
    const int c = r > 0 ? static_cast<int>(grid[0].size()) : 0;
    if (r == 0 || c == 0) throw DimensionError("stack_scalars: empty grid");
    Matrix m(r, c);
    bool ng = false;
    std::vector<int> ids(static_cast<std::size_t>(r) * c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(grid[i].size()) != c) {
            throw DimensionError("stack_scalars: ragged grid");
        }
        for (int j = 0; j < c; ++j) {
            Value v = grid[i][j];
            check(v, "stack_scalars");
            if (v.rows != 1 || v.cols != 1) {
                throw DimensionError("stack_scalars: entries must be 1x1");
            }
            m(i, j) = nodes_[v.id].value(0, 0);
            ids[static_cast<std::size_t>(i) * c + j] = v.id;
            ng = ng || nodes_[v.id].needs_grad;
        }
    }
    const int id = push(std::move(m), ng, {});
    if (nodes_[id].needs_grad) {
        nodes_[id].vjp = [id, ids, c](Tape& t) {
            const Matrix& g = t.nodes_[id].grad;
            Matrix one(1, 1);
            for (int i = 0; i < g.rows(); ++i) {
                for (int j = 0; j < g.cols(); ++j) {
                    one(0, 0) = g(i, j);
                    t.accumulate(ids[static_cast<std::size_t>(i) * c + j], one);
                }
            }
        };
    }
    return wrap(id);
}

const Matrix& Tape::value(Value v) const {
    check(v, "value");
    return nodes_[v.id].value;
}

const Matrix& Tape::grad(Value v) const {
    check(v, "grad");
    return nodes_[v.id].grad;
}

double Tape::scalar(Value v) const {
    check(v, "scalar");
    const Matrix& m = nodes_[v.id].value;
    if (m.rows() != 1 || m.cols() != 1) {
        throw UsageError("scalar: node is " + m.shape_str() + ", expected 1x1");
    }
    return m(0, 0);
}

void Tape::backward(Value seed) {
    check(seed, "backward");
    if (!grad_enabled_) throw UsageError("backward: tape recorded with gradients disabled");
    const Node& s = nodes_[seed.id];
    if (s.value.rows() != 1 || s.value.cols() != 1) {
        throw UsageError("backward: seed must be a 1x1 scalar, got " + s.value.shape_str());
    }
    if (!s.needs_grad) {
        // Seed does not depend on any Param; all gradients stay zero.
        return;
    }
    nodes_[seed.id].grad(0, 0) += 1.0;
    nodes_[seed.id].touched = true;
    for (int i = seed.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.needs_grad || !n.touched) continue;
        if (n.bound) {
            Matrix& pg = n.bound->grad;
            for (std::size_t j = 0; j < pg.size(); ++j) pg.data()[j] += n.grad.data()[j];
        } else if (n.vjp) {
            n.vjp(*this);
        }
    }
}

}  // namespace relmatch
