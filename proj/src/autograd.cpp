#include "ccgs/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "ccgs/error.hpp"
#include "ccgs/rng.hpp"

namespace ccgs {

namespace {

Tape* check_same_tape(Var a, Var b, const char* op) {
    if (a.tape == nullptr || a.tape != b.tape) {
        throw ShapeError(std::string(op) + ": operands live on different tapes");
    }
    return a.tape;
}

const Tensor& val(Var v) { return v.tape->value(v); }

} // namespace

Var Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> backprop) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.backprop = std::move(backprop);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

void Tape::set_backprop(std::size_t id, std::function<void(Tape&)> backprop) {
    nodes_[id].backprop = std::move(backprop);
}

Tensor& Tape::grad_ref(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

const Tensor& Tape::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.empty()) {
        throw ValidationError("grad: no gradient recorded for node " + std::to_string(v.id) +
                              " (backward not run or node unreachable)");
    }
    return n.grad;
}

void Tape::backward(Var loss, bool accumulate) {
    if (loss.tape != this) throw ValidationError("backward: loss is not on this tape");
    if (!value(loss).is_scalar()) {
        throw ShapeError("backward: loss must be 1x1, got " + value(loss).shape_str());
    }
    if (backward_done_ && !accumulate) {
        throw ValidationError("backward: called twice without accumulate flag");
    }
    backward_done_ = true;

    grad_ref(loss.id)[0] += 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backprop && !n.grad.empty()) n.backprop(*this);
    }
}

Var matmul(Var a, Var b) {
    Tape* tape = check_same_tape(a, b, "matmul");
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.is_matrix() || !B.is_matrix() || A.cols() != B.rows()) {
        throw ShapeError("matmul: incompatible shapes " + A.shape_str() + " and " + B.shape_str());
    }
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A.at(i, p);
            for (std::size_t j = 0; j < n; ++j) out.at(i, j) += aip * B.at(p, j);
        }
    }
    const bool rg = tape->requires_grad(a) || tape->requires_grad(b);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, bid = b.id, oid = o.id, m, k, n](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            const Tensor& A2 = t.value_at(aid);
            const Tensor& B2 = t.value_at(bid);
            if (t.node_requires_grad(aid)) {
                Tensor& ga = t.grad_ref(aid);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const double gij = g.at(i, j);
                        for (std::size_t p = 0; p < k; ++p) ga.at(i, p) += gij * B2.at(p, j);
                    }
            }
            if (t.node_requires_grad(bid)) {
                Tensor& gb = t.grad_ref(bid);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double aip = A2.at(i, p);
                        for (std::size_t j = 0; j < n; ++j) gb.at(p, j) += aip * g.at(i, j);
                    }
            }
        });
    }
    return o;
}

Var transpose(Var a) {
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    const std::size_t m = A.rows(), n = A.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = A.at(i, j);
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id, m, n](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            Tensor& ga = t.grad_ref(aid);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
        });
    }
    return o;
}

Var add(Var a, Var b) {
    Tape* tape = check_same_tape(a, b, "add");
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) {
        throw ShapeError("add: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
    }
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) out[i] = A[i] + B[i];
    const bool rg = tape->requires_grad(a) || tape->requires_grad(b);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, bid = b.id, oid = o.id](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            if (t.node_requires_grad(aid)) {
                Tensor& ga = t.grad_ref(aid);
                for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
            }
            if (t.node_requires_grad(bid)) {
                Tensor& gb = t.grad_ref(bid);
                for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i];
            }
        });
    }
    return o;
}

Var add_row_broadcast(Var matrix, Var row) {
    Tape* tape = check_same_tape(matrix, row, "add_row_broadcast");
    const Tensor& M = val(matrix);
    const Tensor& R = val(row);
    if (R.rows() != 1 || R.cols() != M.cols()) {
        throw ShapeError("add_row_broadcast: matrix " + M.shape_str() + " vs row " + R.shape_str());
    }
    const std::size_t m = M.rows(), n = M.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = M.at(i, j) + R.at(0, j);
    const bool rg = tape->requires_grad(matrix) || tape->requires_grad(row);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [mid = matrix.id, rid = row.id, oid = o.id, m, n](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            if (t.node_requires_grad(mid)) {
                Tensor& gm = t.grad_ref(mid);
                for (std::size_t i = 0; i < g.numel(); ++i) gm[i] += g[i];
            }
            if (t.node_requires_grad(rid)) {
                Tensor& gr = t.grad_ref(rid);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gr.at(0, j) += g.at(i, j);
            }
        });
    }
    return o;
}

Var broadcast_rows(Var row, std::size_t m) {
    Tape* tape = row.tape;
    const Tensor& R = val(row);
    if (R.rows() != 1) throw ShapeError("broadcast_rows: expected 1xN row, got " + R.shape_str());
    if (m == 0) throw ShapeError("broadcast_rows: zero target rows");
    const std::size_t n = R.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = R.at(0, j);
    const bool rg = tape->requires_grad(row);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [rid = row.id, oid = o.id, m, n](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            Tensor& gr = t.grad_ref(rid);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) gr.at(0, j) += g.at(i, j);
        });
    }
    return o;
}

Var elementwise_mul(Var a, Var b) {
    Tape* tape = check_same_tape(a, b, "elementwise_mul");
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) {
        throw ShapeError("elementwise_mul: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
    }
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) out[i] = A[i] * B[i];
    const bool rg = tape->requires_grad(a) || tape->requires_grad(b);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, bid = b.id, oid = o.id](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            const Tensor& A2 = t.value_at(aid);
            const Tensor& B2 = t.value_at(bid);
            if (t.node_requires_grad(aid)) {
                Tensor& ga = t.grad_ref(aid);
                for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * B2[i];
            }
            if (t.node_requires_grad(bid)) {
                Tensor& gb = t.grad_ref(bid);
                for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * A2[i];
            }
        });
    }
    return o;
}

Var concat(const std::vector<Var>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no parts");
    if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
    Tape* tape = parts.front().tape;
    bool rg = false;
    std::size_t rows0 = val(parts.front()).rows();
    std::size_t cols0 = val(parts.front()).cols();
    std::size_t total = 0;
    for (Var p : parts) {
        check_same_tape(parts.front(), p, "concat");
        const Tensor& P = val(p);
        if (axis == 0) {
            if (P.cols() != cols0)
                throw ShapeError("concat axis 0: column mismatch " + P.shape_str() + " vs " +
                                 val(parts.front()).shape_str());
            total += P.rows();
        } else {
            if (P.rows() != rows0)
                throw ShapeError("concat axis 1: row mismatch " + P.shape_str() + " vs " +
                                 val(parts.front()).shape_str());
            total += P.cols();
        }
        rg = rg || tape->requires_grad(p);
    }
    Tensor out(axis == 0 ? Tensor({total, cols0}) : Tensor({rows0, total}));
    std::size_t offset = 0;
    for (Var p : parts) {
        const Tensor& P = val(p);
        if (axis == 0) {
            for (std::size_t i = 0; i < P.rows(); ++i)
                for (std::size_t j = 0; j < P.cols(); ++j) out.at(offset + i, j) = P.at(i, j);
            offset += P.rows();
        } else {
            for (std::size_t i = 0; i < P.rows(); ++i)
                for (std::size_t j = 0; j < P.cols(); ++j) out.at(i, offset + j) = P.at(i, j);
            offset += P.cols();
        }
    }
    std::vector<std::size_t> ids;
    ids.reserve(parts.size());
    for (Var p : parts) ids.push_back(p.id);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [ids, oid = o.id, axis](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            std::size_t offset2 = 0;
            for (std::size_t pid : ids) {
                const Tensor& P = t.value_at(pid);
                if (t.node_requires_grad(pid)) {
                    Tensor& gp = t.grad_ref(pid);
                    for (std::size_t i = 0; i < P.rows(); ++i)
                        for (std::size_t j = 0; j < P.cols(); ++j) {
                            gp.at(i, j) += (axis == 0) ? g.at(offset2 + i, j) : g.at(i, offset2 + j);
                        }
                }
                offset2 += (axis == 0) ? P.rows() : P.cols();
            }
        });
    }
    return o;
}

Var slice(Var a, std::size_t row_begin, std::size_t row_end, std::size_t col_begin, std::size_t col_end) {
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    if (row_begin >= row_end || col_begin >= col_end || row_end > A.rows() || col_end > A.cols()) {
        throw ShapeError("slice: invalid range [" + std::to_string(row_begin) + "," + std::to_string(row_end) +
                         ")x[" + std::to_string(col_begin) + "," + std::to_string(col_end) + ") of " +
                         A.shape_str());
    }
    const std::size_t m = row_end - row_begin, n = col_end - col_begin;
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = A.at(row_begin + i, col_begin + j);
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id, row_begin, col_begin, m, n](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            Tensor& ga = t.grad_ref(aid);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga.at(row_begin + i, col_begin + j) += g.at(i, j);
        });
    }
    return o;
}

Var masked_fill(Var a, const std::vector<std::uint8_t>& mask, double fill_value) {
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    if (mask.size() != A.numel()) {
        throw ShapeError("masked_fill: mask length " + std::to_string(mask.size()) +
                         " vs tensor " + A.shape_str());
    }
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) out[i] = mask[i] ? fill_value : A[i];
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id, mask](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            Tensor& ga = t.grad_ref(aid);
            for (std::size_t i = 0; i < g.numel(); ++i) {
                if (!mask[i]) ga[i] += g[i];
            }
        });
    }
    return o;
}

Var relu(Var a) {
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) out[i] = A[i] > 0.0 ? A[i] : 0.0;
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            const Tensor& A2 = t.value_at(aid);
            Tensor& ga = t.grad_ref(aid);
            for (std::size_t i = 0; i < g.numel(); ++i) {
                if (A2[i] > 0.0) ga[i] += g[i];
            }
        });
    }
    return o;
}

Var dropout(Var a, double p, bool train, std::uint64_t seed) {
    if (p < 0.0 || p >= 1.0) {
        throw ValidationError("dropout: p must be in [0, 1), got " + std::to_string(p));
    }
    if (!train || p == 0.0) return a;
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    const double scale = 1.0 / (1.0 - p);
    std::vector<double> mask(A.numel());
    Rng rng(seed);
    for (double& m : mask) m = rng.next_unit() < p ? 0.0 : scale;
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) out[i] = A[i] * mask[i];
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id, mask = std::move(mask)](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            Tensor& ga = t.grad_ref(aid);
            for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * mask[i];
        });
    }
    return o;
}

Var softmax(Var a, int axis) {
    if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    const std::size_t m = A.rows(), n = A.cols();
    Tensor out({m, n});
    if (axis == 1) {
        for (std::size_t i = 0; i < m; ++i) {
            double mx = A.at(i, 0);
            for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, A.at(i, j));
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                out.at(i, j) = std::exp(A.at(i, j) - mx);
                sum += out.at(i, j);
            }
            for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= sum;
        }
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            double mx = A.at(0, j);
            for (std::size_t i = 1; i < m; ++i) mx = std::max(mx, A.at(i, j));
            double sum = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                out.at(i, j) = std::exp(A.at(i, j) - mx);
                sum += out.at(i, j);
            }
            for (std::size_t i = 0; i < m; ++i) out.at(i, j) /= sum;
        }
    }
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id, axis, m, n](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            const Tensor& s = t.value_at(oid);
            Tensor& ga = t.grad_ref(aid);
            if (axis == 1) {
                for (std::size_t i = 0; i < m; ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < n; ++j) dot += g.at(i, j) * s.at(i, j);
                    for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += s.at(i, j) * (g.at(i, j) - dot);
                }
            } else {
                for (std::size_t j = 0; j < n; ++j) {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < m; ++i) dot += g.at(i, j) * s.at(i, j);
                    for (std::size_t i = 0; i < m; ++i) ga.at(i, j) += s.at(i, j) * (g.at(i, j) - dot);
                }
            }
        });
    }
    return o;
}

Var mean(Var a, int axis) {
    if (axis != 0 && axis != 1) throw ShapeError("mean: axis must be 0 or 1");
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    const std::size_t m = A.rows(), n = A.cols();
    Tensor out(axis == 0 ? Tensor({1, n}) : Tensor({m, 1}));
    if (axis == 0) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < m; ++i) sum += A.at(i, j);
            out.at(0, j) = sum / static_cast<double>(m);
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += A.at(i, j);
            out.at(i, 0) = sum / static_cast<double>(n);
        }
    }
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id, axis, m, n](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            Tensor& ga = t.grad_ref(aid);
            if (axis == 0) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += g.at(0, j) / static_cast<double>(m);
            } else {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += g.at(i, 0) / static_cast<double>(n);
            }
        });
    }
    return o;
}

Var sum_all(Var a) {
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    double sum = 0.0;
    for (std::size_t i = 0; i < A.numel(); ++i) sum += A[i];
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(Tensor::scalar(sum), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id](Tape& t) {
            const double g = t.grad_ref(oid)[0];
            Tensor& ga = t.grad_ref(aid);
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
        });
    }
    return o;
}

Var flatten(Var a) {
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    Tensor out = A.reshaped({1, A.numel()});
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            Tensor& ga = t.grad_ref(aid);
            for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
        });
    }
    return o;
}

Var mul_scalar(Var a, double c) {
    Tape* tape = a.tape;
    const Tensor& A = val(a);
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) out[i] = A[i] * c;
    const bool rg = tape->requires_grad(a);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [aid = a.id, oid = o.id, c](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            Tensor& ga = t.grad_ref(aid);
            for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * c;
        });
    }
    return o;
}

Var gather_rows(Var table, const std::vector<std::size_t>& indices) {
    Tape* tape = table.tape;
    const Tensor& T = val(table);
    if (indices.empty()) throw ShapeError("gather_rows: empty index list");
    const std::size_t n = indices.size(), d = T.cols();
    for (std::size_t idx : indices) {
        if (idx >= T.rows()) {
            throw ShapeError("gather_rows: index " + std::to_string(idx) + " out of range for " +
                             T.shape_str());
        }
    }
    Tensor out({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out.at(i, j) = T.at(indices[i], j);
    const bool rg = tape->requires_grad(table);
    Var o = tape->push(std::move(out), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [tid = table.id, oid = o.id, indices, n, d](Tape& t) {
            const Tensor& g = t.grad_ref(oid);
            Tensor& gt = t.grad_ref(tid);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) gt.at(indices[i], j) += g.at(i, j);
        });
    }
    return o;
}

Var cross_entropy(Var logits, std::size_t target) {
    Tape* tape = logits.tape;
    const Tensor& L = val(logits);
    if (L.rows() != 1 || L.cols() == 0) {
        throw ShapeError("cross_entropy: expected 1xL logits, got " + L.shape_str());
    }
    const std::size_t n = L.cols();
    if (target >= n) {
        throw ValidationError("cross_entropy: target " + std::to_string(target) +
                              " out of range for L=" + std::to_string(n));
    }
    if (L.at(0, target) <= kMaskThreshold) {
        throw ValidationError("cross_entropy: target " + std::to_string(target) +
                              " points at a masked logit");
    }
    double mx = L.at(0, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, L.at(0, j));
    std::vector<double> probs(n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        probs[j] = std::exp(L.at(0, j) - mx);
        sum += probs[j];
    }
    for (std::size_t j = 0; j < n; ++j) probs[j] /= sum;
    const double loss = (mx + std::log(sum)) - L.at(0, target);
    const bool rg = tape->requires_grad(logits);
    Var o = tape->push(Tensor::scalar(loss), rg, nullptr);
    if (rg) {
        tape->set_backprop(o.id, [lid = logits.id, oid = o.id, probs = std::move(probs), target](Tape& t) {
            const double g = t.grad_ref(oid)[0];
            Tensor& gl = t.grad_ref(lid);
            for (std::size_t j = 0; j < probs.size(); ++j) {
                gl.at(0, j) += g * (probs[j] - (j == target ? 1.0 : 0.0));
            }
        });
    }
    return o;
}

} // namespace ccgs
