#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ccgs/tensor.hpp"

namespace ccgs {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;
};

/// Eager reverse-mode tape. Operations execute immediately and append one node
/// each, so creation order is already a topological order; backward() walks it
/// once in reverse. One tape per forward/backward episode.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Insert an input node. Gradients are tracked only for requires_grad leaves
    /// and everything downstream of them.
    Var leaf(Tensor value, bool requires_grad = false);

    /// Backpropagate from a scalar (1x1) node. Gradients accumulate into every
    /// node reached from `loss`. A second call throws unless `accumulate`.
    void backward(Var loss, bool accumulate = false);

    /// References returned here are invalidated by the next op on this tape
    /// (node storage may reallocate); copy if an op call can intervene.
    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v) const;
    bool has_grad(Var v) const { return !nodes_[v.id].grad.empty(); }

    std::size_t size() const { return nodes_.size(); }

    // Op-author interface. Closures are attached after push() so they can
    // capture the output node's id; they read values and gradients back
    // through the tape by id (node storage may reallocate between ops).
    Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> backprop);
    void set_backprop(std::size_t id, std::function<void(Tape&)> backprop);
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    bool node_requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    const Tensor& value_at(std::size_t id) const { return nodes_[id].value; }
    Tensor& grad_ref(std::size_t id);

private:
    struct Node {
        Tensor value;
        Tensor grad; // allocated lazily in backward()
        bool requires_grad = false;
        std::function<void(Tape&)> backprop;
    };
    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

// Tensor operations. All inputs must live on the same tape.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
/// Adds a 1xN row vector onto every row of an MxN matrix.
Var add_row_broadcast(Var matrix, Var row);
/// Repeats a 1xN row vector into an MxN matrix.
Var broadcast_rows(Var row, std::size_t m);
Var elementwise_mul(Var a, Var b);
/// axis 0: stack rows; axis 1: side by side.
Var concat(const std::vector<Var>& parts, int axis);
/// Half-open row/column ranges.
Var slice(Var a, std::size_t row_begin, std::size_t row_end, std::size_t col_begin, std::size_t col_end);
/// mask entries set to `fill_value`; gradient through filled entries is zero.
Var masked_fill(Var a, const std::vector<std::uint8_t>& mask, double fill_value);
Var relu(Var a);
/// Inverted dropout: kept entries scaled by 1/(1-p) at train time, identity in
/// eval mode. Mask is a pure function of `seed`.
Var dropout(Var a, double p, bool train, std::uint64_t seed);
/// axis 1: softmax within each row; axis 0: within each column.
Var softmax(Var a, int axis);
/// axis 0: column means (1xN); axis 1: row means (Mx1).
Var mean(Var a, int axis);
Var sum_all(Var a);
/// Row-major flatten to 1x(numel).
Var flatten(Var a);
Var mul_scalar(Var a, double c);
/// Selects rows of `table` by index; duplicate indices accumulate gradient.
Var gather_rows(Var table, const std::vector<std::size_t>& indices);
/// -log softmax(logits)[target] over a 1xL logit row, computed stably.
/// Throws if target is out of range or sits on a masked (sentinel) logit.
Var cross_entropy(Var logits, std::size_t target);

/// Sentinel used in place of -inf so arithmetic stays finite. exp(sentinel - m)
/// underflows to exactly zero for any valid max m.
inline constexpr double kMaskSentinel = -1e30;
/// Logits at or below this threshold are treated as masked.
inline constexpr double kMaskThreshold = -1e29;

} // namespace ccgs
