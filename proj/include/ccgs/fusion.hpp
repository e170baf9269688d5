#pragma once

#include <cstdint>

#include "ccgs/autograd.hpp"
#include "ccgs/optim.hpp"

namespace ccgs {

enum class Similarity { dot, trilinear };

struct FusionConfig {
    std::size_t d = 64;
    Similarity similarity = Similarity::dot;
    double dropout_p = 0.1;
};

/// Registers fusion parameters:
///   fus/ffn_w (4d x d), fus/ffn_b (1 x d)           — attention FFN
///   fus/conv_w (2d x d), fus/conv_b (1 x d)         — kernel-1 conv, i.e. per-frame linear
///   fus/cond_c (d x 1), fus/cond_c0 (1 x 1),
///   fus/cond_b (1 x d)                              — frame-axis condensation
///   fus/sim_wv, fus/sim_wq (d x 1), fus/sim_wx (1 x d) — only for trilinear similarity
void register_fusion_params(ParameterSet& params, const FusionConfig& cfg, std::uint64_t seed);

/// Intermediate values, filled only when a debug pointer is passed.
struct CqaDebug {
    Tensor S, S_row, S_col, A, B;
};

/// Context-query attention. Similarity S (m x p) between every frame and query
/// token, row-softmax S_row and column-softmax S_col, A = S_row * T_Q,
/// B = S_col * S_row^T * V, then a one-layer FFN with ReLU over
/// [V; A; V.A; V.B] (4d wide) back down to d.
Var context_query_attention(const BoundParams& bound, Var V, Var T_Q, const FusionConfig& cfg,
                            CqaDebug* debug = nullptr);

struct CqcDebug {
    Tensor attention, pooled_query;
};

/// Cross-attention of V' onto the query, concatenated feature-wise with the
/// mean-pooled query broadcast to every frame (m x 2d), then the kernel-1
/// convolution down to d. The conv has no activation.
Var context_query_concat(const BoundParams& bound, Var V1, Var T_Q, const FusionConfig& cfg,
                         CqcDebug* debug = nullptr);

/// Weighted combination across the frame axis: out_k = sum_i w_i V2[i,k] + b_k.
/// `weights` is m x 1, `bias` 1 x d; output 1 x d. The learned path computes
/// its weights by softmax, this helper is the shared final step.
Var condense_with_weights(Var V2, Var weights, Var bias);

struct CondenseDebug {
    Tensor weights;
};

/// Dropout (train mode only), then a learned softmax weighting over frames
/// condenses m x d to 1 x d.
Var visual_condense(const BoundParams& bound, Var V2, const FusionConfig& cfg, bool train,
                    std::uint64_t seed, CondenseDebug* debug = nullptr);

/// T_bar = T[p:] + V3 broadcast onto every subtitle row; output r x d.
Var elementwise_fuse(Var V3, Var T, std::size_t p);

} // namespace ccgs
