#include "ccgs/fusion.hpp"

#include <cmath>

#include "ccgs/error.hpp"
#include "ccgs/rng.hpp"

namespace ccgs {

namespace {

void check_d(const Tensor& a, const Tensor& b, const char* op) {
    if (a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": hidden size mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

} // namespace

void register_fusion_params(ParameterSet& params, const FusionConfig& cfg, std::uint64_t seed) {
    const std::size_t d = cfg.d;
    if (d < 2) throw ConfigError("fusion: d must be at least 2");
    params.create("fus/ffn_w", glorot_init(4 * d, d, fnv1a(seed, "fus/ffn_w")));
    params.create("fus/ffn_b", Tensor::zeros(1, d));
    params.create("fus/conv_w", glorot_init(2 * d, d, fnv1a(seed, "fus/conv_w")));
    params.create("fus/conv_b", Tensor::zeros(1, d));
    params.create("fus/cond_c", glorot_init(d, 1, fnv1a(seed, "fus/cond_c")));
    params.create("fus/cond_c0", Tensor::zeros(1, 1));
    params.create("fus/cond_b", Tensor::zeros(1, d));
    if (cfg.similarity == Similarity::trilinear) {
        params.create("fus/sim_wv", glorot_init(d, 1, fnv1a(seed, "fus/sim_wv")));
        params.create("fus/sim_wq", glorot_init(d, 1, fnv1a(seed, "fus/sim_wq")));
        params.create("fus/sim_wx", glorot_init(1, d, fnv1a(seed, "fus/sim_wx")));
    }
}

Var context_query_attention(const BoundParams& bound, Var V, Var T_Q, const FusionConfig& cfg,
                            CqaDebug* debug) {
    Tape& tape = *bound.tape;
    const std::size_t m = tape.value(V).rows();
    const std::size_t p = tape.value(T_Q).rows();
    check_d(tape.value(V), tape.value(T_Q), "context_query_attention");

    Var S;
    if (cfg.similarity == Similarity::dot) {
        S = mul_scalar(matmul(V, transpose(T_Q)), 1.0 / std::sqrt(static_cast<double>(cfg.d)));
    } else {
        // Trilinear: S[i,j] = wv.v_i + wq.q_j + wx.(v_i . q_j)
        Var sv_cols = matmul(matmul(V, bound.at("fus/sim_wv")), tape.leaf(Tensor::full(1, p, 1.0)));
        Var sq_rows = broadcast_rows(transpose(matmul(T_Q, bound.at("fus/sim_wq"))), m);
        Var cross = matmul(elementwise_mul(V, broadcast_rows(bound.at("fus/sim_wx"), m)), transpose(T_Q));
        S = add(add(cross, sv_cols), sq_rows);
    }

    Var S_row = softmax(S, 1);
    Var S_col = softmax(S, 0);
    Var A = matmul(S_row, T_Q);
    Var B = matmul(matmul(S_col, transpose(S_row)), V);
    Var cat = concat({V, A, elementwise_mul(V, A), elementwise_mul(V, B)}, 1);
    Var out = relu(add_row_broadcast(matmul(cat, bound.at("fus/ffn_w")), bound.at("fus/ffn_b")));
    if (debug) {
        debug->S = tape.value(S);
        debug->S_row = tape.value(S_row);
        debug->S_col = tape.value(S_col);
        debug->A = tape.value(A);
        debug->B = tape.value(B);
    }
    return out;
}

Var context_query_concat(const BoundParams& bound, Var V1, Var T_Q, const FusionConfig& cfg,
                         CqcDebug* debug) {
    Tape& tape = *bound.tape;
    const std::size_t m = tape.value(V1).rows();
    check_d(tape.value(V1), tape.value(T_Q), "context_query_concat");

    Var scores = mul_scalar(matmul(V1, transpose(T_Q)), 1.0 / std::sqrt(static_cast<double>(cfg.d)));
    Var attention = matmul(softmax(scores, 1), T_Q);
    Var pooled = mean(T_Q, 0);
    Var cat = concat({attention, broadcast_rows(pooled, m)}, 1);
    Var out = add_row_broadcast(matmul(cat, bound.at("fus/conv_w")), bound.at("fus/conv_b"));
    if (debug) {
        debug->attention = tape.value(attention);
        debug->pooled_query = tape.value(pooled);
    }
    return out;
}

Var condense_with_weights(Var V2, Var weights, Var bias) {
    Tape& tape = *V2.tape;
    if (tape.value(weights).rows() != tape.value(V2).rows() || tape.value(weights).cols() != 1) {
        throw ShapeError("condense_with_weights: weights " + tape.value(weights).shape_str() +
                         " do not match frames " + tape.value(V2).shape_str());
    }
    return add(matmul(transpose(weights), V2), bias);
}

Var visual_condense(const BoundParams& bound, Var V2, const FusionConfig& cfg, bool train,
                    std::uint64_t seed, CondenseDebug* debug) {
    Tape& tape = *bound.tape;
    Var dropped = dropout(V2, cfg.dropout_p, train, seed);
    Var scores = add_row_broadcast(matmul(dropped, bound.at("fus/cond_c")), bound.at("fus/cond_c0"));
    Var weights = softmax(scores, 0); // over the frame axis
    Var out = condense_with_weights(dropped, weights, bound.at("fus/cond_b"));
    if (debug) debug->weights = tape.value(weights);
    return out;
}

Var elementwise_fuse(Var V3, Var T, std::size_t p) {
    Tape& tape = *V3.tape;
    const std::size_t rows = tape.value(T).rows();
    const std::size_t d = tape.value(T).cols();
    if (p >= rows) {
        throw ShapeError("elementwise_fuse: p=" + std::to_string(p) + " leaves no subtitle rows of " +
                         tape.value(T).shape_str());
    }
    check_d(tape.value(V3), tape.value(T), "elementwise_fuse");
    return add_row_broadcast(slice(T, p, rows, 0, d), V3);
}

} // namespace ccgs
