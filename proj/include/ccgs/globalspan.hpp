#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ccgs/autograd.hpp"
#include "ccgs/optim.hpp"

namespace ccgs {

enum class PositionForm { sinusoid, learned };

struct GlobalSpanConfig {
    std::size_t d = 64;
    PositionForm position_form = PositionForm::sinusoid;
    // Capacity of the learned position table; unused for the sinusoid form.
    std::size_t max_positions = 1024;
};

void register_globalspan_params(ParameterSet& params, const GlobalSpanConfig& cfg,
                                std::uint64_t seed);

/// Output of the embedded split layer: one d->2d linear map whose first d
/// columns become the tail features X and last d the head features Y, plus the
/// position rows P added onto both halves (X_hat = X + P, Y_hat = Y + P).
struct SplitFeatures {
    Var X;
    Var Y;
    Var X_hat;
    Var Y_hat;
    Var P;
};

SplitFeatures es_layer(const BoundParams& bound, Var t_bar, const GlobalSpanConfig& cfg);

/// r x r span logits. Row y is the start unit, column x the end unit; only
/// cells with y <= x name real spans, the rest hold the mask sentinel.
struct GlobalSpanMatrix {
    Var logits;
    std::vector<std::uint8_t> valid_mask; // row-major, 1 iff y <= x
    std::size_t r = 0;
};

/// logits[y, x] = (Y_hat row y . X_hat row x) / d, lower triangle masked.
GlobalSpanMatrix build_matrix(Var x_hat, Var y_hat);

/// Row-major flatten to a 1 x r^2 logit vector; cell (y, x) lands at y*r + x.
Var flatten_matrix(const GlobalSpanMatrix& m);

/// Cross-entropy against the flattened gold span point. Rejects points in the
/// masked triangle or outside the matrix.
Var predictor_loss(Var flat, std::size_t y, std::size_t x, std::size_t r);

/// Gold video's flattened logits followed by each negative video's, as one row.
struct GlobalLogits {
    Var logits;
    std::size_t target = 0;              // flat index of the gold cell (always in segment 0)
    std::vector<std::size_t> offsets;    // start of each video's segment, positive first
};

GlobalLogits contrastive_concat(const GlobalSpanMatrix& pos, std::size_t y, std::size_t x,
                                const std::vector<GlobalSpanMatrix>& negs);

/// Cross-entropy over the concatenation: the gold cell competes with every
/// span point of every negative video as well as its own video's other cells.
Var contrastive_loss(const GlobalLogits& g);

/// Joint objective: predictor loss plus contrastive loss.
Var total_loss(Var loss1, Var loss2);

struct DecodedSpan {
    std::size_t y = 0;
    std::size_t x = 0;
    double score = 0.0;
};

/// Argmax over the valid (y <= x) cells; ties break toward the smallest y,
/// then the smallest x. The score is the winning logit.
DecodedSpan decode_span(const Tensor& logits);
DecodedSpan decode_span(const GlobalSpanMatrix& m);

/// Inspection dump: {"r", "logits" (row-major), "mask" (row-major 0/1)}.
nlohmann::json matrix_to_json(const GlobalSpanMatrix& m);

} // namespace ccgs
