#include "ccgs/globalspan.hpp"

#include <string>

#include "ccgs/encoders.hpp"
#include "ccgs/error.hpp"
#include "ccgs/rng.hpp"

namespace ccgs {

void register_globalspan_params(ParameterSet& params, const GlobalSpanConfig& cfg,
                                std::uint64_t seed) {
    const std::size_t d = cfg.d;
    if (d < 1) throw ConfigError("globalspan: d must be positive");
    params.create("gs/es_w", glorot_init(d, 2 * d, fnv1a(seed, "gs/es_w")));
    params.create("gs/es_b", Tensor::zeros(1, 2 * d));
    if (cfg.position_form == PositionForm::learned) {
        if (cfg.max_positions < 1) throw ConfigError("globalspan: max_positions must be positive");
        params.create("gs/pos", glorot_init(cfg.max_positions, d, fnv1a(seed, "gs/pos")));
    }
}

SplitFeatures es_layer(const BoundParams& bound, Var t_bar, const GlobalSpanConfig& cfg) {
    Tape& tape = *bound.tape;
    const std::size_t r = tape.value(t_bar).rows();
    const std::size_t d = cfg.d;
    if (tape.value(t_bar).cols() != d) {
        throw ShapeError("es_layer: input is " + tape.value(t_bar).shape_str() + ", expected r x " +
                         std::to_string(d));
    }

    Var h = add_row_broadcast(matmul(t_bar, bound.at("gs/es_w")), bound.at("gs/es_b"));

    SplitFeatures out;
    out.X = slice(h, 0, r, 0, d);
    out.Y = slice(h, 0, r, d, 2 * d);
    if (cfg.position_form == PositionForm::sinusoid) {
        out.P = tape.leaf(sinusoidal_position_table(r, d));
    } else {
        const std::size_t cap = tape.value(bound.at("gs/pos")).rows();
        if (r > cap) {
            throw ValidationError("es_layer: sequence has " + std::to_string(r) +
                                  " units but the learned position table holds " +
                                  std::to_string(cap));
        }
        out.P = slice(bound.at("gs/pos"), 0, r, 0, d);
    }
    out.X_hat = add(out.X, out.P);
    out.Y_hat = add(out.Y, out.P);
    return out;
}

GlobalSpanMatrix build_matrix(Var x_hat, Var y_hat) {
    Tape& tape = *x_hat.tape;
    const Tensor& xv = tape.value(x_hat);
    if (!xv.is_matrix() || !xv.same_shape(tape.value(y_hat))) {
        throw ShapeError("build_matrix: X_hat " + xv.shape_str() + " and Y_hat " +
                         tape.value(y_hat).shape_str() + " must be matching r x d matrices");
    }
    const std::size_t r = xv.rows();
    const std::size_t d = xv.cols();

    // Head row y dot tail column x, averaged over the feature axis.
    Var raw = mul_scalar(matmul(y_hat, transpose(x_hat)), 1.0 / static_cast<double>(d));

    GlobalSpanMatrix m;
    m.r = r;
    m.valid_mask.assign(r * r, 0);
    std::vector<std::uint8_t> lower(r * r, 0);
    for (std::size_t y = 0; y < r; ++y) {
        for (std::size_t x = 0; x < r; ++x) {
            if (y <= x) {
                m.valid_mask[y * r + x] = 1;
            } else {
                lower[y * r + x] = 1;
            }
        }
    }
    m.logits = masked_fill(raw, lower, kMaskSentinel);
    return m;
}

Var flatten_matrix(const GlobalSpanMatrix& m) { return flatten(m.logits); }

Var predictor_loss(Var flat, std::size_t y, std::size_t x, std::size_t r) {
    if (x >= r || y > x) {
        throw ValidationError("predictor_loss: span point (" + std::to_string(y) + ", " +
                              std::to_string(x) + ") needs y <= x < " + std::to_string(r));
    }
    const Tensor& fv = flat.tape->value(flat);
    if (fv.rows() != 1 || fv.cols() != r * r) {
        throw ShapeError("predictor_loss: logits are " + fv.shape_str() + ", expected 1 x " +
                         std::to_string(r * r));
    }
    return cross_entropy(flat, y * r + x);
}

GlobalLogits contrastive_concat(const GlobalSpanMatrix& pos, std::size_t y, std::size_t x,
                                const std::vector<GlobalSpanMatrix>& negs) {
    if (x >= pos.r || y > x) {
        throw ValidationError("contrastive_concat: span point (" + std::to_string(y) + ", " +
                              std::to_string(x) + ") needs y <= x < " + std::to_string(pos.r));
    }
    GlobalLogits g;
    g.target = y * pos.r + x;
    g.offsets = {0};
    std::vector<Var> parts = {flatten_matrix(pos)};
    std::size_t total = pos.r * pos.r;
    for (const GlobalSpanMatrix& neg : negs) {
        g.offsets.push_back(total);
        parts.push_back(flatten_matrix(neg));
        total += neg.r * neg.r;
    }
    g.logits = parts.size() == 1 ? parts.front() : concat(parts, 1);
    return g;
}

Var contrastive_loss(const GlobalLogits& g) { return cross_entropy(g.logits, g.target); }

Var total_loss(Var loss1, Var loss2) { return add(loss1, loss2); }

DecodedSpan decode_span(const Tensor& logits) {
    if (!logits.is_matrix() || logits.rows() != logits.cols() || logits.rows() == 0) {
        throw ShapeError("decode_span: logits are " + logits.shape_str() +
                         ", expected a square r x r matrix");
    }
    const std::size_t r = logits.rows();
    DecodedSpan best{0, 0, logits.at(0, 0)};
    for (std::size_t y = 0; y < r; ++y) {
        for (std::size_t x = y; x < r; ++x) {
            // Strict comparison in scan order keeps the smallest (y, x) on ties.
            if (logits.at(y, x) > best.score) best = {y, x, logits.at(y, x)};
        }
    }
    return best;
}

DecodedSpan decode_span(const GlobalSpanMatrix& m) {
    return decode_span(m.logits.tape->value(m.logits));
}

nlohmann::json matrix_to_json(const GlobalSpanMatrix& m) {
    const Tensor& value = m.logits.tape->value(m.logits);
    nlohmann::json j;
    j["r"] = m.r;
    j["logits"] = value.data();
    j["mask"] = std::vector<int>(m.valid_mask.begin(), m.valid_mask.end());
    return j;
}

} // namespace ccgs
