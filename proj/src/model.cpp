#include "ccgs/model.hpp"

#include "ccgs/error.hpp"
#include "ccgs/rng.hpp"

namespace ccgs {

EncoderConfig ModelConfig::encoder() const {
    EncoderConfig e;
    e.d = d;
    e.d_v = d_v;
    e.buckets = buckets;
    e.fps = fps;
    e.seed = seed;
    e.text_self_attention = text_self_attention;
    return e;
}

FusionConfig ModelConfig::fusion() const {
    FusionConfig f;
    f.d = d;
    f.similarity = similarity;
    f.dropout_p = dropout_p;
    return f;
}

GlobalSpanConfig ModelConfig::span() const {
    GlobalSpanConfig g;
    g.d = d;
    g.position_form = position_form;
    g.max_positions = max_positions;
    return g;
}

void register_model_params(ParameterSet& params, const ModelConfig& cfg) {
    if (cfg.max_length < 1) throw ConfigError("model: max_length must be positive");
    register_encoder_params(params, cfg.encoder());
    params.create("model/vproj_w", glorot_init(cfg.d_v, cfg.d, fnv1a(cfg.seed, "model/vproj_w")));
    params.create("model/vproj_b", Tensor::zeros(1, cfg.d));
    register_fusion_params(params, cfg.fusion(), cfg.seed);
    register_globalspan_params(params, cfg.span(), cfg.seed);
}

const SpanLabelMap& SpanMapCache::get(const VideoDoc& video) {
    auto it = maps_.find(video.video_id);
    if (it == maps_.end()) {
        it = maps_.emplace(video.video_id, build_span_label_map(video, max_length_)).first;
    }
    return it->second;
}

GlobalSpanMatrix score_pair(const BoundParams& bound, const std::vector<std::string>& question_tokens,
                            const VideoDoc& video, const SpanLabelMap& map, const ModelConfig& cfg,
                            bool train, std::uint64_t dropout_seed) {
    const EncoderConfig ecfg = cfg.encoder();
    const FusionConfig fcfg = cfg.fusion();

    VisualEncoding vis = encode_video_toy(bound, video, ecfg);
    Var V = add_row_broadcast(matmul(vis.features, bound.at("model/vproj_w")),
                              bound.at("model/vproj_b"));

    TextEncoding txt = encode_text_toy(bound, question_tokens, map, video, ecfg);
    const std::size_t p = txt.question_length;
    Var T_Q = slice(txt.features, 0, p, 0, cfg.d);

    Var v1 = context_query_attention(bound, V, T_Q, fcfg);
    Var v2 = context_query_concat(bound, v1, T_Q, fcfg);
    Var v3 = visual_condense(bound, v2, fcfg, train, dropout_seed);
    Var fused = elementwise_fuse(v3, txt.features, p);

    SplitFeatures split = es_layer(bound, fused, cfg.span());
    return build_matrix(split.X_hat, split.Y_hat);
}

} // namespace ccgs
