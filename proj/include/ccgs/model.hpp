#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccgs/corpus.hpp"
#include "ccgs/encoders.hpp"
#include "ccgs/fusion.hpp"
#include "ccgs/globalspan.hpp"

namespace ccgs {

/// One flat knob set for the whole question-video scorer; the per-stage
/// configs are derived views of it.
struct ModelConfig {
    std::size_t d = 64;            // shared hidden width
    std::size_t d_v = 32;          // raw visual feature width before projection
    std::size_t buckets = 4096;    // toy-encoder hash vocabulary
    double fps = 1.0;              // visual frames per second
    std::uint64_t seed = 0;        // parameter init and dropout stream root
    bool text_self_attention = true;
    Similarity similarity = Similarity::dot;
    double dropout_p = 0.1;
    PositionForm position_form = PositionForm::sinusoid;
    std::size_t max_positions = 1024; // learned position capacity
    std::size_t max_length = 1300;    // subtitle token budget per video

    EncoderConfig encoder() const;
    FusionConfig fusion() const;
    GlobalSpanConfig span() const;
};

/// Registers every parameter of the scorer: encoder tables, the d_v -> d
/// visual projection, the fusion weights, and the split layer.
void register_model_params(ParameterSet& params, const ModelConfig& cfg);

/// Caches one span label map per video so repeated scoring of the same video
/// does not re-derive token boundaries.
class SpanMapCache {
public:
    explicit SpanMapCache(std::size_t max_length) : max_length_(max_length) {}
    const SpanLabelMap& get(const VideoDoc& video);

private:
    std::size_t max_length_;
    std::map<std::string, SpanLabelMap> maps_;
};

/// Full forward pass for one (question, video) pair: encode both sides,
/// project the visual rows to width d, fuse, and build the span matrix.
/// `dropout_seed` fixes the train-mode dropout mask; eval mode ignores it.
GlobalSpanMatrix score_pair(const BoundParams& bound, const std::vector<std::string>& question_tokens,
                            const VideoDoc& video, const SpanLabelMap& map, const ModelConfig& cfg,
                            bool train, std::uint64_t dropout_seed);

} // namespace ccgs
