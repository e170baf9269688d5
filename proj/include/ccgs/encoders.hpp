#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccgs/autograd.hpp"
#include "ccgs/corpus.hpp"
#include "ccgs/optim.hpp"

namespace ccgs {

struct EncoderConfig {
    std::size_t d = 64;      // model hidden size
    std::size_t d_v = 32;    // raw visual feature size
    std::size_t buckets = 4096;
    double fps = 1.0;        // pseudo-frames per second
    std::uint64_t seed = 0;  // hashing + init seed
    bool text_self_attention = true;
};

/// Raw (pre-projection) visual features: one row per pseudo-frame.
struct VisualFeatures {
    Tensor features; // m x d_v
    std::vector<double> timestamps;
};

/// Fixed sinusoidal table: row pos, even columns sin(pos / 10000^(2i/d)),
/// odd columns the matching cos.
Tensor sinusoidal_position_table(std::size_t n, std::size_t d);

/// Registers the toy-encoder parameters:
///   enc/visual_embed (buckets x d_v), enc/text_embed (buckets x d),
///   enc/attn_wq, enc/attn_wk, enc/attn_wv (d x d, only used when
///   text_self_attention is on).
void register_encoder_params(ParameterSet& params, const EncoderConfig& cfg);

struct VisualEncoding {
    Var features; // m x d_v, rows from the trainable visual table
    std::vector<double> timestamps;
};

/// Pseudo-I3D: one row per second-bucket, selected from the visual embedding
/// table by a hash of (video_id, bucket index, covering unit's tokens). Pure
/// given (video, cfg, parameters).
VisualEncoding encode_video_toy(const BoundParams& bound, const VideoDoc& video,
                                const EncoderConfig& cfg);

struct TextEncoding {
    Var features;              // (p+r) x d
    std::size_t question_length = 0; // p
    std::size_t token_count = 0;     // r
};

/// Hashed-bucket embeddings for question tokens followed by the mapped
/// subtitle tokens, plus the sinusoidal position signal, then one residual
/// self-attention mixing layer (skipped when cfg.text_self_attention is off).
TextEncoding encode_text_toy(const BoundParams& bound, const std::vector<std::string>& question_tokens,
                             const SpanLabelMap& map, const VideoDoc& video, const EncoderConfig& cfg);

// Feature file: magic "CCGF", u32 version, u32 m, u32 d_v, m*d_v little-endian
// 32-bit floats row-major, then m little-endian 32-bit float timestamps.
VisualFeatures load_precomputed_features(const std::string& path, std::size_t expected_d_v);
void save_features(const std::string& path, const VisualFeatures& features);

} // namespace ccgs
