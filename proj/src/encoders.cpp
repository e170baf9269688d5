#include "ccgs/encoders.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "ccgs/error.hpp"
#include "ccgs/rng.hpp"

namespace ccgs {

Tensor sinusoidal_position_table(std::size_t n, std::size_t d) {
    Tensor table({n, d});
    for (std::size_t pos = 0; pos < n; ++pos) {
        for (std::size_t i = 0; i < d; ++i) {
            const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
            table.at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return table;
}

namespace {

void validate_config(const EncoderConfig& cfg) {
    if (cfg.d < 2 || cfg.d_v < 2) throw ConfigError("encoder: d and d_v must be at least 2");
    if (cfg.buckets < 16) throw ConfigError("encoder: need at least 16 hash buckets");
    if (!(cfg.fps > 0.0)) throw ConfigError("encoder: fps must be positive");
}

std::uint64_t hash_tokens(std::uint64_t h, const std::vector<std::string>& tokens) {
    for (const std::string& t : tokens) h = fnv1a(h, t);
    return h;
}

} // namespace

void register_encoder_params(ParameterSet& params, const EncoderConfig& cfg) {
    validate_config(cfg);
    params.create("enc/visual_embed",
                  embedding_init(cfg.buckets, cfg.d_v, fnv1a(cfg.seed, "enc/visual_embed")));
    params.create("enc/text_embed",
                  embedding_init(cfg.buckets, cfg.d, fnv1a(cfg.seed, "enc/text_embed")));
    params.create("enc/attn_wq", glorot_init(cfg.d, cfg.d, fnv1a(cfg.seed, "enc/attn_wq")));
    params.create("enc/attn_wk", glorot_init(cfg.d, cfg.d, fnv1a(cfg.seed, "enc/attn_wk")));
    params.create("enc/attn_wv", glorot_init(cfg.d, cfg.d, fnv1a(cfg.seed, "enc/attn_wv")));
}

VisualEncoding encode_video_toy(const BoundParams& bound, const VideoDoc& video,
                                const EncoderConfig& cfg) {
    validate_config(cfg);
    const std::size_t m = static_cast<std::size_t>(
            std::max(1.0, std::ceil(video.duration * cfg.fps - 1e-9)));
    std::vector<std::size_t> rows;
    std::vector<double> timestamps;
    rows.reserve(m);
    timestamps.reserve(m);
    const std::uint64_t video_hash = fnv1a(fnv1a(cfg.seed, "visual"), video.video_id);
    for (std::size_t b = 0; b < m; ++b) {
        const double t_mid = (static_cast<double>(b) + 0.5) / cfg.fps;
        std::uint64_t h = fnv1a(video_hash, static_cast<std::uint64_t>(b));
        for (const SubtitleUnit& unit : video.units) {
            if (unit.interval.start <= t_mid && t_mid < unit.interval.end) {
                h = hash_tokens(h, tokenize(unit.text));
                break;
            }
        }
        rows.push_back(h % cfg.buckets);
        timestamps.push_back(t_mid);
    }
    VisualEncoding enc;
    enc.features = gather_rows(bound.at("enc/visual_embed"), rows);
    enc.timestamps = std::move(timestamps);
    return enc;
}

TextEncoding encode_text_toy(const BoundParams& bound, const std::vector<std::string>& question_tokens,
                             const SpanLabelMap& map, const VideoDoc& video, const EncoderConfig& cfg) {
    validate_config(cfg);
    if (question_tokens.empty()) throw ValidationError("encode_text_toy: empty question");
    if (map.token_count == 0) throw ValidationError("encode_text_toy: no mapped subtitle tokens");

    const std::uint64_t text_hash = fnv1a(cfg.seed, "text");
    std::vector<std::size_t> rows;
    rows.reserve(question_tokens.size() + map.token_count);
    for (const std::string& tok : question_tokens) rows.push_back(fnv1a(text_hash, tok) % cfg.buckets);
    for (const auto& unit_range : map.units) {
        const SubtitleUnit& unit = video.units.at(unit_range.unit_index - 1);
        const std::vector<std::string> tokens = tokenize(unit.text);
        const std::size_t expected = unit_range.token_end - unit_range.token_begin + 1;
        if (tokens.size() != expected) {
            throw ValidationError("encode_text_toy: span map does not match video '" +
                                  video.video_id + "' (unit " + std::to_string(unit_range.unit_index) +
                                  " has " + std::to_string(tokens.size()) + " tokens, map says " +
                                  std::to_string(expected) + ")");
        }
        for (const std::string& tok : tokens) rows.push_back(fnv1a(text_hash, tok) % cfg.buckets);
    }

    Tape& tape = *bound.tape;
    Var embedded = gather_rows(bound.at("enc/text_embed"), rows);
    Var positioned = add(embedded, tape.leaf(sinusoidal_position_table(rows.size(), cfg.d)));

    TextEncoding enc;
    enc.question_length = question_tokens.size();
    enc.token_count = map.token_count;
    if (!cfg.text_self_attention) {
        enc.features = positioned;
        return enc;
    }
    // One residual self-attention layer so question and subtitle rows mix.
    Var q = matmul(positioned, bound.at("enc/attn_wq"));
    Var k = matmul(positioned, bound.at("enc/attn_wk"));
    Var v = matmul(positioned, bound.at("enc/attn_wv"));
    Var scores = mul_scalar(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(cfg.d)));
    Var mixed = matmul(softmax(scores, 1), v);
    enc.features = add(positioned, mixed);
    return enc;
}

namespace {

constexpr char kFeatureMagic[4] = {'C', 'C', 'G', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

std::uint32_t take_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw FormatError("truncated feature file '" + path + "'");
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float take_f32(std::istream& in, const std::string& path) {
    const std::uint32_t bits = take_u32(in, path);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

} // namespace

void save_features(const std::string& path, const VisualFeatures& features) {
    if (features.features.rows() != features.timestamps.size()) {
        throw ValidationError("save_features: " + std::to_string(features.features.rows()) +
                              " rows vs " + std::to_string(features.timestamps.size()) + " timestamps");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write feature file '" + path + "'");
    out.write(kFeatureMagic, 4);
    put_u32(out, kFeatureVersion);
    put_u32(out, static_cast<std::uint32_t>(features.features.rows()));
    put_u32(out, static_cast<std::uint32_t>(features.features.cols()));
    for (std::size_t i = 0; i < features.features.numel(); ++i) {
        put_f32(out, static_cast<float>(features.features[i]));
    }
    for (double t : features.timestamps) put_f32(out, static_cast<float>(t));
    out.flush();
    if (!out) throw FormatError("write failure on feature file '" + path + "'");
}

VisualFeatures load_precomputed_features(const std::string& path, std::size_t expected_d_v) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open feature file '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kFeatureMagic, 4) != 0) {
        throw FormatError("'" + path + "' is not a feature file (bad magic)");
    }
    const std::uint32_t version = take_u32(in, path);
    if (version != kFeatureVersion) {
        throw FormatError("unsupported feature file version " + std::to_string(version));
    }
    const std::uint32_t m = take_u32(in, path);
    const std::uint32_t d_v = take_u32(in, path);
    if (m == 0 || d_v == 0) throw FormatError("feature file '" + path + "' has empty shape");
    if (d_v != expected_d_v) {
        throw FormatError("feature file '" + path + "' has d_v=" + std::to_string(d_v) +
                          ", expected " + std::to_string(expected_d_v));
    }
    VisualFeatures out;
    out.features = Tensor({m, d_v});
    for (std::size_t i = 0; i < out.features.numel(); ++i) {
        out.features[i] = static_cast<double>(take_f32(in, path));
    }
    out.timestamps.resize(m);
    for (std::uint32_t i = 0; i < m; ++i) {
        out.timestamps[i] = static_cast<double>(take_f32(in, path));
        if (i > 0 && out.timestamps[i] <= out.timestamps[i - 1]) {
            throw FormatError("feature file '" + path + "': timestamps not strictly increasing");
        }
    }
    char extra;
    if (in.read(&extra, 1)) throw FormatError("trailing bytes in feature file '" + path + "'");
    return out;
}

} // namespace ccgs
