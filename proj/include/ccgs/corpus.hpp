#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ccgs {

struct TimeInterval {
    double start = 0.0;
    double end = 0.0;
    bool operator==(const TimeInterval&) const = default;
};

/// One subtitle line with its time extent. `index` is the 1-based ordinal of
/// the unit within its video.
struct SubtitleUnit {
    std::size_t index = 0;
    std::string text;
    TimeInterval interval;
    bool operator==(const SubtitleUnit&) const = default;
};

struct VideoDoc {
    std::string video_id;
    std::vector<SubtitleUnit> units;
    double duration = 0.0;
    bool operator==(const VideoDoc&) const = default;
};

struct QAInstance {
    std::string question_id;
    std::string question;
    std::string video_id;
    TimeInterval answer;
    bool operator==(const QAInstance&) const = default;
};

struct CorpusSplit {
    std::map<std::string, VideoDoc> videos;
    std::vector<QAInstance> qa;
    std::string split_name = "train"; // train | val | test
    bool operator==(const CorpusSplit&) const = default;

    const VideoDoc& video(const std::string& video_id) const;
};

/// Inclusive token-index span: y = start token, x = end token, y <= x.
struct SpanPoint {
    std::size_t y = 0;
    std::size_t x = 0;
    bool operator==(const SpanPoint&) const = default;
};

/// Bridges token indices and time: each kept unit owns the contiguous,
/// inclusive token range [token_begin, token_end]. Ranges cover [0, r-1] in
/// order with no gaps.
struct SpanLabelMap {
    struct UnitRange {
        std::size_t unit_index = 0; // 1-based, matches SubtitleUnit::index
        std::size_t token_begin = 0;
        std::size_t token_end = 0;
        TimeInterval interval;
    };
    std::vector<UnitRange> units;
    std::size_t token_count = 0; // r
    bool truncated = false;

    /// Index into `units` of the unit owning the given token; throws if out of
    /// range.
    std::size_t unit_of_token(std::size_t token) const;
};

/// Lowercased, punctuation-stripped, whitespace-split. Empty input gives an
/// empty list. Bytes >= 0x80 are kept verbatim so UTF-8 words survive.
std::vector<std::string> tokenize(const std::string& text);

CorpusSplit parse_corpus(const std::string& json_text);
std::string serialize_corpus(const CorpusSplit& split);

SpanLabelMap build_span_label_map(const VideoDoc& video, std::size_t max_length);

/// Smallest token span covering every unit that overlaps `gt` by a positive
/// length. Throws if no unit qualifies.
SpanPoint time_to_span(const SpanLabelMap& map, TimeInterval gt);

/// Start time of the unit holding token y, end time of the unit holding
/// token x.
TimeInterval span_to_time(const SpanLabelMap& map, SpanPoint point);

struct SynthConfig {
    std::size_t n_videos = 16;
    std::size_t units_per_video = 12;
    std::size_t tokens_per_unit = 6;
    std::size_t vocab_size = 256;
    std::size_t n_questions = 32;
};

/// Deterministic toy corpus. Construction guarantees every question is
/// answerable and names its video unambiguously:
///   - every unit of video i carries that video's unique topic token;
///   - each video has one canonical whole-unit answer span whose units carry a
///     corpus-wide beacon token plus one marker token per question asked of
///     that video;
///   - questions are filler words (absent from all videos) + topic + beacon +
///     their own marker.
/// Questions are assigned to videos round-robin, so any contiguous question
/// range spreads evenly over videos.
CorpusSplit generate_synthetic_corpus(const SynthConfig& cfg, std::uint64_t seed);

/// Re-labels contiguous question ranges as train/val/test. Videos are shared
/// by all three splits; only the question lists differ.
struct SplitCorpora {
    CorpusSplit train;
    CorpusSplit val;
    CorpusSplit test;
};
SplitCorpora split_questions(const CorpusSplit& full, std::size_t n_train, std::size_t n_val);

} // namespace ccgs
