#include "ccgs/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "ccgs/error.hpp"
#include "ccgs/rng.hpp"

namespace ccgs {

using nlohmann::json;

const VideoDoc& CorpusSplit::video(const std::string& video_id) const {
    auto it = videos.find(video_id);
    if (it == videos.end()) throw ValidationError("unknown video_id '" + video_id + "'");
    return it->second;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

double require_finite(const json& value, const std::string& where) {
    if (!value.is_number()) throw FormatError(where + ": expected a number");
    const double d = value.get<double>();
    if (!std::isfinite(d)) throw FormatError(where + ": non-finite number");
    return d;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw FormatError(where + ": missing or non-string field '" + key + "'");
    }
    return obj[key].get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
    return require_finite(obj[key], where + "." + key);
}

VideoDoc parse_video(const json& v) {
    VideoDoc video;
    video.video_id = require_string(v, "video_id", "video");
    const std::string where = "video '" + video.video_id + "'";
    video.duration = require_number(v, "duration", where);
    if (video.duration < 0) throw FormatError(where + ": negative duration");
    if (!v.contains("subtitles") || !v["subtitles"].is_array() || v["subtitles"].empty()) {
        throw FormatError(where + ": needs a non-empty 'subtitles' array");
    }
    std::size_t idx = 1;
    for (const json& s : v["subtitles"]) {
        SubtitleUnit unit;
        unit.index = idx++;
        unit.text = require_string(s, "text", where + " subtitle " + std::to_string(unit.index));
        unit.interval.start = require_number(s, "start", where);
        unit.interval.end = require_number(s, "end", where);
        if (unit.interval.start < 0 || unit.interval.start > unit.interval.end) {
            throw FormatError(where + " subtitle " + std::to_string(unit.index) +
                              ": bad interval [" + std::to_string(unit.interval.start) + ", " +
                              std::to_string(unit.interval.end) + "]");
        }
        if (!video.units.empty() && unit.interval.start < video.units.back().interval.end) {
            throw FormatError(where + " subtitle " + std::to_string(unit.index) +
                              ": overlaps the previous unit");
        }
        video.units.push_back(std::move(unit));
    }
    if (video.units.back().interval.end > video.duration) {
        throw FormatError(where + ": last subtitle ends after the video duration");
    }
    return video;
}

QAInstance parse_qa(const json& q, const std::map<std::string, VideoDoc>& videos) {
    QAInstance qa;
    qa.question_id = require_string(q, "question_id", "qa record");
    const std::string where = "question '" + qa.question_id + "'";
    qa.question = require_string(q, "question", where);
    qa.video_id = require_string(q, "video_id", where);
    qa.answer.start = require_number(q, "answer_start", where);
    qa.answer.end = require_number(q, "answer_end", where);
    if (qa.answer.start > qa.answer.end) {
        throw FormatError(where + ": answer end " + std::to_string(qa.answer.end) +
                          " precedes start " + std::to_string(qa.answer.start));
    }
    auto it = videos.find(qa.video_id);
    if (it == videos.end()) {
        throw FormatError(where + ": dangling video_id '" + qa.video_id + "'");
    }
    if (qa.answer.end < 0 || qa.answer.start > it->second.duration) {
        throw FormatError(where + ": answer lies outside [0, duration] of its video");
    }
    return qa;
}

} // namespace

CorpusSplit parse_corpus(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("corpus JSON: ") + e.what());
    }
    if (!doc.is_object()) throw FormatError("corpus JSON: top level must be an object");

    CorpusSplit split;
    split.split_name = require_string(doc, "split", "corpus");
    if (split.split_name != "train" && split.split_name != "val" && split.split_name != "test") {
        throw FormatError("corpus: unknown split '" + split.split_name + "'");
    }
    if (!doc.contains("videos") || !doc["videos"].is_array()) {
        throw FormatError("corpus: missing 'videos' array");
    }
    if (!doc.contains("qa") || !doc["qa"].is_array()) {
        throw FormatError("corpus: missing 'qa' array");
    }
    for (const json& v : doc["videos"]) {
        VideoDoc video = parse_video(v);
        if (split.videos.count(video.video_id) != 0) {
            throw FormatError("corpus: duplicate video_id '" + video.video_id + "'");
        }
        split.videos.emplace(video.video_id, std::move(video));
    }
    if (split.videos.empty()) throw FormatError("corpus: no videos");
    for (const json& q : doc["qa"]) split.qa.push_back(parse_qa(q, split.videos));
    return split;
}

std::string serialize_corpus(const CorpusSplit& split) {
    json doc;
    doc["split"] = split.split_name;
    doc["videos"] = json::array();
    for (const auto& [id, video] : split.videos) {
        json v;
        v["video_id"] = video.video_id;
        v["duration"] = video.duration;
        v["subtitles"] = json::array();
        for (const SubtitleUnit& u : video.units) {
            v["subtitles"].push_back({{"start", u.interval.start},
                                      {"end", u.interval.end},
                                      {"text", u.text}});
        }
        doc["videos"].push_back(std::move(v));
    }
    doc["qa"] = json::array();
    for (const QAInstance& q : split.qa) {
        doc["qa"].push_back({{"question_id", q.question_id},
                             {"question", q.question},
                             {"video_id", q.video_id},
                             {"answer_start", q.answer.start},
                             {"answer_end", q.answer.end}});
    }
    return doc.dump(2) + "\n";
}

std::size_t SpanLabelMap::unit_of_token(std::size_t token) const {
    if (token >= token_count) {
        throw ValidationError("token index " + std::to_string(token) + " out of range (r=" +
                              std::to_string(token_count) + ")");
    }
    // Ranges are ordered and contiguous; binary search on token_begin.
    std::size_t lo = 0, hi = units.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (units[mid].token_begin <= token) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

SpanLabelMap build_span_label_map(const VideoDoc& video, std::size_t max_length) {
    if (max_length == 0) throw ValidationError("build_span_label_map: max_length must be positive");
    SpanLabelMap map;
    std::size_t next_token = 0;
    for (const SubtitleUnit& unit : video.units) {
        const std::size_t n_tokens = tokenize(unit.text).size();
        if (n_tokens == 0) continue; // nothing to point at in this unit
        if (next_token + n_tokens > max_length) {
            map.truncated = true;
            break;
        }
        SpanLabelMap::UnitRange range;
        range.unit_index = unit.index;
        range.token_begin = next_token;
        range.token_end = next_token + n_tokens - 1;
        range.interval = unit.interval;
        map.units.push_back(range);
        next_token += n_tokens;
    }
    if (map.units.empty()) {
        throw ValidationError("video '" + video.video_id + "' has no tokens to map");
    }
    map.token_count = next_token;
    return map;
}

SpanPoint time_to_span(const SpanLabelMap& map, TimeInterval gt) {
    const SpanLabelMap::UnitRange* first = nullptr;
    const SpanLabelMap::UnitRange* last = nullptr;
    for (const auto& unit : map.units) {
        const double lo = std::max(unit.interval.start, gt.start);
        const double hi = std::min(unit.interval.end, gt.end);
        if (hi > lo) { // positive-length overlap; touching does not count
            if (first == nullptr) first = &unit;
            last = &unit;
        }
    }
    if (first == nullptr) {
        throw ValidationError("time_to_span: [" + std::to_string(gt.start) + ", " +
                              std::to_string(gt.end) + "] overlaps no mapped unit");
    }
    return SpanPoint{first->token_begin, last->token_end};
}

TimeInterval span_to_time(const SpanLabelMap& map, SpanPoint point) {
    if (point.y > point.x || point.x >= map.token_count) {
        throw ValidationError("span_to_time: bad span point (" + std::to_string(point.y) + ", " +
                              std::to_string(point.x) + ") for r=" + std::to_string(map.token_count));
    }
    const auto& start_unit = map.units[map.unit_of_token(point.y)];
    const auto& end_unit = map.units[map.unit_of_token(point.x)];
    return TimeInterval{start_unit.interval.start, end_unit.interval.end};
}

namespace {

std::string zero_pad(std::size_t n, int width) {
    std::string s = std::to_string(n);
    while (s.size() < static_cast<std::size_t>(width)) s.insert(s.begin(), '0');
    return s;
}

} // namespace

CorpusSplit generate_synthetic_corpus(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.n_videos < 2) throw ValidationError("synthetic corpus needs at least 2 videos");
    if (cfg.units_per_video < 4) throw ValidationError("synthetic corpus needs at least 4 units per video");
    if (cfg.tokens_per_unit < 1) throw ValidationError("synthetic corpus needs at least 1 token per unit");
    // Reserved words: one topic per video, one marker per question, the beacon,
    // and three question-only filler words.
    const std::size_t reserved = cfg.n_videos + cfg.n_questions + 4;
    if (cfg.vocab_size < reserved + 8) {
        throw ValidationError("vocab_size " + std::to_string(cfg.vocab_size) + " too small: " +
                              std::to_string(reserved) + " reserved words need headroom of 8 distractors");
    }
    const std::size_t n_distractors = cfg.vocab_size - reserved;

    CorpusSplit split;
    split.split_name = "train";
    Rng rng(seed);
    const double unit_seconds = 4.0;

    // Canonical answer spans, chosen before question assignment so every
    // question about a video shares its span.
    std::vector<std::pair<std::size_t, std::size_t>> answer_units(cfg.n_videos); // 0-based, inclusive
    for (std::size_t vi = 0; vi < cfg.n_videos; ++vi) {
        const std::size_t span_len = 2 + rng.next_index(2); // 2 or 3 units
        const std::size_t latest_start = cfg.units_per_video - span_len;
        const std::size_t start = 1 + rng.next_index(latest_start); // never the first unit
        answer_units[vi] = {start, start + span_len - 1};
    }

    // Question i asks about video i % n_videos.
    std::vector<std::vector<std::string>> markers_per_video(cfg.n_videos);
    for (std::size_t qi = 0; qi < cfg.n_questions; ++qi) {
        markers_per_video[qi % cfg.n_videos].push_back("mark" + zero_pad(qi, 3));
    }

    for (std::size_t vi = 0; vi < cfg.n_videos; ++vi) {
        VideoDoc video;
        video.video_id = "vid" + zero_pad(vi, 3);
        video.duration = unit_seconds * static_cast<double>(cfg.units_per_video);
        const std::string topic = "topic" + zero_pad(vi, 3);
        const auto [span_begin, span_end] = answer_units[vi];
        for (std::size_t ui = 0; ui < cfg.units_per_video; ++ui) {
            SubtitleUnit unit;
            unit.index = ui + 1;
            unit.interval.start = unit_seconds * static_cast<double>(ui);
            unit.interval.end = unit_seconds * static_cast<double>(ui + 1);
            std::vector<std::string> words;
            words.push_back(topic);
            if (ui >= span_begin && ui <= span_end) {
                words.push_back("beacon");
                for (const std::string& m : markers_per_video[vi]) words.push_back(m);
            }
            while (words.size() < cfg.tokens_per_unit) {
                words.push_back("w" + zero_pad(rng.next_index(n_distractors), 4));
            }
            std::string text;
            for (std::size_t w = 0; w < words.size(); ++w) {
                if (w) text.push_back(' ');
                text += words[w];
            }
            unit.text = std::move(text);
            video.units.push_back(std::move(unit));
        }
        split.videos.emplace(video.video_id, std::move(video));
    }

    for (std::size_t qi = 0; qi < cfg.n_questions; ++qi) {
        const std::size_t vi = qi % cfg.n_videos;
        const std::string video_id = "vid" + zero_pad(vi, 3);
        const auto [span_begin, span_end] = answer_units[vi];
        QAInstance qa;
        qa.question_id = "q" + zero_pad(qi, 3);
        qa.video_id = video_id;
        qa.question = "how to locate topic" + zero_pad(vi, 3) + " beacon mark" + zero_pad(qi, 3);
        qa.answer.start = unit_seconds * static_cast<double>(span_begin);
        qa.answer.end = unit_seconds * static_cast<double>(span_end + 1);
        split.qa.push_back(std::move(qa));
    }
    return split;
}

SplitCorpora split_questions(const CorpusSplit& full, std::size_t n_train, std::size_t n_val) {
    if (n_train + n_val > full.qa.size()) {
        throw ValidationError("split_questions: train+val " + std::to_string(n_train + n_val) +
                              " exceeds " + std::to_string(full.qa.size()) + " questions");
    }
    SplitCorpora out;
    out.train.videos = full.videos;
    out.val.videos = full.videos;
    out.test.videos = full.videos;
    out.train.split_name = "train";
    out.val.split_name = "val";
    out.test.split_name = "test";
    for (std::size_t i = 0; i < full.qa.size(); ++i) {
        if (i < n_train) {
            out.train.qa.push_back(full.qa[i]);
        } else if (i < n_train + n_val) {
            out.val.qa.push_back(full.qa[i]);
        } else {
            out.test.qa.push_back(full.qa[i]);
        }
    }
    return out;
}

} // namespace ccgs
