#include "ccgs/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ccgs/error.hpp"

namespace ccgs {

Bm25Index bm25_build(const CorpusSplit& corpus, double k1, double b) {
    if (corpus.videos.empty()) throw ValidationError("bm25_build: corpus has no videos");
    Bm25Index index;
    index.k1 = k1;
    index.b = b;
    index.n_videos = corpus.videos.size();

    std::size_t total_len = 0;
    for (const auto& [id, video] : corpus.videos) {
        auto& tf = index.term_freq[id];
        std::size_t len = 0;
        for (const SubtitleUnit& unit : video.units) {
            for (const std::string& tok : tokenize(unit.text)) {
                ++tf[tok];
                ++len;
            }
        }
        index.doc_len[id] = len;
        total_len += len;
        for (const auto& [term, count] : tf) {
            (void)count;
            ++index.doc_freq[term];
        }
    }
    index.avg_doc_len = static_cast<double>(total_len) / static_cast<double>(index.n_videos);
    return index;
}

double bm25_idf(const Bm25Index& index, const std::string& term) {
    const auto it = index.doc_freq.find(term);
    const double df = it == index.doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    const double n = static_cast<double>(index.n_videos);
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

std::vector<std::pair<std::string, double>> bm25_rank(const std::string& question,
                                                      const Bm25Index& index) {
    const std::vector<std::string> terms = tokenize(question);
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(index.term_freq.size());
    for (const auto& [id, tf_map] : index.term_freq) {
        const double dl = static_cast<double>(index.doc_len.at(id));
        const double norm = index.k1 * (1.0 - index.b + index.b * dl / index.avg_doc_len);
        double score = 0.0;
        for (const std::string& term : terms) {
            const auto it = tf_map.find(term);
            if (it == tf_map.end()) continue;
            const double tf = static_cast<double>(it->second);
            score += bm25_idf(index, term) * tf * (index.k1 + 1.0) / (tf + norm);
        }
        scored.emplace_back(id, score);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b2) {
        if (a.second != b2.second) return a.second > b2.second;
        return a.first < b2.first;
    });
    return scored;
}

Prediction rank_videos(const QAInstance& qa, const CorpusSplit& corpus, const ParameterSet& params,
                       const ModelConfig& cfg, SpanMapCache& maps, EvalMode mode,
                       const Bm25Index* bm25) {
    if (corpus.videos.empty()) throw ValidationError("rank_videos: corpus has no videos");

    Bm25Index local;
    std::map<std::string, double> bm25_scores;
    if (mode == EvalMode::bm25_ccgs_span) {
        if (bm25 == nullptr) {
            local = bm25_build(corpus);
            bm25 = &local;
        }
        for (const auto& [id, score] : bm25_rank(qa.question, *bm25)) bm25_scores[id] = score;
    }

    const std::vector<std::string> tokens = tokenize(qa.question);
    Prediction pred;
    pred.question_id = qa.question_id;
    for (const auto& [id, video] : corpus.videos) {
        const SpanLabelMap& map = maps.get(video);
        Tape tape;
        BoundParams bound = bind_params(tape, params);
        GlobalSpanMatrix matrix = score_pair(bound, tokens, video, map, cfg, false, 0);
        DecodedSpan best = decode_span(matrix);
        RankedVideo entry;
        entry.video_id = id;
        entry.span = {best.y, best.x};
        entry.interval = span_to_time(map, entry.span);
        entry.score = mode == EvalMode::ccgs ? best.score : bm25_scores.at(id);
        pred.ranking.push_back(std::move(entry));
    }
    std::sort(pred.ranking.begin(), pred.ranking.end(), [](const RankedVideo& a, const RankedVideo& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.video_id < b.video_id;
    });
    return pred;
}

double iou(TimeInterval a, TimeInterval b) {
    const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
    const double uni = (a.end - a.start) + (b.end - b.start) - inter;
    if (uni <= 0.0) return a.start == b.start && a.end == b.end ? 1.0 : 0.0;
    return inter / uni;
}

namespace {

// 1-based rank of the gold video, or 0 when it never appears.
std::size_t gold_rank(const Prediction& pred, const std::string& gold_video) {
    for (std::size_t i = 0; i < pred.ranking.size(); ++i) {
        if (pred.ranking[i].video_id == gold_video) return i + 1;
    }
    return 0;
}

} // namespace

RetrievalMetrics retrieval_metrics(const std::vector<Prediction>& preds,
                                   const std::map<std::string, std::string>& gold_video) {
    if (preds.empty()) throw ValidationError("retrieval_metrics: no predictions");
    double rr = 0, hit1 = 0, hit5 = 0, hit10 = 0;
    for (const Prediction& pred : preds) {
        const auto it = gold_video.find(pred.question_id);
        if (it == gold_video.end()) {
            throw ValidationError("retrieval_metrics: no gold video for question '" +
                                  pred.question_id + "'");
        }
        const std::size_t rank = gold_rank(pred, it->second);
        if (rank == 0) continue;
        rr += 1.0 / static_cast<double>(rank);
        hit1 += rank <= 1;
        hit5 += rank <= 5;
        hit10 += rank <= 10;
    }
    const double n = static_cast<double>(preds.size());
    return {100.0 * rr / n, 100.0 * hit1 / n, 100.0 * hit5 / n, 100.0 * hit10 / n};
}

LocalizationRow localization_metrics(const std::vector<Prediction>& preds,
                                     const std::map<std::string, QAInstance>& gold,
                                     std::size_t k) {
    if (preds.empty()) throw ValidationError("localization_metrics: no predictions");
    double h3 = 0, h5 = 0, h7 = 0, total = 0;
    for (const Prediction& pred : preds) {
        const auto it = gold.find(pred.question_id);
        if (it == gold.end()) {
            throw ValidationError("localization_metrics: no gold answer for question '" +
                                  pred.question_id + "'");
        }
        const std::size_t rank = gold_rank(pred, it->second.video_id);
        double v = 0.0;
        if (rank != 0 && rank <= k) {
            v = iou(pred.ranking[rank - 1].interval, it->second.answer);
        }
        h3 += v >= 0.3;
        h5 += v >= 0.5;
        h7 += v >= 0.7;
        total += v;
    }
    const double n = static_cast<double>(preds.size());
    return {100.0 * h3 / n, 100.0 * h5 / n, 100.0 * h7 / n, 100.0 * total / n};
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j;
    j["mrr"] = retrieval.mrr;
    j["r1"] = retrieval.r1;
    j["r5"] = retrieval.r5;
    j["r10"] = retrieval.r10;
    j["n_questions"] = n_questions;
    nlohmann::json ranks = nlohmann::json::object();
    for (const auto& [k, row] : by_k) {
        nlohmann::json r;
        r["iou03"] = row.iou_03;
        r["iou05"] = row.iou_05;
        r["iou07"] = row.iou_07;
        r["miou"] = row.miou;
        ranks[std::to_string(k)] = r;
    }
    j["rank"] = ranks;
    return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport rep;
    try {
        rep.retrieval.mrr = j.at("mrr").get<double>();
        rep.retrieval.r1 = j.at("r1").get<double>();
        rep.retrieval.r5 = j.at("r5").get<double>();
        rep.retrieval.r10 = j.at("r10").get<double>();
        rep.n_questions = j.at("n_questions").get<std::size_t>();
        for (const auto& [key, r] : j.at("rank").items()) {
            LocalizationRow row;
            row.iou_03 = r.at("iou03").get<double>();
            row.iou_05 = r.at("iou05").get<double>();
            row.iou_07 = r.at("iou07").get<double>();
            row.miou = r.at("miou").get<double>();
            rep.by_k[static_cast<std::size_t>(std::stoull(key))] = row;
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("metrics json: ") + e.what());
    }
    return rep;
}

namespace {

std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string MetricsReport::to_csv() const {
    std::string out = "metric,k,value\n";
    out += "mrr,," + csv_number(retrieval.mrr) + "\n";
    out += "r1,," + csv_number(retrieval.r1) + "\n";
    out += "r5,," + csv_number(retrieval.r5) + "\n";
    out += "r10,," + csv_number(retrieval.r10) + "\n";
    out += "n_questions,," + std::to_string(n_questions) + "\n";
    for (const auto& [k, row] : by_k) {
        const std::string ks = std::to_string(k);
        out += "iou03," + ks + "," + csv_number(row.iou_03) + "\n";
        out += "iou05," + ks + "," + csv_number(row.iou_05) + "\n";
        out += "iou07," + ks + "," + csv_number(row.iou_07) + "\n";
        out += "miou," + ks + "," + csv_number(row.miou) + "\n";
    }
    return out;
}

MetricsReport MetricsReport::from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "metric,k,value") {
        throw FormatError("metrics csv: missing 'metric,k,value' header");
    }
    MetricsReport rep;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw FormatError("metrics csv: bad row '" + line + "'");
        }
        const std::string metric = line.substr(0, c1);
        const std::string ks = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string value = line.substr(c2 + 1);
        try {
            if (metric == "mrr") {
                rep.retrieval.mrr = std::stod(value);
            } else if (metric == "r1") {
                rep.retrieval.r1 = std::stod(value);
            } else if (metric == "r5") {
                rep.retrieval.r5 = std::stod(value);
            } else if (metric == "r10") {
                rep.retrieval.r10 = std::stod(value);
            } else if (metric == "n_questions") {
                rep.n_questions = static_cast<std::size_t>(std::stoull(value));
            } else if (metric == "iou03" || metric == "iou05" || metric == "iou07" ||
                       metric == "miou") {
                LocalizationRow& row = rep.by_k[static_cast<std::size_t>(std::stoull(ks))];
                if (metric == "iou03") row.iou_03 = std::stod(value);
                if (metric == "iou05") row.iou_05 = std::stod(value);
                if (metric == "iou07") row.iou_07 = std::stod(value);
                if (metric == "miou") row.miou = std::stod(value);
            } else {
                throw FormatError("metrics csv: unknown metric '" + metric + "'");
            }
        } catch (const std::invalid_argument&) {
            throw FormatError("metrics csv: bad number in row '" + line + "'");
        }
    }
    return rep;
}

MetricsReport evaluate(const CorpusSplit& split, const ParameterSet& params, const ModelConfig& cfg,
                       EvalMode mode, const std::vector<std::size_t>& k_list) {
    if (split.qa.empty()) throw ValidationError("evaluate: split has no questions");

    Bm25Index bm25;
    const Bm25Index* bm25_ptr = nullptr;
    if (mode == EvalMode::bm25_ccgs_span) {
        bm25 = bm25_build(split);
        bm25_ptr = &bm25;
    }

    SpanMapCache maps(cfg.max_length);
    std::vector<Prediction> preds;
    std::map<std::string, std::string> gold_video;
    std::map<std::string, QAInstance> gold;
    preds.reserve(split.qa.size());
    for (const QAInstance& qa : split.qa) {
        preds.push_back(rank_videos(qa, split, params, cfg, maps, mode, bm25_ptr));
        gold_video[qa.question_id] = qa.video_id;
        gold[qa.question_id] = qa;
    }

    MetricsReport rep;
    rep.retrieval = retrieval_metrics(preds, gold_video);
    rep.n_questions = split.qa.size();
    for (std::size_t k : k_list) rep.by_k[k] = localization_metrics(preds, gold, k);
    return rep;
}

} // namespace ccgs
