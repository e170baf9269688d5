#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccgs/corpus.hpp"
#include "ccgs/model.hpp"

namespace ccgs {

/// One candidate video's scored answer for a question.
struct RankedVideo {
    std::string video_id;
    SpanPoint span;
    TimeInterval interval;
    double score = 0.0;
};

/// All candidate videos for one question, best first. Ties in score break
/// toward the lexicographically smaller video id.
struct Prediction {
    std::string question_id;
    std::vector<RankedVideo> ranking;
};

/// Okapi term statistics over each video's subtitle tokens.
struct Bm25Index {
    std::map<std::string, std::map<std::string, std::size_t>> term_freq; // video -> term -> tf
    std::map<std::string, std::size_t> doc_freq;                         // term -> videos containing it
    std::map<std::string, std::size_t> doc_len;                          // video -> token count
    double avg_doc_len = 0.0;
    std::size_t n_videos = 0;
    double k1 = 1.2;
    double b = 0.75;
};

Bm25Index bm25_build(const CorpusSplit& corpus, double k1 = 1.2, double b = 0.75);

double bm25_idf(const Bm25Index& index, const std::string& term);

/// All videos scored against the question, best first; score ties break
/// toward the smaller video id. Unknown query terms contribute nothing.
std::vector<std::pair<std::string, double>> bm25_rank(const std::string& question,
                                                      const Bm25Index& index);

/// How the ranking score of each candidate video is produced. Spans always
/// come from the span matrix decode of the gold-capable scorer.
enum class EvalMode { ccgs, bm25_ccgs_span };

/// Scores every video in the corpus for one question: builds the span matrix,
/// decodes the best span, and ranks videos by the winning logit (ccgs mode)
/// or by BM25 (pipeline mode).
Prediction rank_videos(const QAInstance& qa, const CorpusSplit& corpus, const ParameterSet& params,
                       const ModelConfig& cfg, SpanMapCache& maps, EvalMode mode = EvalMode::ccgs,
                       const Bm25Index* bm25 = nullptr);

/// Intersection over union of two time intervals. A zero-measure union is 1
/// for identical points and 0 otherwise.
double iou(TimeInterval a, TimeInterval b);

struct RetrievalMetrics {
    double mrr = 0.0;
    double r1 = 0.0;
    double r5 = 0.0;
    double r10 = 0.0;
};

/// MRR and recall@k over the gold video, as percentages.
RetrievalMetrics retrieval_metrics(const std::vector<Prediction>& preds,
                                   const std::map<std::string, std::string>& gold_video);

struct LocalizationRow {
    double iou_03 = 0.0;
    double iou_05 = 0.0;
    double iou_07 = 0.0;
    double miou = 0.0;
};

/// Span quality at rank budget k: a question scores the IoU between the gold
/// interval and the span decoded in the gold video, but only when the gold
/// video made the top k; otherwise it scores 0. Rates are percentages.
LocalizationRow localization_metrics(const std::vector<Prediction>& preds,
                                     const std::map<std::string, QAInstance>& gold,
                                     std::size_t k);

struct MetricsReport {
    RetrievalMetrics retrieval;
    std::map<std::size_t, LocalizationRow> by_k; // rank budgets, e.g. {1, 10, 100}
    std::size_t n_questions = 0;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
    /// One "metric,k,value" row per number; retrieval rows leave k empty.
    std::string to_csv() const;
    static MetricsReport from_csv(const std::string& csv);
};

/// Full metric battery over a split.
MetricsReport evaluate(const CorpusSplit& split, const ParameterSet& params, const ModelConfig& cfg,
                       EvalMode mode = EvalMode::ccgs,
                       const std::vector<std::size_t>& k_list = {1, 10, 100});

} // namespace ccgs
