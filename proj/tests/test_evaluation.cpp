#include <doctest.h>

#include <cmath>

#include "ccgs/error.hpp"
#include "ccgs/evaluation.hpp"
#include "ccgs/rng.hpp"

using namespace ccgs;

namespace {

// Independent interval overlap: union as hull minus the gap, not len+len-inter.
double oracle_iou(TimeInterval a, TimeInterval b) {
    const double gap = std::max(0.0, std::max(a.start, b.start) - std::min(a.end, b.end));
    const double hull = std::max(a.end, b.end) - std::min(a.start, b.start);
    const double uni = hull - gap;
    if (uni <= 0.0) return a.start == b.start && a.end == b.end ? 1.0 : 0.0;
    const double inter = std::min(a.end, b.end) - std::max(a.start, b.start);
    return inter <= 0.0 ? 0.0 : inter / uni;
}

Prediction ranked(const std::string& qid, const std::vector<std::string>& order) {
    Prediction p;
    p.question_id = qid;
    double score = static_cast<double>(order.size());
    for (const std::string& id : order) {
        p.ranking.push_back({id, {0, 0}, {0.0, 1.0}, score});
        score -= 1.0;
    }
    return p;
}

CorpusSplit tiny_corpus(std::uint64_t seed, std::size_t videos = 4, std::size_t questions = 4) {
    SynthConfig cfg;
    cfg.n_videos = videos;
    cfg.n_questions = questions;
    cfg.units_per_video = 5;
    cfg.tokens_per_unit = 4;
    return generate_synthetic_corpus(cfg, seed);
}

} // namespace

TEST_CASE("interval overlap: identity, disjoint, the 5/15 case, zero measure") {
    CHECK(iou({2, 9}, {2, 9}) == 1.0);
    CHECK(iou({0, 1}, {2, 3}) == 0.0);
    CHECK(iou({0, 10}, {5, 15}) == doctest::Approx(5.0 / 15.0).epsilon(1e-12));
    CHECK(iou({5, 5}, {5, 5}) == 1.0);
    CHECK(iou({5, 5}, {7, 7}) == 0.0);

    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        TimeInterval a{rng.next_real(0, 50), 0};
        a.end = a.start + rng.next_real(0, 20);
        TimeInterval b{rng.next_real(0, 50), 0};
        b.end = b.start + rng.next_real(0, 20);
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(ab == doctest::Approx(oracle_iou(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("retrieval: perfect ranks, the 1-2-4 closed form, rank 6 thresholds") {
    std::map<std::string, std::string> gold = {{"q1", "a"}, {"q2", "a"}, {"q3", "a"}};

    std::vector<Prediction> perfect = {ranked("q1", {"a", "b"}), ranked("q2", {"a", "b"}),
                                       ranked("q3", {"a", "b"})};
    RetrievalMetrics m = retrieval_metrics(perfect, gold);
    CHECK(m.mrr == 100.0);
    CHECK(m.r1 == 100.0);
    CHECK(m.r10 == 100.0);

    std::vector<Prediction> mixed = {
            ranked("q1", {"a", "b", "c", "d"}),
            ranked("q2", {"b", "a", "c", "d"}),
            ranked("q3", {"b", "c", "d", "a"}),
    };
    m = retrieval_metrics(mixed, gold);
    CHECK(m.mrr == doctest::Approx(100.0 * (1.0 + 0.5 + 0.25) / 3.0).epsilon(1e-12));
    CHECK(m.r1 == doctest::Approx(100.0 / 3.0).epsilon(1e-12));

    std::vector<Prediction> deep = {ranked("q1", {"b", "c", "d", "e", "f", "a", "g"})};
    m = retrieval_metrics(deep, {{"q1", "a"}});
    CHECK(m.r5 == 0.0);
    CHECK(m.r10 == 100.0);

    CHECK_THROWS_WITH_AS(retrieval_metrics(perfect, {{"q1", "a"}}),
                         doctest::Contains("no gold video"), ValidationError);
}

TEST_CASE("localization: rank-1 credit and the outside-top-k rule") {
    QAInstance qa;
    qa.question_id = "q1";
    qa.video_id = "a";
    qa.answer = {0.0, 1.0};
    std::map<std::string, QAInstance> gold = {{"q1", qa}};

    Prediction hit = ranked("q1", {"a", "b"}); // predicted interval equals the answer
    LocalizationRow row = localization_metrics({hit}, gold, 1);
    CHECK(row.iou_07 == 100.0);
    CHECK(row.miou == 100.0);

    Prediction miss = ranked("q1", {"b", "a"}); // gold video only at rank 2
    row = localization_metrics({miss}, gold, 1);
    CHECK(row.iou_03 == 0.0);
    CHECK(row.miou == 0.0);
    row = localization_metrics({miss}, gold, 2);
    CHECK(row.miou == 100.0);
}

TEST_CASE("metrics match an independent scorer on randomized instances") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n_videos = 2 + rng.next_index(5);
        const std::size_t n_questions = 1 + rng.next_index(8);

        std::vector<std::string> ids;
        for (std::size_t v = 0; v < n_videos; ++v) ids.push_back("v" + std::to_string(v));

        std::vector<Prediction> preds;
        std::map<std::string, std::string> gold_video;
        std::map<std::string, QAInstance> gold;
        for (std::size_t q = 0; q < n_questions; ++q) {
            Prediction p;
            p.question_id = "q" + std::to_string(q);
            std::vector<std::string> pool = ids;
            double score = 100.0;
            while (!pool.empty()) {
                const std::size_t pick = rng.next_index(pool.size());
                TimeInterval span{rng.next_real(0, 30), 0};
                span.end = span.start + rng.next_real(0, 10);
                p.ranking.push_back({pool[pick], {0, 0}, span, score});
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
                score -= rng.next_real(0.1, 2.0);
            }
            preds.push_back(p);

            QAInstance qa;
            qa.question_id = p.question_id;
            qa.video_id = ids[rng.next_index(ids.size())];
            qa.answer = {rng.next_real(0, 30), 0};
            qa.answer.end = qa.answer.start + rng.next_real(0, 10);
            gold_video[qa.question_id] = qa.video_id;
            gold[qa.question_id] = qa;
        }

        // Brute-force retrieval: literal definition, one pass per question.
        double rr = 0, h1 = 0, h5 = 0, h10 = 0;
        for (const Prediction& p : preds) {
            std::size_t rank = 0;
            for (std::size_t i = 0; i < p.ranking.size(); ++i) {
                if (p.ranking[i].video_id == gold_video[p.question_id]) rank = i + 1;
            }
            if (rank > 0) rr += 1.0 / static_cast<double>(rank);
            if (rank >= 1 && rank <= 1) h1 += 1;
            if (rank >= 1 && rank <= 5) h5 += 1;
            if (rank >= 1 && rank <= 10) h10 += 1;
        }
        const double n = static_cast<double>(preds.size());
        RetrievalMetrics rm = retrieval_metrics(preds, gold_video);
        CHECK(std::abs(rm.mrr - 100.0 * rr / n) <= 1e-9);
        CHECK(std::abs(rm.r1 - 100.0 * h1 / n) <= 1e-9);
        CHECK(std::abs(rm.r5 - 100.0 * h5 / n) <= 1e-9);
        CHECK(std::abs(rm.r10 - 100.0 * h10 / n) <= 1e-9);

        for (std::size_t k : {1u, 2u, 3u, 10u}) {
            double b3 = 0, b5 = 0, b7 = 0, bsum = 0;
            for (const Prediction& p : preds) {
                const QAInstance& qa = gold[p.question_id];
                double v = 0;
                for (std::size_t i = 0; i < p.ranking.size() && i < k; ++i) {
                    if (p.ranking[i].video_id == qa.video_id) {
                        v = oracle_iou(p.ranking[i].interval, qa.answer);
                    }
                }
                if (v >= 0.3) b3 += 1;
                if (v >= 0.5) b5 += 1;
                if (v >= 0.7) b7 += 1;
                bsum += v;
            }
            LocalizationRow row = localization_metrics(preds, gold, k);
            CHECK(std::abs(row.iou_03 - 100.0 * b3 / n) <= 1e-9);
            CHECK(std::abs(row.iou_05 - 100.0 * b5 / n) <= 1e-9);
            CHECK(std::abs(row.iou_07 - 100.0 * b7 / n) <= 1e-9);
            CHECK(std::abs(row.miou - 100.0 * bsum / n) <= 1e-9);
        }
    }
}

TEST_CASE("bm25: idf closed form and single-holder dominance") {
    CorpusSplit corpus;
    corpus.split_name = "train";
    VideoDoc a;
    a.video_id = "a";
    a.duration = 4;
    a.units = {{1, "apple banana", {0, 4}}};
    VideoDoc b;
    b.video_id = "b";
    b.duration = 4;
    b.units = {{1, "banana cherry", {0, 4}}};
    corpus.videos = {{"a", a}, {"b", b}};

    Bm25Index index = bm25_build(corpus);
    CHECK(index.n_videos == 2);
    CHECK(bm25_idf(index, "apple") == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bm25_idf(index, "banana") ==
          doctest::Approx(std::log((2 - 2 + 0.5) / (2 + 0.5) + 1)).epsilon(1e-12));

    auto order = bm25_rank("where is the apple", index);
    REQUIRE(order.size() == 2);
    CHECK(order[0].first == "a");
    CHECK(order[0].second > order[1].second);

    CHECK_THROWS_AS(bm25_build(CorpusSplit{}), ValidationError);
}

TEST_CASE("bm25 retrieves every synthetic question's video first") {
    CorpusSplit corpus = tiny_corpus(5, 8, 16);
    Bm25Index index = bm25_build(corpus);
    for (const QAInstance& qa : corpus.qa) {
        auto order = bm25_rank(qa.question, index);
        REQUIRE(!order.empty());
        CHECK(order[0].first == qa.video_id);
    }
}

TEST_CASE("ranking covers every video with decodable spans") {
    CorpusSplit corpus = tiny_corpus(9);
    ModelConfig cfg;
    cfg.d = 8;
    cfg.d_v = 4;
    cfg.seed = 21;
    ParameterSet params;
    register_model_params(params, cfg);
    SpanMapCache maps(cfg.max_length);

    Prediction pred = rank_videos(corpus.qa.front(), corpus, params, cfg, maps);
    CHECK(pred.ranking.size() == corpus.videos.size());
    for (std::size_t i = 0; i < pred.ranking.size(); ++i) {
        const RankedVideo& rv = pred.ranking[i];
        CHECK(rv.span.y <= rv.span.x);
        CHECK(rv.interval.start <= rv.interval.end);
        CHECK(rv.interval.end <= corpus.video(rv.video_id).duration);
        if (i > 0) CHECK(pred.ranking[i - 1].score >= rv.score);
    }
}

TEST_CASE("ranking never reads the question's gold video label") {
    CorpusSplit corpus = tiny_corpus(9);
    ModelConfig cfg;
    cfg.d = 8;
    cfg.d_v = 4;
    cfg.seed = 21;
    ParameterSet params;
    register_model_params(params, cfg);
    SpanMapCache maps(cfg.max_length);

    for (EvalMode mode : {EvalMode::ccgs, EvalMode::bm25_ccgs_span}) {
        QAInstance qa = corpus.qa.front();
        Prediction with_label = rank_videos(qa, corpus, params, cfg, maps, mode);
        qa.video_id = "vid003"; // deliberately wrong gold label
        qa.answer = {0.0, 1.0};
        Prediction without = rank_videos(qa, corpus, params, cfg, maps, mode);
        REQUIRE(with_label.ranking.size() == without.ranking.size());
        for (std::size_t i = 0; i < with_label.ranking.size(); ++i) {
            CHECK(with_label.ranking[i].video_id == without.ranking[i].video_id);
            CHECK(with_label.ranking[i].score == without.ranking[i].score);
            CHECK(with_label.ranking[i].span == without.ranking[i].span);
        }
    }
}

TEST_CASE("full report: monotone in k, sane ranges, bm25 pipeline retrieves perfectly") {
    CorpusSplit corpus = tiny_corpus(11, 5, 6);
    ModelConfig cfg;
    cfg.d = 8;
    cfg.d_v = 4;
    cfg.seed = 23;
    ParameterSet params;
    register_model_params(params, cfg);

    MetricsReport rep = evaluate(corpus, params, cfg);
    CHECK(rep.n_questions == 6);
    CHECK(rep.retrieval.r1 <= rep.retrieval.r5);
    CHECK(rep.retrieval.r5 <= rep.retrieval.r10);
    REQUIRE(rep.by_k.count(1) == 1);
    REQUIRE(rep.by_k.count(10) == 1);
    CHECK(rep.by_k.at(1).miou <= rep.by_k.at(10).miou);
    CHECK(rep.by_k.at(10).miou <= rep.by_k.at(100).miou);
    for (const auto& [k, row] : rep.by_k) {
        (void)k;
        for (double v : {row.iou_03, row.iou_05, row.iou_07, row.miou}) {
            CHECK(v >= 0.0);
            CHECK(v <= 100.0);
        }
        CHECK(row.iou_03 >= row.iou_05);
        CHECK(row.iou_05 >= row.iou_07);
    }

    MetricsReport piped = evaluate(corpus, params, cfg, EvalMode::bm25_ccgs_span);
    CHECK(piped.retrieval.r1 == 100.0); // unique topic tokens make BM25 exact here
    CHECK(piped.retrieval.mrr == 100.0);
}

TEST_CASE("report round-trips through json and csv") {
    MetricsReport rep;
    rep.retrieval = {58.333333333333336, 33.33, 66.67, 100.0};
    rep.n_questions = 3;
    rep.by_k[1] = {10.5, 7.25, 3.125, 21.875};
    rep.by_k[10] = {30.0, 20.0, 10.0, 40.0};
    rep.by_k[100] = {30.0, 20.0, 10.0, 41.5};

    MetricsReport via_json = MetricsReport::from_json(rep.to_json());
    CHECK(via_json.retrieval.mrr == rep.retrieval.mrr);
    CHECK(via_json.by_k.at(1).miou == rep.by_k.at(1).miou);
    CHECK(via_json.n_questions == 3);

    MetricsReport via_csv = MetricsReport::from_csv(rep.to_csv());
    CHECK(via_csv.retrieval.mrr == rep.retrieval.mrr);
    CHECK(via_csv.retrieval.r10 == rep.retrieval.r10);
    CHECK(via_csv.by_k.at(100).miou == rep.by_k.at(100).miou);
    CHECK(via_csv.n_questions == 3);

    CHECK_THROWS_AS(MetricsReport::from_csv("nope\n"), FormatError);
    CHECK_THROWS_AS(MetricsReport::from_csv("metric,k,value\nmrr,,abc\n"), FormatError);
    CHECK_THROWS_AS(MetricsReport::from_json(nlohmann::json{{"mrr", 1.0}}), FormatError);
}
