#include "ccgs/training.hpp"

#include <ostream>

#include <json.hpp>

#include "ccgs/checkpoint.hpp"
#include "ccgs/error.hpp"
#include "ccgs/rng.hpp"

namespace ccgs {

Sampler::Sampler(const CorpusSplit& split, const TrainConfig& cfg) : split_(&split), cfg_(cfg) {
    if (split.qa.empty()) throw ValidationError("sampler: split has no questions");
    if (split.videos.size() <= cfg.M) {
        throw ValidationError("sampler: " + std::to_string(split.videos.size()) +
                              " videos cannot supply " + std::to_string(cfg.M) +
                              " negatives per positive");
    }
    if (cfg.batch_size < 1) throw ConfigError("sampler: batch_size must be at least 1");
    for (const auto& [id, video] : split.videos) {
        (void)id;
        videos_.push_back(&video);
    }
    if (cfg.negative_strategy == NegativeStrategy::bm25_hard) {
        const Bm25Index index = bm25_build(split);
        hard_negatives_.reserve(split.qa.size());
        for (const QAInstance& qa : split.qa) {
            std::vector<const VideoDoc*> hard;
            for (const auto& [id, score] : bm25_rank(qa.question, index)) {
                (void)score;
                if (id == qa.video_id) continue;
                hard.push_back(&split.video(id));
                if (hard.size() == cfg.M) break;
            }
            hard_negatives_.push_back(std::move(hard));
        }
    }
}

TrainingBatch Sampler::batch_for_step(std::size_t step, SpanMapCache& maps) const {
    Rng rng(fnv1a(fnv1a(cfg_.seed, "batch"), static_cast<std::uint64_t>(step)));
    TrainingBatch batch;
    batch.items.reserve(cfg_.batch_size);
    for (std::size_t b = 0; b < cfg_.batch_size; ++b) {
        const std::size_t qi = rng.next_index(split_->qa.size());
        BatchItem item;
        item.qa = &split_->qa[qi];
        item.positive = &split_->video(item.qa->video_id);
        item.gold = time_to_span(maps.get(*item.positive), item.qa->answer);
        if (cfg_.negative_strategy == NegativeStrategy::bm25_hard) {
            item.negatives = hard_negatives_[qi];
        } else {
            while (item.negatives.size() < cfg_.M) {
                const VideoDoc* cand = videos_[rng.next_index(videos_.size())];
                if (cand == item.positive) continue;
                bool seen = false;
                for (const VideoDoc* n : item.negatives) seen = seen || n == cand;
                if (!seen) item.negatives.push_back(cand);
            }
        }
        batch.items.push_back(std::move(item));
    }
    return batch;
}

StepStats train_step(ParameterSet& params, const TrainingBatch& batch, const ModelConfig& mcfg,
                     const TrainConfig& tcfg, SpanMapCache& maps) {
    if (batch.items.empty()) throw ValidationError("train_step: empty batch");

    Tape tape;
    BoundParams bound = bind_params(tape, params);
    const std::uint64_t step_root =
            fnv1a(fnv1a(tcfg.seed, "dropout"), static_cast<std::uint64_t>(params.step()));

    Var l1_sum, l2_sum;
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
        const BatchItem& item = batch.items[i];
        const std::uint64_t item_root = fnv1a(step_root, static_cast<std::uint64_t>(i));
        const std::vector<std::string> tokens = tokenize(item.qa->question);

        GlobalSpanMatrix pos = score_pair(bound, tokens, *item.positive, maps.get(*item.positive),
                                          mcfg, true, fnv1a(item_root, std::uint64_t{0}));
        Var l1 = predictor_loss(flatten_matrix(pos), item.gold.y, item.gold.x, pos.r);

        std::vector<GlobalSpanMatrix> negs;
        negs.reserve(item.negatives.size());
        for (std::size_t j = 0; j < item.negatives.size(); ++j) {
            negs.push_back(score_pair(bound, tokens, *item.negatives[j],
                                      maps.get(*item.negatives[j]), mcfg, true,
                                      fnv1a(item_root, std::uint64_t{1 + j})));
        }
        Var l2 = contrastive_loss(contrastive_concat(pos, item.gold.y, item.gold.x, negs));

        l1_sum = i == 0 ? l1 : add(l1_sum, l1);
        l2_sum = i == 0 ? l2 : add(l2_sum, l2);
    }

    const double inv_b = 1.0 / static_cast<double>(batch.items.size());
    Var loss1 = mul_scalar(l1_sum, inv_b);
    Var loss2 = mul_scalar(l2_sum, inv_b);
    Var loss = total_loss(loss1, loss2);
    tape.backward(loss);

    AdamWConfig opt;
    opt.lr = tcfg.lr;
    opt.weight_decay = tcfg.weight_decay;
    params.adamw_step(collect_grads(bound), opt);

    return {tape.value(loss).item(), tape.value(loss1).item(), tape.value(loss2).item()};
}

namespace {

double rank1_miou(const CorpusSplit& val, const ParameterSet& params, const ModelConfig& mcfg) {
    return evaluate(val, params, mcfg, EvalMode::ccgs, {1}).by_k.at(1).miou;
}

} // namespace

FitResult fit(ParameterSet& params, const CorpusSplit& train, const CorpusSplit& val,
              const ModelConfig& mcfg, const TrainConfig& tcfg, const FitOptions& opts) {
    Sampler sampler(train, tcfg);
    SpanMapCache maps(mcfg.max_length);

    FitResult result;
    const std::uint64_t start_step = params.step();

    auto validate = [&](std::uint64_t step, auto& best_entries, std::uint64_t& best_at) {
        const double miou = rank1_miou(val, params, mcfg);
        if (opts.log != nullptr) {
            nlohmann::json line;
            line["step"] = step;
            line["event"] = "val";
            line["rank1_miou"] = miou;
            *opts.log << line.dump() << "\n";
        }
        if (miou > result.best_val_miou || best_at == std::uint64_t(-1)) {
            result.best_val_miou = miou;
            result.best_step = step;
            best_entries = params.entries();
            best_at = step;
        }
    };

    std::map<std::string, ParameterSet::Entry> best_entries;
    std::uint64_t best_at = std::uint64_t(-1);
    validate(start_step, best_entries, best_at);

    while (params.step() < tcfg.steps) {
        const std::size_t step_index = params.step();
        TrainingBatch batch = sampler.batch_for_step(step_index, maps);
        StepStats stats = train_step(params, batch, mcfg, tcfg, maps);
        if (opts.log != nullptr) {
            nlohmann::json line;
            line["step"] = params.step();
            line["loss"] = stats.loss;
            line["loss1"] = stats.loss1;
            line["loss2"] = stats.loss2;
            line["lr"] = tcfg.lr;
            line["seed"] = tcfg.seed;
            *opts.log << line.dump() << "\n";
        }
        const bool last = params.step() == tcfg.steps;
        if (last || (tcfg.val_every != 0 && params.step() % tcfg.val_every == 0)) {
            validate(params.step(), best_entries, best_at);
        }
    }

    if (!opts.checkpoint_path.empty()) {
        ParameterSet best;
        best.restore(std::move(best_entries), result.best_step);
        save_checkpoint(opts.checkpoint_path, best);
    }
    result.steps_run = tcfg.steps > start_step ? tcfg.steps - start_step : 0;
    return result;
}

} // namespace ccgs
