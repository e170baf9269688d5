#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ccgs/evaluation.hpp"
#include "ccgs/model.hpp"

namespace ccgs {

enum class NegativeStrategy { uniform, bm25_hard };

struct TrainConfig {
    std::size_t steps = 500;
    std::size_t batch_size = 2;   // QA instances per step
    std::size_t M = 1;            // negative videos per instance
    double lr = 1e-5;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    NegativeStrategy negative_strategy = NegativeStrategy::uniform;
    std::size_t val_every = 50;   // 0: validate only after the last step
};

struct BatchItem {
    const QAInstance* qa = nullptr;
    const VideoDoc* positive = nullptr;
    std::vector<const VideoDoc*> negatives;
    SpanPoint gold; // span point of the answer in the positive's label map
};

struct TrainingBatch {
    std::vector<BatchItem> items;
};

/// Draws batches as a pure function of (seed, step), so a resumed run replays
/// the exact sequence an uninterrupted run would have seen.
class Sampler {
public:
    Sampler(const CorpusSplit& split, const TrainConfig& cfg);
    TrainingBatch batch_for_step(std::size_t step, SpanMapCache& maps) const;

private:
    const CorpusSplit* split_;
    TrainConfig cfg_;
    std::vector<const VideoDoc*> videos_; // id order
    // Per QA instance, the BM25-best wrong videos (only for bm25_hard).
    std::vector<std::vector<const VideoDoc*>> hard_negatives_;
};

struct StepStats {
    double loss = 0.0;
    double loss1 = 0.0;
    double loss2 = 0.0;
};

/// One joint update: forward the positive and every negative under shared
/// parameters, average both losses over the batch, backprop, AdamW step.
StepStats train_step(ParameterSet& params, const TrainingBatch& batch, const ModelConfig& mcfg,
                     const TrainConfig& tcfg, SpanMapCache& maps);

struct FitOptions {
    std::ostream* log = nullptr;       // JSON-lines sink, one record per step
    std::string checkpoint_path;       // best-on-validation checkpoint, if non-empty
};

struct FitResult {
    double best_val_miou = 0.0;
    std::uint64_t best_step = 0;
    std::uint64_t steps_run = 0;
};

/// Trains until params.step() reaches cfg.steps, validating periodically on
/// Rank@1 mIoU. `params` ends at the last step's state (so calling fit again
/// with a larger step budget continues exactly where an uninterrupted run
/// would be); the best-on-validation state is what goes to checkpoint_path.
FitResult fit(ParameterSet& params, const CorpusSplit& train, const CorpusSplit& val,
              const ModelConfig& mcfg, const TrainConfig& tcfg, const FitOptions& opts = {});

} // namespace ccgs
