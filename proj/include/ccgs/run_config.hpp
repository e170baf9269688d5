#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccgs/corpus.hpp"
#include "ccgs/evaluation.hpp"
#include "ccgs/training.hpp"

namespace ccgs {

/// Everything one command needs, merged from defaults, an optional JSON
/// config file, and dotted-path overrides. Every field is addressable as
/// "group.name" (e.g. "train.lr", "model.d"); unknown keys are rejected so a
/// typo cannot silently fall back to a default.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    SynthConfig synth;
    std::size_t n_train = 24; // synthetic split sizes; test takes the rest
    std::size_t n_val = 4;
    EvalMode mode = EvalMode::ccgs;
    std::vector<std::size_t> k_list = {1, 10, 100};
    std::vector<double> thresholds = {0.3, 0.5, 0.7};
};

/// Every addressable dotted path, in table order.
std::vector<std::string> run_config_keys();

/// Builds a config from a file's parsed JSON ({"train": {"lr": ...}, ...}).
/// Groups and fields may be omitted; unknown ones throw ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);

/// Reads and parses a config file. Throws ConfigError for unreadable files or
/// invalid JSON.
RunConfig load_run_config(const std::string& path);

/// Applies one "group.name=value" override in place. The value uses JSON
/// syntax ("0.001", "false", "[1,10]"); a bare word is taken as a string so
/// enum names need no quotes.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Points every seeded stage (parameter init, batch sampling, dropout) at one
/// run-level seed.
void set_run_seed(RunConfig& cfg, std::uint64_t seed);

/// The effective config as grouped JSON, for echoing into an output
/// directory. parse_run_config inverts it exactly.
nlohmann::json run_config_to_json(const RunConfig& cfg);

} // namespace ccgs
