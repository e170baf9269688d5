#include "ccgs/run_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <utility>

#include "ccgs/error.hpp"

namespace ccgs {
namespace {

using nlohmann::json;

/// One addressable field: a dotted path plus typed set/get closures.
struct Field {
    std::string path;
    std::function<void(RunConfig&, const json&)> set;
    std::function<json(const RunConfig&)> get;
};

std::uint64_t as_uint(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) {
        throw ConfigError(path + ": expected a non-negative integer, got " + v.dump());
    }
    return v.get<std::uint64_t>();
}

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number, got " + v.dump());
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path + ": expected a finite number");
    return d;
}

// `ref` is a generic accessor lambda, usable on both const and mutable
// configs, returning a reference to the field.
template <typename Accessor>
Field uint_field(std::string path, Accessor ref) {
    Field f;
    f.path = path;
    f.set = [path, ref](RunConfig& c, const json& v) {
        auto& slot = ref(c);
        slot = static_cast<std::remove_reference_t<decltype(slot)>>(as_uint(v, path));
    };
    f.get = [ref](const RunConfig& c) { return json(ref(c)); };
    return f;
}

template <typename Accessor>
Field double_field(std::string path, Accessor ref) {
    Field f;
    f.path = path;
    f.set = [path, ref](RunConfig& c, const json& v) { ref(c) = as_double(v, path); };
    f.get = [ref](const RunConfig& c) { return json(ref(c)); };
    return f;
}

template <typename Accessor>
Field bool_field(std::string path, Accessor ref) {
    Field f;
    f.path = path;
    f.set = [path, ref](RunConfig& c, const json& v) {
        if (!v.is_boolean()) throw ConfigError(path + ": expected true or false, got " + v.dump());
        ref(c) = v.get<bool>();
    };
    f.get = [ref](const RunConfig& c) { return json(ref(c)); };
    return f;
}

template <typename Enum, typename Accessor>
Field choice_field(std::string path, Accessor ref,
                   std::vector<std::pair<std::string, Enum>> choices) {
    Field f;
    f.path = path;
    f.set = [path, ref, choices](RunConfig& c, const json& v) {
        if (v.is_string()) {
            const std::string name = v.get<std::string>();
            for (const auto& [label, value] : choices) {
                if (label == name) {
                    ref(c) = value;
                    return;
                }
            }
        }
        std::string valid;
        for (const auto& [label, value] : choices) {
            if (!valid.empty()) valid += " | ";
            valid += label;
        }
        throw ConfigError(path + ": expected one of " + valid + ", got " + v.dump());
    };
    f.get = [ref, choices](const RunConfig& c) {
        for (const auto& [label, value] : choices) {
            if (ref(c) == value) return json(label);
        }
        return json(); // unreachable: every enum value is in the table
    };
    return f;
}

Field rank_budget_field() {
    Field f;
    f.path = "eval.k_list";
    f.set = [](RunConfig& c, const json& v) {
        if (!v.is_array() || v.empty()) {
            throw ConfigError("eval.k_list: expected a non-empty array of rank budgets");
        }
        std::vector<std::size_t> ks;
        for (const auto& item : v) {
            std::uint64_t k = as_uint(item, "eval.k_list");
            if (k < 1) throw ConfigError("eval.k_list: rank budgets start at 1");
            ks.push_back(static_cast<std::size_t>(k));
        }
        c.k_list = std::move(ks);
    };
    f.get = [](const RunConfig& c) { return json(c.k_list); };
    return f;
}

Field thresholds_field() {
    Field f;
    f.path = "eval.thresholds";
    f.set = [](RunConfig& c, const json& v) {
        // The report format carries named columns for exactly these three
        // thresholds, so anything else would silently mislabel them.
        const std::vector<double> fixed = {0.3, 0.5, 0.7};
        std::vector<double> got;
        if (v.is_array()) {
            for (const auto& item : v) got.push_back(as_double(item, "eval.thresholds"));
        }
        if (got != fixed) {
            throw ConfigError("eval.thresholds: the metric battery is fixed at [0.3,0.5,0.7], got " +
                              v.dump());
        }
        c.thresholds = fixed;
    };
    f.get = [](const RunConfig& c) { return json(c.thresholds); };
    return f;
}

const std::vector<Field>& field_table() {
    static const std::vector<Field> table = [] {
        std::vector<Field> t;
        t.push_back(uint_field("model.d", [](auto& c) -> auto& { return c.model.d; }));
        t.push_back(uint_field("model.d_v", [](auto& c) -> auto& { return c.model.d_v; }));
        t.push_back(uint_field("model.buckets", [](auto& c) -> auto& { return c.model.buckets; }));
        t.push_back(double_field("model.fps", [](auto& c) -> auto& { return c.model.fps; }));
        t.push_back(uint_field("model.seed", [](auto& c) -> auto& { return c.model.seed; }));
        t.push_back(bool_field("model.text_self_attention",
                               [](auto& c) -> auto& { return c.model.text_self_attention; }));
        t.push_back(choice_field<Similarity>(
            "model.similarity", [](auto& c) -> auto& { return c.model.similarity; },
            {{"dot", Similarity::dot}, {"trilinear", Similarity::trilinear}}));
        t.push_back(double_field("model.dropout_p", [](auto& c) -> auto& { return c.model.dropout_p; }));
        t.push_back(choice_field<PositionForm>(
            "model.position_form", [](auto& c) -> auto& { return c.model.position_form; },
            {{"sinusoid", PositionForm::sinusoid}, {"learned", PositionForm::learned}}));
        t.push_back(
            uint_field("model.max_positions", [](auto& c) -> auto& { return c.model.max_positions; }));
        t.push_back(uint_field("model.max_length", [](auto& c) -> auto& { return c.model.max_length; }));

        t.push_back(uint_field("train.steps", [](auto& c) -> auto& { return c.train.steps; }));
        t.push_back(uint_field("train.batch_size", [](auto& c) -> auto& { return c.train.batch_size; }));
        t.push_back(uint_field("train.m", [](auto& c) -> auto& { return c.train.M; }));
        t.push_back(double_field("train.lr", [](auto& c) -> auto& { return c.train.lr; }));
        t.push_back(
            double_field("train.weight_decay", [](auto& c) -> auto& { return c.train.weight_decay; }));
        t.push_back(uint_field("train.seed", [](auto& c) -> auto& { return c.train.seed; }));
        t.push_back(choice_field<NegativeStrategy>(
            "train.negative_strategy", [](auto& c) -> auto& { return c.train.negative_strategy; },
            {{"uniform", NegativeStrategy::uniform}, {"bm25_hard", NegativeStrategy::bm25_hard}}));
        t.push_back(uint_field("train.val_every", [](auto& c) -> auto& { return c.train.val_every; }));

        t.push_back(uint_field("synth.n_videos", [](auto& c) -> auto& { return c.synth.n_videos; }));
        t.push_back(uint_field("synth.units_per_video",
                               [](auto& c) -> auto& { return c.synth.units_per_video; }));
        t.push_back(uint_field("synth.tokens_per_unit",
                               [](auto& c) -> auto& { return c.synth.tokens_per_unit; }));
        t.push_back(uint_field("synth.vocab_size", [](auto& c) -> auto& { return c.synth.vocab_size; }));
        t.push_back(
            uint_field("synth.n_questions", [](auto& c) -> auto& { return c.synth.n_questions; }));
        t.push_back(uint_field("synth.n_train", [](auto& c) -> auto& { return c.n_train; }));
        t.push_back(uint_field("synth.n_val", [](auto& c) -> auto& { return c.n_val; }));

        t.push_back(choice_field<EvalMode>(
            "eval.mode", [](auto& c) -> auto& { return c.mode; },
            {{"ccgs", EvalMode::ccgs}, {"bm25_ccgs_span", EvalMode::bm25_ccgs_span}}));
        t.push_back(rank_budget_field());
        t.push_back(thresholds_field());
        return t;
    }();
    return table;
}

const Field& find_field(const std::string& path) {
    for (const Field& f : field_table()) {
        if (f.path == path) return f;
    }
    throw ConfigError("unknown config key '" + path + "'");
}

} // namespace

std::vector<std::string> run_config_keys() {
    std::vector<std::string> keys;
    for (const Field& f : field_table()) keys.push_back(f.path);
    return keys;
}

RunConfig parse_run_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    RunConfig cfg;
    for (const auto& [group, body] : j.items()) {
        if (!body.is_object()) {
            throw ConfigError("config group '" + group + "' must be an object of fields");
        }
        for (const auto& [name, value] : body.items()) {
            find_field(group + "." + name).set(cfg, value);
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    return parse_run_config(j);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        value = text; // bare word: enum names, paths
    }
    find_field(path).set(cfg, value);
}

void set_run_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.model.seed = seed;
    cfg.train.seed = seed;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const Field& f : field_table()) {
        const std::size_t dot = f.path.find('.');
        j[f.path.substr(0, dot)][f.path.substr(dot + 1)] = f.get(cfg);
    }
    return j;
}

} // namespace ccgs
