// Batch entry points: synthesize corpora, train, evaluate, predict, compare.
// Every command echoes its effective config into the output directory so a
// run is reproducible from the artifacts alone.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccgs/checkpoint.hpp"
#include "ccgs/error.hpp"
#include "ccgs/evaluation.hpp"
#include "ccgs/run_config.hpp"
#include "ccgs/training.hpp"

namespace {

using namespace ccgs;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    out << contents;
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
}

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory '" + out_dir + "': " + ec.message());
    }
}

void echo_config(const RunConfig& cfg, const std::string& out_dir) {
    write_file(out_dir + "/config.json", run_config_to_json(cfg).dump(2) + "\n");
}

CorpusSplit load_corpus_file(const std::string& path) { return parse_corpus(read_file(path)); }

/// Loads the checkpoint when given, otherwise registers fresh parameters so
/// the untrained model can still be exercised.
ParameterSet load_params(const std::string& checkpoint_path, const ModelConfig& mcfg) {
    ParameterSet params;
    if (checkpoint_path.empty()) {
        std::cerr << "note: no checkpoint given; using freshly initialized parameters (seed "
                  << mcfg.seed << ")\n";
        register_model_params(params, mcfg);
    } else {
        load_checkpoint(checkpoint_path, params);
    }
    return params;
}

void print_retrieval(const RetrievalMetrics& m) {
    std::printf("%-10s %7s %7s %7s %7s\n", "", "MRR", "R@1", "R@5", "R@10");
    std::printf("%-10s %7.2f %7.2f %7.2f %7.2f\n", "retrieval", m.mrr, m.r1, m.r5, m.r10);
}

void print_localization(const MetricsReport& rep) {
    std::printf("%-10s %9s %9s %9s %7s\n", "rank", "IoU>=0.3", "IoU>=0.5", "IoU>=0.7", "mIoU");
    for (const auto& [k, row] : rep.by_k) {
        std::printf("k=%-8zu %9.2f %9.2f %9.2f %7.2f\n", k, row.iou_03, row.iou_05, row.iou_07,
                    row.miou);
    }
}

int cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
    CorpusSplit full = generate_synthetic_corpus(cfg.synth, cfg.model.seed);
    SplitCorpora split = split_questions(full, cfg.n_train, cfg.n_val);
    ensure_out_dir(out_dir);
    echo_config(cfg, out_dir);
    write_file(out_dir + "/train.json", serialize_corpus(split.train));
    write_file(out_dir + "/val.json", serialize_corpus(split.val));
    write_file(out_dir + "/test.json", serialize_corpus(split.test));
    std::printf("wrote %s/{train,val,test}.json: %zu/%zu/%zu questions over %zu videos\n",
                out_dir.c_str(), split.train.qa.size(), split.val.qa.size(), split.test.qa.size(),
                full.videos.size());
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::vector<std::string>& corpus_paths,
              const std::string& out_dir) {
    CorpusSplit train = load_corpus_file(corpus_paths[0]);
    CorpusSplit val = load_corpus_file(corpus_paths[1]);
    ensure_out_dir(out_dir);
    echo_config(cfg, out_dir);

    ParameterSet params;
    register_model_params(params, cfg.model);

    std::ofstream log(out_dir + "/log.jsonl");
    if (!log) throw std::runtime_error("cannot write '" + out_dir + "/log.jsonl'");
    FitOptions opts;
    opts.log = &log;
    opts.checkpoint_path = out_dir + "/checkpoint.bin";
    FitResult res = fit(params, train, val, cfg.model, cfg.train, opts);

    std::printf("trained %llu steps; best val Rank@1 mIoU %.2f at step %llu\n",
                static_cast<unsigned long long>(res.steps_run), res.best_val_miou,
                static_cast<unsigned long long>(res.best_step));
    std::printf("artifacts: %s/{config.json,checkpoint.bin,log.jsonl}\n", out_dir.c_str());
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& corpus_path, const std::string& checkpoint_path,
             const std::string& out_dir) {
    CorpusSplit split = load_corpus_file(corpus_path);
    ParameterSet params = load_params(checkpoint_path, cfg.model);
    MetricsReport rep = evaluate(split, params, cfg.model, cfg.mode, cfg.k_list);

    std::printf("questions: %zu  mode: %s\n", rep.n_questions,
                cfg.mode == EvalMode::ccgs ? "ccgs" : "bm25_ccgs_span");
    print_retrieval(rep.retrieval);
    print_localization(rep);

    if (!out_dir.empty()) {
        ensure_out_dir(out_dir);
        echo_config(cfg, out_dir);
        write_file(out_dir + "/metrics.json", rep.to_json().dump(2) + "\n");
        write_file(out_dir + "/metrics.csv", rep.to_csv());
    }
    return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& corpus_path,
                const std::string& checkpoint_path, const std::string& question_id,
                const std::string& out_dir) {
    CorpusSplit split = load_corpus_file(corpus_path);
    const QAInstance* qa = nullptr;
    for (const QAInstance& candidate : split.qa) {
        if (candidate.question_id == question_id) {
            qa = &candidate;
            break;
        }
    }
    if (qa == nullptr) throw ValidationError("question '" + question_id + "' is not in the corpus");

    ParameterSet params = load_params(checkpoint_path, cfg.model);
    SpanMapCache maps(cfg.model.max_length);
    Prediction pred = rank_videos(*qa, split, params, cfg.model, maps, cfg.mode);

    nlohmann::json ranking = nlohmann::json::array();
    for (const RankedVideo& rv : pred.ranking) {
        ranking.push_back({{"video_id", rv.video_id},
                           {"start_s", rv.interval.start},
                           {"end_s", rv.interval.end},
                           {"score", rv.score}});
    }
    nlohmann::json out = {{"question_id", pred.question_id},
                          {"question", qa->question},
                          {"ranking", ranking}};
    std::printf("%s\n", out.dump(2).c_str());

    if (!out_dir.empty()) {
        ensure_out_dir(out_dir);
        echo_config(cfg, out_dir);
        write_file(out_dir + "/prediction.json", out.dump(2) + "\n");
    }
    return 0;
}

int cmd_compare(const RunConfig& cfg, const std::string& corpus_path,
                const std::string& checkpoint_path, const std::string& out_dir) {
    CorpusSplit split = load_corpus_file(corpus_path);
    ParameterSet params = load_params(checkpoint_path, cfg.model);
    MetricsReport direct = evaluate(split, params, cfg.model, EvalMode::ccgs, cfg.k_list);
    MetricsReport piped = evaluate(split, params, cfg.model, EvalMode::bm25_ccgs_span, cfg.k_list);
    const std::size_t k1 = *cfg.k_list.begin();
    const LocalizationRow& direct_loc = direct.by_k.at(k1);
    const LocalizationRow& piped_loc = piped.by_k.at(k1);

    std::printf("questions: %zu  localization at rank budget k=%zu\n", direct.n_questions, k1);
    std::printf("%-16s %7s %7s %7s %7s %9s %9s %9s %7s\n", "method", "MRR", "R@1", "R@5", "R@10",
                "IoU>=0.3", "IoU>=0.5", "IoU>=0.7", "mIoU");
    std::printf("%-16s %7.2f %7.2f %7.2f %7.2f %9.2f %9.2f %9.2f %7.2f\n", "ccgs",
                direct.retrieval.mrr, direct.retrieval.r1, direct.retrieval.r5, direct.retrieval.r10,
                direct_loc.iou_03, direct_loc.iou_05, direct_loc.iou_07, direct_loc.miou);
    // BM25 alone ranks videos but names no span, so its localization cells
    // stay empty; the pipeline row adds the model's spans on top of it.
    std::printf("%-16s %7.2f %7.2f %7.2f %7.2f %9s %9s %9s %7s\n", "bm25", piped.retrieval.mrr,
                piped.retrieval.r1, piped.retrieval.r5, piped.retrieval.r10, "-", "-", "-", "-");
    std::printf("%-16s %7.2f %7.2f %7.2f %7.2f %9.2f %9.2f %9.2f %7.2f\n", "bm25+ccgs_span",
                piped.retrieval.mrr, piped.retrieval.r1, piped.retrieval.r5, piped.retrieval.r10,
                piped_loc.iou_03, piped_loc.iou_05, piped_loc.iou_07, piped_loc.miou);

    if (!out_dir.empty()) {
        ensure_out_dir(out_dir);
        echo_config(cfg, out_dir);
        nlohmann::json both = {{"ccgs", direct.to_json()}, {"bm25_ccgs_span", piped.to_json()}};
        write_file(out_dir + "/metrics.json", both.dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"global-span contrastive localization over a video corpus"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string corpus_path;
    std::vector<std::string> corpus_paths;
    std::string checkpoint_path;
    std::string mode_name;
    std::vector<std::size_t> k_list;
    std::vector<double> thresholds;
    std::string question_id;

    std::vector<CLI::Option*> seed_opts;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--set", overrides,
                        "dotted-path override, e.g. train.lr=0.001 or eval.k_list=[1,10]");
        seed_opts.push_back(cmd->add_option("--seed", seed, "seed every stage of the run"));
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus as train/val/test files");
    add_common(synth);
    synth->add_option("--out", out_dir, "output directory")->required();

    CLI::App* train = app.add_subcommand("train", "train a model and keep the best checkpoint");
    add_common(train);
    train->add_option("--corpus", corpus_paths, "train and val corpus files")
        ->expected(2)
        ->required();
    train->add_option("--out", out_dir, "output directory")->required();

    CLI::App* eval = app.add_subcommand("eval", "score a corpus and report the metric battery");
    add_common(eval);
    eval->add_option("--corpus", corpus_path, "corpus file")->required();
    eval->add_option("--checkpoint", checkpoint_path, "trained checkpoint (omit for fresh init)");
    eval->add_option("--out", out_dir, "output directory for metrics files");
    eval->add_option("--mode", mode_name, "ranking mode: ccgs | bm25_ccgs_span");
    eval->add_option("--k-list", k_list, "rank budgets, e.g. 1,10,100")->delimiter(',');
    eval->add_option("--thresholds", thresholds, "IoU thresholds (fixed at 0.3,0.5,0.7)")
        ->delimiter(',');

    CLI::App* predict = app.add_subcommand("predict", "rank every video for one question");
    add_common(predict);
    predict->add_option("question_id", question_id, "question to answer")->required();
    predict->add_option("--corpus", corpus_path, "corpus file")->required();
    predict->add_option("--checkpoint", checkpoint_path, "trained checkpoint (omit for fresh init)");
    predict->add_option("--mode", mode_name, "ranking mode: ccgs | bm25_ccgs_span");
    predict->add_option("--out", out_dir, "output directory for the prediction file");

    CLI::App* compare = app.add_subcommand("compare", "model vs BM25 vs BM25+model spans, side by side");
    add_common(compare);
    compare->add_option("--corpus", corpus_path, "corpus file")->required();
    compare->add_option("--checkpoint", checkpoint_path, "trained checkpoint (omit for fresh init)");
    compare->add_option("--k-list", k_list, "rank budgets, e.g. 1,10,100")->delimiter(',');
    compare->add_option("--out", out_dir, "output directory for the paired metrics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        // Precedence: config file, then --seed, then the shorthand flags,
        // then --set overrides (finest-grained control wins).
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        bool seed_given = false;
        for (const CLI::Option* opt : seed_opts) seed_given = seed_given || opt->count() > 0;
        if (seed_given) set_run_seed(cfg, seed);
        if (!mode_name.empty()) apply_override(cfg, "eval.mode=" + mode_name);
        if (!k_list.empty()) apply_override(cfg, "eval.k_list=" + nlohmann::json(k_list).dump());
        if (!thresholds.empty()) {
            apply_override(cfg, "eval.thresholds=" + nlohmann::json(thresholds).dump());
        }
        for (const std::string& assignment : overrides) apply_override(cfg, assignment);

        if (synth->parsed()) return cmd_synth(cfg, out_dir);
        if (train->parsed()) return cmd_train(cfg, corpus_paths, out_dir);
        if (eval->parsed()) return cmd_eval(cfg, corpus_path, checkpoint_path, out_dir);
        if (predict->parsed()) {
            return cmd_predict(cfg, corpus_path, checkpoint_path, question_id, out_dir);
        }
        if (compare->parsed()) return cmd_compare(cfg, corpus_path, checkpoint_path, out_dir);
        return 2; // unreachable: a subcommand is required
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
