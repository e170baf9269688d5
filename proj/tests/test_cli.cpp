// Shell-out tests for the command-line binary: artifact layout, exit codes,
// and run-to-run determinism. CCGS_BIN is injected by the build.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "ccgs/checkpoint.hpp"
#include "ccgs/corpus.hpp"
#include "ccgs/evaluation.hpp"

using namespace ccgs;
using nlohmann::json;

namespace {

struct TempDir {
    std::string path;
    TempDir() {
        char name[] = "/tmp/ccgs_cli_XXXXXX";
        path = mkdtemp(name);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), "missing file: " << path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
    const std::string out_path = dir.path + "/stdout.txt";
    const std::string err_path = dir.path + "/stderr.txt";
    const std::string cmd =
        std::string(CCGS_BIN) + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

// Small corpus + model flags shared by the pipeline tests.
const char* kSynthFlags =
    "--set synth.n_videos=8 --set synth.n_questions=12 --set synth.units_per_video=5 "
    "--set synth.tokens_per_unit=4 --set synth.n_train=8 --set synth.n_val=4";
const char* kModelFlags = "--set model.d=8 --set model.d_v=4";

std::string make_corpus(const TempDir& dir, const std::string& seed = "5") {
    const std::string out = dir.path + "/corpus";
    CliResult r = run_cli(dir, "synth --seed " + seed + " --out " + out + " " + kSynthFlags);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return out;
}

std::string make_run(const TempDir& dir, const std::string& corpus) {
    const std::string out = dir.path + "/run";
    CliResult r = run_cli(dir, "train --corpus " + corpus + "/train.json " + corpus +
                                   "/val.json --out " + out + " --seed 5 " + kModelFlags +
                                   " --set train.steps=5 --set train.lr=0.001"
                                   " --set train.val_every=0");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return out;
}

} // namespace

TEST_CASE("cli: synth writes three disjoint splits with the configured counts") {
    TempDir dir;
    const std::string corpus = make_corpus(dir);

    const CorpusSplit train = parse_corpus(slurp(corpus + "/train.json"));
    const CorpusSplit val = parse_corpus(slurp(corpus + "/val.json"));
    const CorpusSplit test = parse_corpus(slurp(corpus + "/test.json"));
    CHECK(train.qa.size() == 8);
    CHECK(val.qa.size() == 4);
    CHECK(test.qa.size() == 0);
    CHECK(train.videos.size() == 8);

    for (const QAInstance& a : train.qa) {
        for (const QAInstance& b : val.qa) CHECK(a.question_id != b.question_id);
    }

    const json echoed = json::parse(slurp(corpus + "/config.json"));
    CHECK(echoed.at("synth").at("n_videos") == 8);
    CHECK(echoed.at("model").at("seed") == 5);
}

TEST_CASE("cli: synth is byte-deterministic in its seed") {
    TempDir dir;
    run_cli(dir, "synth --seed 9 --out " + dir.path + "/a " + kSynthFlags);
    run_cli(dir, "synth --seed 9 --out " + dir.path + "/b " + kSynthFlags);
    run_cli(dir, "synth --seed 10 --out " + dir.path + "/c " + kSynthFlags);
    for (const char* name : {"/train.json", "/val.json", "/test.json"}) {
        CHECK(slurp(dir.path + "/a" + name) == slurp(dir.path + "/b" + name));
    }
    CHECK(slurp(dir.path + "/a/train.json") != slurp(dir.path + "/c/train.json"));
}

TEST_CASE("cli: synth reproduces the corpus-scale split ratio") {
    TempDir dir;
    CliResult r = run_cli(dir, "synth --seed 1 --out " + dir.path +
                                   "/big --set synth.n_questions=151 --set synth.n_train=136"
                                   " --set synth.n_val=7 --set synth.vocab_size=512");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(parse_corpus(slurp(dir.path + "/big/train.json")).qa.size() == 136);
    CHECK(parse_corpus(slurp(dir.path + "/big/val.json")).qa.size() == 7);
    CHECK(parse_corpus(slurp(dir.path + "/big/test.json")).qa.size() == 8);
}

TEST_CASE("cli: config and usage problems exit 2, data problems exit 3") {
    TempDir dir;
    CHECK(run_cli(dir, "synth").code == 2);            // --out missing
    CHECK(run_cli(dir, "frobnicate").code == 2);       // unknown subcommand
    CHECK(run_cli(dir, "eval --corpus " + dir.path + "/absent.json").code == 3);

    std::ofstream(dir.path + "/bad_config.json") << R"({"train": {"lrr": 1}})";
    CliResult bad_key = run_cli(dir, "synth --out " + dir.path + "/x --config " + dir.path +
                                         "/bad_config.json");
    CHECK(bad_key.code == 2);
    CHECK(bad_key.err.find("train.lrr") != std::string::npos);

    CHECK(run_cli(dir, "synth --out " + dir.path + "/x --set train.lr").code == 2);
    CHECK(run_cli(dir, "synth --out " + dir.path + "/x --set eval.thresholds=[0.4]").code == 2);

    std::ofstream(dir.path + "/mangled.json") << "{not json";
    CHECK(run_cli(dir, "eval --corpus " + dir.path + "/mangled.json").code == 3);

    CHECK(run_cli(dir, "--help").code == 0);
}

TEST_CASE("cli: train writes the run artifacts and a parseable step log") {
    TempDir dir;
    const std::string corpus = make_corpus(dir);
    const std::string run = make_run(dir, corpus);

    const json echoed = json::parse(slurp(run + "/config.json"));
    CHECK(echoed.at("train").at("steps") == 5);
    CHECK(echoed.at("model").at("d") == 8);

    ParameterSet params;
    load_checkpoint(run + "/checkpoint.bin", params);
    CHECK(params.count() > 0);

    std::istringstream log(slurp(run + "/log.jsonl"));
    std::string line;
    std::size_t train_records = 0, val_records = 0;
    while (std::getline(log, line)) {
        const json rec = json::parse(line);
        if (rec.contains("event")) {
            ++val_records;
        } else {
            ++train_records;
            CHECK(rec.at("loss").is_number());
        }
    }
    CHECK(train_records == 5);
    CHECK(val_records >= 1);
}

TEST_CASE("cli: identical seeds give byte-identical checkpoints and metrics") {
    TempDir dir;
    const std::string corpus = make_corpus(dir);
    const std::string run_a = make_run(dir, corpus);

    const std::string run_b = dir.path + "/run_b";
    run_cli(dir, "train --corpus " + corpus + "/train.json " + corpus + "/val.json --out " +
                     run_b + " --seed 5 " + kModelFlags +
                     " --set train.steps=5 --set train.lr=0.001 --set train.val_every=0");
    CHECK(slurp(run_a + "/checkpoint.bin") == slurp(run_b + "/checkpoint.bin"));
    CHECK(slurp(run_a + "/log.jsonl") == slurp(run_b + "/log.jsonl"));

    for (const char* out : {"/eval_a", "/eval_b"}) {
        CliResult r = run_cli(dir, "eval --corpus " + corpus + "/val.json --checkpoint " + run_a +
                                       "/checkpoint.bin --out " + dir.path + out + " " +
                                       kModelFlags);
        REQUIRE_MESSAGE(r.code == 0, r.err);
    }
    CHECK(slurp(dir.path + "/eval_a/metrics.json") == slurp(dir.path + "/eval_b/metrics.json"));
}

TEST_CASE("cli: eval emits a coherent metrics file pair") {
    TempDir dir;
    const std::string corpus = make_corpus(dir);
    const std::string run = make_run(dir, corpus);
    CliResult r = run_cli(dir, "eval --corpus " + corpus + "/val.json --checkpoint " + run +
                                   "/checkpoint.bin --out " + dir.path + "/evald " + kModelFlags +
                                   " --k-list 1,5 --thresholds 0.3,0.5,0.7");
    REQUIRE_MESSAGE(r.code == 0, r.err);

    const MetricsReport from_json = MetricsReport::from_json(
        json::parse(slurp(dir.path + "/evald/metrics.json")));
    const MetricsReport from_csv = MetricsReport::from_csv(slurp(dir.path + "/evald/metrics.csv"));
    CHECK(from_json.to_json() == from_csv.to_json());
    CHECK(from_json.n_questions == 4);
    CHECK(from_json.by_k.count(1) == 1);
    CHECK(from_json.by_k.count(5) == 1);
    CHECK(from_json.retrieval.mrr >= 0.0);
    CHECK(from_json.retrieval.mrr <= 100.0);
}

TEST_CASE("cli: an untrained model still evaluates to finite metrics") {
    TempDir dir;
    const std::string corpus = make_corpus(dir);
    CliResult r = run_cli(dir, "eval --corpus " + corpus + "/val.json --out " + dir.path +
                                   "/fresh " + kModelFlags);
    CHECK(r.code == 0);
    CHECK(r.err.find("freshly initialized") != std::string::npos);
    const MetricsReport rep =
        MetricsReport::from_json(json::parse(slurp(dir.path + "/fresh/metrics.json")));
    CHECK(rep.retrieval.r10 <= 100.0);
}

TEST_CASE("cli: the retrieval pipeline mode rides the keyword index") {
    TempDir dir;
    const std::string corpus = make_corpus(dir);
    CliResult r = run_cli(dir, "eval --corpus " + corpus + "/val.json --mode bm25_ccgs_span"
                               " --out " + dir.path + "/piped " + kModelFlags);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const MetricsReport rep =
        MetricsReport::from_json(json::parse(slurp(dir.path + "/piped/metrics.json")));
    CHECK(rep.retrieval.r1 == 100.0); // every synthetic question names its video
}

TEST_CASE("cli: predict emits one ranked answer list") {
    TempDir dir;
    const std::string corpus = make_corpus(dir);
    const CorpusSplit val = parse_corpus(slurp(corpus + "/val.json"));
    const std::string qid = val.qa.front().question_id;

    CliResult r = run_cli(dir, "predict " + qid + " --corpus " + corpus + "/val.json " +
                                   kModelFlags + " --out " + dir.path + "/pred");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json pred = json::parse(r.out);
    CHECK(pred.at("question_id") == qid);
    REQUIRE(pred.at("ranking").size() == val.videos.size());
    const json& top = pred.at("ranking").at(0);
    CHECK(top.contains("video_id"));
    CHECK(top.at("start_s").is_number());
    CHECK(top.at("end_s").is_number());
    CHECK(top.at("score").is_number());
    CHECK(json::parse(slurp(dir.path + "/pred/prediction.json")) == pred);

    CHECK(run_cli(dir, "predict nope --corpus " + corpus + "/val.json " + kModelFlags).code == 2);
}

TEST_CASE("cli: compare's model row matches a plain eval of the same checkpoint") {
    TempDir dir;
    const std::string corpus = make_corpus(dir);
    const std::string run = make_run(dir, corpus);
    const std::string common = " --corpus " + corpus + "/val.json --checkpoint " + run +
                               "/checkpoint.bin " + kModelFlags;

    CliResult cmp = run_cli(dir, "compare --out " + dir.path + "/cmp" + common);
    REQUIRE_MESSAGE(cmp.code == 0, cmp.err);
    for (const char* row : {"ccgs", "bm25", "bm25+ccgs_span"}) {
        CHECK(cmp.out.find(row) != std::string::npos);
    }

    CliResult ev = run_cli(dir, "eval --out " + dir.path + "/evald" + common);
    REQUIRE_MESSAGE(ev.code == 0, ev.err);
    const json paired = json::parse(slurp(dir.path + "/cmp/metrics.json"));
    CHECK(paired.at("ccgs") == json::parse(slurp(dir.path + "/evald/metrics.json")));
    CHECK(paired.at("bm25_ccgs_span").at("r1") == 100.0);
}
