#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "config_file.hpp"
#include "doctest.h"

using namespace skillr1;
using namespace skillr1::cli;

namespace
{
namespace fs = std::filesystem;

struct TempDir
{
    fs::path path;
    TempDir()
    {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path()
               / ("skillr1-cli-" + std::to_string(::getpid()) + "-"
                  + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(fs::path const& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

void spit(fs::path const& p, std::string const& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

constexpr char const* kSmallConfig = R"([train]
generations = 3
group_size = 4
updates = 3
episodes_per_update = 4
learning_rate = 0.2
seed = 7

[synthetic]
bits = 4
instance_count = 4
)";

std::vector<GenerationMetrics> rows(std::vector<std::pair<double, double>> values)
{
    std::vector<GenerationMetrics> out;
    for (std::size_t g = 0; g < values.size(); ++g)
        out.push_back({static_cast<int>(g), values[g].first, values[g].second});
    return out;
}
}  // namespace

TEST_CASE("metrics formatting")
{
    CHECK(format_reward(0.44) == "0.44");
    CHECK(format_reward(0.4) == "0.40");
    CHECK(format_reward(1.0) == "1.00");
    CHECK(format_reward(0.123456789) == "0.123457");
    CHECK(format_reward(-0.0) == "0.00");
    CHECK(format_accuracy(0.5) == "0.500");
    CHECK(format_accuracy(69.0 / 165) == "0.418");
    CHECK(format_delta(0.07) == "+0.07");
    CHECK(format_delta(-0.07) == "-0.07");
    CHECK(format_delta(0.0) == "+0.00");

    std::vector<GenerationMetrics> table(6);
    for (int g = 0; g < 6; ++g)
        table[static_cast<std::size_t>(g)].generation = g;
    table[5].mean_reward = 0.44;
    table[5].accuracy = 0.5;
    auto text = format_metrics_table(table);
    CHECK(text.rfind("generation,mean_reward,accuracy\n", 0) == 0);
    CHECK(text.find("\n5,0.44,0.500\n") != std::string::npos);
}

TEST_CASE("metrics table round trip")
{
    auto original = rows({{0.25, 1.0}, {0.5, 0.75}, {0.123456, 0.5}});
    auto back = parse_metrics_table(format_metrics_table(original), "m.csv");
    REQUIRE(back.size() == 3);
    for (std::size_t g = 0; g < 3; ++g)
    {
        CHECK(back[g].generation == original[g].generation);
        CHECK(back[g].mean_reward == original[g].mean_reward);
        CHECK(back[g].accuracy == original[g].accuracy);
    }
    CHECK_THROWS_AS(parse_metrics_table("gen,reward\n0,1\n", "m.csv"), FormatError);
    CHECK_THROWS_AS(
        parse_metrics_table("generation,mean_reward,accuracy\n1,0.5,0.5\n", "m.csv"),
        FormatError);
    CHECK_THROWS_AS(
        parse_metrics_table("generation,mean_reward,accuracy\n0,0.5\n", "m.csv"),
        FormatError);
}

TEST_CASE("compare report")
{
    SUBCASE("identical runs have zero deltas")
    {
        std::vector<LabeledRun> runs{{"a", rows({{0.1, 0.2}, {0.3, 0.4}})},
                                     {"b", rows({{0.1, 0.2}, {0.3, 0.4}})}};
        auto report = compare_report(runs);
        CHECK(report.rfind("generation,a,b,a-b\n", 0) == 0);
        CHECK(report.find("0,0.10,0.10,+0.00\n") != std::string::npos);
        CHECK(report.find("1,0.30,0.30,+0.00\n") != std::string::npos);
        CHECK(report.find("final generation 1:") != std::string::npos);
    }
    SUBCASE("deltas are first run minus the others")
    {
        std::vector<LabeledRun> runs{{"skill", rows({{0.3, 0.5}, {0.44, 0.5}})},
                                     {"vanilla", rows({{0.3, 0.5}, {0.37, 0.5}})},
                                     {"none", rows({{0.2, 0.5}, {0.5, 0.5}})}};
        auto report = compare_report(runs);
        CHECK(report.find("generation,skill,vanilla,none,skill-vanilla,skill-none\n")
              == 0);
        CHECK(report.find("1,0.44,0.37,0.50,+0.07,-0.06\n") != std::string::npos);
        CHECK(report.find("  vanilla: mean_reward 0.37 accuracy 0.500 (skill +0.07)")
              != std::string::npos);
    }
    SUBCASE("mismatched runs are rejected")
    {
        std::vector<LabeledRun> uneven{{"a", rows({{0.1, 0.2}, {0.3, 0.4}})},
                                       {"b", rows({{0.1, 0.2}})}};
        CHECK_THROWS_AS(compare_report(uneven), PreconditionError);
        std::vector<LabeledRun> single{{"a", rows({{0.1, 0.2}})}};
        CHECK_THROWS_AS(compare_report(single), PreconditionError);
    }
}

TEST_CASE("config file")
{
    auto cfg = parse_config(kSmallConfig, "small.ini");
    CHECK(cfg.train.generations == 3);
    CHECK(cfg.train.learning_rate == 0.2);
    CHECK(cfg.train.master_seed == 7);
    CHECK(cfg.synthetic.bits == 4);
    CHECK(cfg.train.beta == TrainConfig{}.beta);

    SUBCASE("round trip")
    {
        cfg.train.lambda = 0.1 + 0.2;
        cfg.train.mode = Mode::vanilla_grpo;
        cfg.llm.no_skills = true;
        cfg.llm.cassette_mode = CassetteMode::replay;
        cfg.llm.endpoint.temperature = 0.3;
        auto text = write_config(cfg);
        auto back = parse_config(text, "again.ini");
        CHECK(write_config(back) == text);
        CHECK(back.train.lambda == cfg.train.lambda);
        CHECK(back.train.mode == Mode::vanilla_grpo);
        CHECK(back.llm.cassette_mode == CassetteMode::replay);
    }
    SUBCASE("comments")
    {
        auto c = parse_config("# header\n[train]  ; trailing\nlambda = 0.5   # weight\n"
                              "[llm]\ntasks = runs/#3/tasks.jsonl\n",
                              "c.ini");
        CHECK(c.train.lambda == 0.5);
        CHECK(c.llm.tasks == "runs/#3/tasks.jsonl");
    }
    SUBCASE("errors carry the line")
    {
        CHECK_THROWS_WITH_AS(parse_config("[train]\nbogus = 1\n", "x.ini"),
                             doctest::Contains("x.ini:2"), FormatError);
        CHECK_THROWS_WITH_AS(parse_config("[nowhere]\n", "x.ini"),
                             doctest::Contains("x.ini:1"), FormatError);
        CHECK_THROWS_AS(parse_config("[train]\ngroup_size = four\n", "x.ini"),
                        FormatError);
        CHECK_THROWS_WITH_AS(parse_config("[llm]\napi_key = sk-1\n", "x.ini"),
                             doctest::Contains("environment"), FormatError);
    }
    SUBCASE("validation")
    {
        auto bad = cfg;
        bad.train.group_size = 1;
        auto errors = validate_experiment(bad);
        REQUIRE_FALSE(errors.empty());
        CHECK(errors.front().find("K >= 2 required") != std::string::npos);
        auto llm = cfg;
        llm.train.environment = EnvKind::llm;
        llm.train.mode = Mode::inference;
        CHECK_FALSE(validate_experiment(llm).empty());  // no task file
        llm.llm.tasks = "tasks.jsonl";
        llm.llm.no_skills = true;
        CHECK(validate_experiment(llm).empty());
    }
}

TEST_CASE("cli: usage errors")
{
    CHECK(invoke({}).code == kExitUsage);
    CHECK(invoke({"--help"}).code == kExitOk);
    CHECK(invoke({"train"}).code == kExitUsage);
    CHECK(invoke({"frobnicate"}).code == kExitUsage);

    TempDir dir;
    spit(dir.path / "c.ini", kSmallConfig);
    auto cfg = (dir.path / "c.ini").string();
    CHECK(invoke({"train", "--config", cfg}).code == kExitUsage);  // no --out
    CHECK(invoke({"train", "--config", cfg, "--out", (dir.path / "r").string(),
               "--group-size", "1"})
              .code
          == kExitUsage);
    CHECK(invoke({"eval", "--config", cfg}).code == kExitUsage);  // no parameters
    CHECK(invoke({"eval", "--config", cfg, "--params",
               (dir.path / "missing.txt").string()})
              .code
          == kExitRuntime);
    CHECK(invoke({"train", "--config", (dir.path / "absent.ini").string(), "--out",
               (dir.path / "r").string()})
              .code
          != kExitOk);
}

TEST_CASE("cli: train, eval, and compare")
{
    TempDir dir;
    spit(dir.path / "c.ini", kSmallConfig);
    auto cfg = (dir.path / "c.ini").string();
    auto run_a = dir.path / "a";
    auto train = invoke({"train", "--config", cfg, "--out", run_a.string()});
    REQUIRE_MESSAGE(train.code == kExitOk, train.err);
    for (char const* name :
         {"config.ini", "events.jsonl", "updates.csv", "metrics.csv", "params.txt"})
        CHECK(fs::exists(run_a / name));
    CHECK(train.out.find("update 3/3") != std::string::npos);
    CHECK(slurp(run_a / "updates.csv").rfind(updates_header(3), 0) == 0);
    CHECK(parse_metrics_table(slurp(run_a / "metrics.csv"), "m").size() == 4);

    SUBCASE("existing output is protected")
    {
        auto again = invoke({"train", "--config", cfg, "--out", run_a.string()});
        CHECK(again.code == kExitUsage);
        auto forced = invoke({"train", "--config", cfg, "--out", run_a.string(), "--force"});
        CHECK(forced.code == kExitOk);
    }
    SUBCASE("same seed, same bytes; saved config reproduces the run")
    {
        auto run_b = dir.path / "b";
        REQUIRE(invoke({"train", "--config", cfg, "--out", run_b.string()}).code == kExitOk);
        auto run_c = dir.path / "c";
        REQUIRE(invoke({"train", "--config", (run_a / "config.ini").string(), "--out",
                     run_c.string()})
                    .code
                == kExitOk);
        for (char const* name : {"events.jsonl", "updates.csv", "metrics.csv", "params.txt"})
        {
            CHECK(slurp(run_a / name) == slurp(run_b / name));
            CHECK(slurp(run_a / name) == slurp(run_c / name));
        }
        auto other = dir.path / "d";
        REQUIRE(invoke({"train", "--config", cfg, "--out", other.string(), "--seed", "8"})
                    .code
                == kExitOk);
        CHECK(slurp(run_a / "events.jsonl") != slurp(other / "events.jsonl"));
    }
    SUBCASE("flags override the file")
    {
        auto run_f = dir.path / "f";
        REQUIRE(invoke({"train", "--config", cfg, "--out", run_f.string(), "--lambda",
                     "0.5", "--updates", "2"})
                    .code
                == kExitOk);
        auto saved = load_config(run_f / "config.ini");
        CHECK(saved.train.lambda == 0.5);
        CHECK(saved.train.updates == 2);
        CHECK(saved.train.learning_rate == 0.2);
    }
    SUBCASE("eval of the trained parameters matches the training report")
    {
        auto ev = invoke({"eval", "--config", cfg, "--params", (run_a / "params.txt").string()});
        REQUIRE_MESSAGE(ev.code == kExitOk, ev.err);
        CHECK(ev.out == slurp(run_a / "metrics.csv"));

        auto rnd = invoke({"eval", "--config", cfg, "--frozen-random"});
        REQUIRE(rnd.code == kExitOk);
        spit(dir.path / "random.csv", rnd.out);
        auto cmp = invoke({"compare", "trained=" + run_a.string(),
                        "random=" + (dir.path / "random.csv").string()});
        REQUIRE_MESSAGE(cmp.code == kExitOk, cmp.err);
        CHECK(cmp.out.rfind("generation,trained,random,trained-random\n", 0) == 0);
    }
    SUBCASE("vanilla-grpo is train with one generation and no inter term")
    {
        auto v = dir.path / "v";
        auto t = dir.path / "t";
        REQUIRE(invoke({"train", "--config", cfg, "--out", v.string(), "--mode",
                     "vanilla-grpo"})
                    .code
                == kExitOk);
        REQUIRE(invoke({"train", "--config", cfg, "--out", t.string(), "--generations", "1",
                     "--lambda", "0"})
                    .code
                == kExitOk);
        CHECK(slurp(v / "params.txt") == slurp(t / "params.txt"));
        CHECK(slurp(v / "updates.csv") == slurp(t / "updates.csv"));
    }
    SUBCASE("inference mode keeps the initial parameters")
    {
        auto i = dir.path / "i";
        auto res = invoke({"train", "--config", cfg, "--out", i.string(), "--mode", "inference"});
        REQUIRE(res.code == kExitOk);
        CHECK(res.out.find("parameters stay at their initial values") != std::string::npos);
        auto j = dir.path / "j";
        REQUIRE(invoke({"train", "--config", cfg, "--out", j.string(), "--lr", "0"}).code
                == kExitOk);
        CHECK(slurp(i / "params.txt") == slurp(j / "params.txt"));
    }
}

TEST_CASE("cli: parameter shape mismatch is a usage error")
{
    TempDir dir;
    spit(dir.path / "c.ini", kSmallConfig);
    auto cfg = (dir.path / "c.ini").string();
    auto run = dir.path / "r";
    REQUIRE(invoke({"train", "--config", cfg, "--out", run.string(), "--updates", "1"}).code
            == kExitOk);
    std::string wide = kSmallConfig;
    wide.replace(wide.find("bits = 4"), 8, "bits = 6");
    spit(dir.path / "wide.ini", wide);
    auto res = invoke({"eval", "--config", (dir.path / "wide.ini").string(), "--params",
                    (run / "params.txt").string()});
    CHECK(res.code == kExitUsage);
}
