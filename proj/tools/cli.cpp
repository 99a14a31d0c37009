#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "config_file.hpp"
#include "skillr1/llm/adapter.hpp"
#include "skillr1/llm/chat_client.hpp"

namespace fs = std::filesystem;

namespace skillr1::cli
{
//---------------------------------------------------------------------------//
// Tables
//---------------------------------------------------------------------------//

std::string format_reward(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    std::string s = buf;
    auto dot = s.find('.');
    while (s.size() > dot + 3 && s.back() == '0')
        s.pop_back();
    if (s == "-0.00")
        s = "0.00";
    return s;
}

std::string format_accuracy(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", value);
    std::string s = buf;
    if (s == "-0.000")
        s = "0.000";
    return s;
}

std::string format_delta(double value)
{
    auto s = format_reward(value);
    return s.front() == '-' ? s : "+" + s;
}

std::string format_metrics_table(std::span<GenerationMetrics const> rows)
{
    std::string out = "generation,mean_reward,accuracy\n";
    for (auto const& r : rows)
    {
        out += std::to_string(r.generation) + "," + format_reward(r.mean_reward)
               + "," + format_accuracy(r.accuracy) + "\n";
    }
    return out;
}

std::vector<GenerationMetrics> parse_metrics_table(std::string const& text,
                                                   std::string const& origin)
{
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "generation,mean_reward,accuracy")
    {
        throw FormatError(origin + ": expected header "
                          "\"generation,mean_reward,accuracy\"");
    }
    std::vector<GenerationMetrics> rows;
    int line_no = 1;
    while (std::getline(is, line))
    {
        ++line_no;
        if (line.empty())
            continue;
        GenerationMetrics m;
        std::istringstream ls(line);
        std::string a, b, c, extra;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')
            || !std::getline(ls, c, ',') || std::getline(ls, extra, ','))
        {
            throw FormatError(origin + ":" + std::to_string(line_no)
                              + ": expected three columns");
        }
        try
        {
            m.generation = std::stoi(a);
            m.mean_reward = std::stod(b);
            m.accuracy = std::stod(c);
        }
        catch (std::exception const&)
        {
            throw FormatError(origin + ":" + std::to_string(line_no)
                              + ": malformed number");
        }
        if (m.generation != static_cast<int>(rows.size()))
        {
            throw FormatError(origin + ":" + std::to_string(line_no)
                              + ": generations must count up from 0");
        }
        rows.push_back(m);
    }
    return rows;
}

std::string updates_header(int generations)
{
    std::string out = "update,surrogate,kl,grad_max_abs,objective";
    for (int g = 0; g <= generations; ++g)
        out += ",reward_g" + std::to_string(g);
    return out + "\n";
}

std::string format_update_row(UpdateMetrics const& m)
{
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    std::string out = std::to_string(m.update) + "," + num(m.surrogate) + ","
                      + num(m.kl) + "," + num(m.grad_max_abs) + ","
                      + num(m.objective);
    for (double r : m.generation_reward)
        out += "," + num(r);
    return out + "\n";
}

std::string compare_report(std::span<LabeledRun const> runs)
{
    if (runs.size() < 2)
        throw PreconditionError("compare needs at least two runs");
    auto const n = runs.front().rows.size();
    for (auto const& r : runs)
    {
        if (r.rows.size() != n)
        {
            throw PreconditionError(
                "mismatched generation counts: " + runs.front().label + " has "
                + std::to_string(n) + " rows, " + r.label + " has "
                + std::to_string(r.rows.size()));
        }
    }
    if (n == 0)
        throw PreconditionError("compare: empty metrics tables");

    auto const& base = runs.front();
    std::string out = "generation";
    for (auto const& r : runs)
        out += "," + r.label;
    for (std::size_t k = 1; k < runs.size(); ++k)
        out += "," + base.label + "-" + runs[k].label;
    out += "\n";

    for (std::size_t g = 0; g < n; ++g)
    {
        out += std::to_string(base.rows[g].generation);
        for (auto const& r : runs)
            out += "," + format_reward(r.rows[g].mean_reward);
        for (std::size_t k = 1; k < runs.size(); ++k)
        {
            out += ","
                   + format_delta(base.rows[g].mean_reward
                                  - runs[k].rows[g].mean_reward);
        }
        out += "\n";
    }

    auto const last = n - 1;
    out += "\nfinal generation " + std::to_string(base.rows[last].generation)
           + ":\n";
    for (std::size_t k = 0; k < runs.size(); ++k)
    {
        auto const& row = runs[k].rows[last];
        out += "  " + runs[k].label + ": mean_reward " + format_reward(row.mean_reward)
               + " accuracy " + format_accuracy(row.accuracy);
        if (k > 0)
        {
            out += " (" + base.label + " "
                   + format_delta(base.rows[last].mean_reward - row.mean_reward)
                   + ")";
        }
        out += "\n";
    }
    return out;
}

//---------------------------------------------------------------------------//
// Commands
//---------------------------------------------------------------------------//

namespace
{
//! Thrown for anything that should exit with the usage/config code
struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct Overrides
{
    std::string config;
    std::string out;
    bool force = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<std::string> env;
    std::optional<int> generations;
    std::optional<int> group_size;
    std::optional<double> lambda;
    std::optional<double> gamma;
    std::optional<double> epsilon;
    std::optional<double> beta;
    std::optional<double> lr;
    std::optional<int> episodes_per_update;
    std::optional<int> updates;
    std::optional<int> jobs;
};

void add_run_options(CLI::App& cmd, Overrides& o)
{
    cmd.add_option("--config", o.config, "Experiment config file")->required();
    cmd.add_option("--out", o.out, "Output directory");
    cmd.add_flag("--force", o.force, "Overwrite an existing output directory");
    cmd.add_option("--seed", o.seed, "Master seed");
    cmd.add_option("--mode", o.mode, "train | inference | vanilla-grpo");
    cmd.add_option("--env", o.env, "synthetic | llm");
    cmd.add_option("--generations", o.generations, "Generations per episode (G)");
    cmd.add_option("--group-size", o.group_size, "Rollouts per generation (K)");
    cmd.add_option("--lambda", o.lambda, "Inter-generation advantage weight");
    cmd.add_option("--gamma", o.gamma, "Discount of the reported objective");
    cmd.add_option("--epsilon", o.epsilon, "Clip range");
    cmd.add_option("--beta", o.beta, "KL penalty weight");
    cmd.add_option("--lr", o.lr, "Learning rate");
    cmd.add_option("--episodes-per-update", o.episodes_per_update,
                   "Episodes per ascent step");
    cmd.add_option("--updates", o.updates, "Number of ascent steps");
    cmd.add_option("--jobs", o.jobs, "Concurrent episodes");
}

//! Defaults, then the file, then flags
ExperimentConfig resolve_config(Overrides const& o)
{
    ExperimentConfig cfg;
    try
    {
        cfg = load_config(o.config);
        auto& t = cfg.train;
        if (o.seed)
            t.master_seed = *o.seed;
        if (o.mode)
            t.mode = mode_from_string(*o.mode);
        if (o.env)
            t.environment = env_from_string(*o.env);
        if (o.generations)
            t.generations = *o.generations;
        if (o.group_size)
            t.group_size = *o.group_size;
        if (o.lambda)
            t.lambda = *o.lambda;
        if (o.gamma)
            t.gamma = *o.gamma;
        if (o.epsilon)
            t.epsilon = *o.epsilon;
        if (o.beta)
            t.beta = *o.beta;
        if (o.lr)
            t.learning_rate = *o.lr;
        if (o.episodes_per_update)
            t.episodes_per_update = *o.episodes_per_update;
        if (o.updates)
            t.updates = *o.updates;
        if (o.jobs)
            t.jobs = *o.jobs;
    }
    catch (FormatError const& e)
    {
        throw UsageError(e.what());
    }
    catch (PreconditionError const& e)
    {
        throw UsageError(e.what());
    }

    auto errors = validate_experiment(cfg);
    if (!errors.empty())
    {
        std::string msg = "invalid configuration:";
        for (auto const& e : errors)
            msg += "\n  " + e;
        throw UsageError(msg);
    }
    return cfg;
}

//! Create the output directory; refuse to reuse a nonempty one without --force
void prepare_out_dir(fs::path const& dir, bool force)
{
    std::error_code ec;
    if (fs::exists(dir, ec))
    {
        if (!fs::is_directory(dir, ec))
            throw UsageError("output path " + dir.string() + " is not a directory");
        if (!fs::is_empty(dir, ec) && !force)
        {
            throw UsageError("output directory " + dir.string()
                             + " already exists; pass --force to overwrite");
        }
        return;
    }
    fs::create_directories(dir);
}

void write_file(fs::path const& path, std::string const& content)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
    os << content;
    if (!os)
        throw std::runtime_error("error while writing " + path.string());
}

std::ofstream open_out(fs::path const& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
    return os;
}

void print_update(std::ostream& out, UpdateMetrics const& m, int total)
{
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "update %d/%d surrogate=%.6g kl=%.3g grad=%.3g J=%.4f", m.update + 1,
                  total, m.surrogate, m.kl, m.grad_max_abs, m.objective);
    out << buf;
    if (!m.generation_reward.empty())
    {
        out << " r1=" << format_reward(m.generation_reward.size() > 1
                                           ? m.generation_reward[1]
                                           : m.generation_reward[0])
            << " rG=" << format_reward(m.generation_reward.back());
    }
    out << '\n';
}

//---------------------------------------------------------------------------//

int cmd_train(Overrides const& o, std::ostream& out)
{
    auto cfg = resolve_config(o);
    if (cfg.train.environment != EnvKind::synthetic)
        throw UsageError("train supports the synthetic environment only; use eval "
                         "for llm runs");
    if (o.out.empty())
        throw UsageError("train requires --out");
    fs::path dir = o.out;
    prepare_out_dir(dir, o.force);
    write_file(dir / "config.ini", write_config(cfg));

    auto const& tc = cfg.train;
    auto instances = make_instances(cfg.synthetic, tc.master_seed);
    SyntheticEnv env(cfg.synthetic);
    auto initial = PolicyParams::random(cfg.synthetic.bits, tc.init_scale,
                                        tc.master_seed);

    auto events = open_out(dir / "events.jsonl");
    EventLog log(events);
    auto updates = open_out(dir / "updates.csv");
    auto const G = tc.effective().generations;
    updates << updates_header(G);

    PolicyParams final_params = initial;
    if (tc.mode == Mode::inference)
    {
        out << "mode inference: parameters stay at their initial values\n";
    }
    else
    {
        auto result = train(instances, env, env, tc, initial, &log,
                            [&](UpdateMetrics const& m) {
                                updates << format_update_row(m);
                                print_update(out, m, tc.updates);
                            });
        final_params = std::move(result.params);
    }
    updates.close();

    PolicySkillGenerator gen(PolicySnapshot(final_params, SnapshotRole::behavior),
                             false);
    auto eval = evaluate(instances, Ports{env, env, gen}, tc);
    auto table = format_metrics_table(eval.rows);
    write_file(dir / "metrics.csv", table);

    std::ostringstream params;
    save_params(final_params, params);
    write_file(dir / "params.txt", params.str());

    out << table;
    return kExitOk;
}

//---------------------------------------------------------------------------//

struct LlmStack
{
    std::unique_ptr<llm::HttpTransport> http;
    std::unique_ptr<llm::Transport> wrapper;
    std::unique_ptr<llm::ChatClient> client;
    std::unique_ptr<llm::LlmTaskModel> task;
    std::unique_ptr<llm::ExactMatchVerifier> verifier;
    std::unique_ptr<SkillGenerator> editor;
};

LlmStack make_llm_stack(LlmSettings const& s, EventLog* log)
{
    LlmStack st;
    auto endpoint = llm::with_environment(s.endpoint);
    llm::Transport* transport = nullptr;
    switch (s.cassette_mode)
    {
        case CassetteMode::replay:
            st.wrapper = std::make_unique<llm::CassetteReplay>(s.cassettes);
            transport = st.wrapper.get();
            break;
        case CassetteMode::record:
            st.http = std::make_unique<llm::HttpTransport>(endpoint.base_url,
                                                           endpoint.timeout);
            st.wrapper = std::make_unique<llm::CassetteRecorder>(*st.http, s.cassettes);
            transport = st.wrapper.get();
            break;
        case CassetteMode::off:
            st.http = std::make_unique<llm::HttpTransport>(endpoint.base_url,
                                                           endpoint.timeout);
            transport = st.http.get();
            break;
    }
    st.client = std::make_unique<llm::ChatClient>(endpoint, *transport, log);
    st.task = std::make_unique<llm::LlmTaskModel>(*st.client, s.prompt);
    st.verifier = std::make_unique<llm::ExactMatchVerifier>(s.prompt.answer_marker);
    if (s.no_skills)
        st.editor = std::make_unique<llm::NoSkillGenerator>();
    else
        st.editor = std::make_unique<llm::LlmSkillEditor>(*st.client, s.prompt);
    return st;
}

int cmd_eval(Overrides const& o,
             std::string const& params_path,
             bool frozen_random,
             std::ostream& out)
{
    auto cfg = resolve_config(o);
    auto const& tc = cfg.train;
    bool const synthetic = tc.environment == EnvKind::synthetic;
    if (synthetic && params_path.empty() == !frozen_random)
        throw UsageError("eval needs exactly one of --params or --frozen-random");

    std::optional<fs::path> dir;
    if (!o.out.empty())
    {
        dir = o.out;
        prepare_out_dir(*dir, o.force);
        write_file(*dir / "config.ini", write_config(cfg));
    }
    std::ofstream events;
    std::optional<EventLog> log_storage;
    if (dir)
    {
        events = open_out(*dir / "events.jsonl");
        log_storage.emplace(events);
    }
    EventLog* log = log_storage ? &*log_storage : nullptr;

    EvalResult result;
    if (synthetic)
    {
        PolicyParams params;
        if (frozen_random)
        {
            params = PolicyParams::random(cfg.synthetic.bits, tc.init_scale,
                                          tc.master_seed);
        }
        else
        {
            params = load_params(params_path);
            if (params.bit_count() != cfg.synthetic.bits)
            {
                throw UsageError("parameters in " + params_path + " are for "
                                 + std::to_string(params.bit_count())
                                 + "-bit skills, config has "
                                 + std::to_string(cfg.synthetic.bits));
            }
        }
        auto instances = make_instances(cfg.synthetic, tc.master_seed);
        SyntheticEnv env(cfg.synthetic);
        PolicySkillGenerator gen(PolicySnapshot(params, SnapshotRole::behavior),
                                 false);
        result = evaluate(instances, Ports{env, env, gen}, tc, log);
    }
    else
    {
        auto instances = llm::load_llm_tasks(cfg.llm.tasks, cfg.llm.no_skills
                                                                ? std::string{}
                                                                : cfg.llm.skills);
        auto stack = make_llm_stack(cfg.llm, log);
        result = evaluate(instances, Ports{*stack.task, *stack.verifier, *stack.editor},
                          tc, log, cfg.llm.rollout_concurrency);
    }

    auto table = format_metrics_table(result.rows);
    if (dir)
        write_file(*dir / "metrics.csv", table);
    out << table;
    return kExitOk;
}

//---------------------------------------------------------------------------//

int cmd_compare(std::vector<std::string> const& run_args, std::ostream& out)
{
    std::vector<LabeledRun> runs;
    for (auto const& entry : run_args)
    {
        LabeledRun run;
        fs::path path;
        auto eq = entry.find('=');
        if (eq != std::string::npos)
        {
            run.label = entry.substr(0, eq);
            path = entry.substr(eq + 1);
        }
        else
        {
            path = entry;
        }
        if (fs::is_directory(path))
            path /= "metrics.csv";
        if (run.label.empty())
        {
            auto parent = path.parent_path().filename().string();
            run.label = parent.empty() ? path.stem().string() : parent;
        }
        std::ifstream is(path);
        if (!is)
            throw UsageError("cannot read metrics table " + path.string());
        std::ostringstream ss;
        ss << is.rdbuf();
        try
        {
            run.rows = parse_metrics_table(ss.str(), path.string());
        }
        catch (FormatError const& e)
        {
            throw UsageError(e.what());
        }
        runs.push_back(std::move(run));
    }
    try
    {
        out << compare_report(runs);
    }
    catch (PreconditionError const& e)
    {
        throw UsageError(e.what());
    }
    return kExitOk;
}
}  // namespace

//---------------------------------------------------------------------------//

int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Skill evolution with bi-level group-relative policy optimization",
                 "skillr1"};
    app.require_subcommand(1);

    Overrides train_o, eval_o;
    auto* train_cmd = app.add_subcommand("train", "Train the skill generator");
    add_run_options(*train_cmd, train_o);

    auto* eval_cmd
        = app.add_subcommand("eval", "Evaluate a frozen skill generator");
    add_run_options(*eval_cmd, eval_o);
    std::string params_path;
    bool frozen_random = false;
    eval_cmd->add_option("--params", params_path, "Trained parameter file");
    eval_cmd->add_flag("--frozen-random", frozen_random,
                       "Use the seeded random initial parameters");

    auto* compare_cmd = app.add_subcommand(
        "compare", "Compare metrics tables (first run minus each other run)");
    std::vector<std::string> run_args;
    compare_cmd->add_option("runs", run_args, "label=path to metrics.csv or run directory")
        ->required()
        ->expected(2, -1);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try
    {
        app.parse(reversed);
    }
    catch (CLI::CallForHelp const&)
    {
        out << app.help();
        return kExitOk;
    }
    catch (CLI::ParseError const& e)
    {
        err << "error: " << e.what() << "\n\n";
        auto const* sub = app.get_subcommands().empty() ? &app
                                                         : app.get_subcommands().front();
        err << sub->help();
        return kExitUsage;
    }

    try
    {
        if (train_cmd->parsed())
            return cmd_train(train_o, out);
        if (eval_cmd->parsed())
            return cmd_eval(eval_o, params_path, frozen_random, out);
        return cmd_compare(run_args, out);
    }
    catch (UsageError const& e)
    {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace skillr1::cli
