#include "config_file.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace skillr1::cli
{
namespace
{
//! Drop a '#' or ';' comment that starts the line or follows whitespace
std::string strip_comment(std::string const& line)
{
    for (std::size_t i = 0; i < line.size(); ++i)
    {
        if ((line[i] == '#' || line[i] == ';')
            && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t'))
        {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string trim(std::string const& s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Prefer the shortest text that still round-trips
    for (int prec = 1; prec <= 17; ++prec)
    {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        if (std::strtod(shorter, nullptr) == v)
            return shorter;
    }
    return buf;
}

double parse_double(std::string const& v)
{
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size())
        throw std::invalid_argument(v);
    return out;
}

long long parse_int(std::string const& v)
{
    std::size_t used = 0;
    long long out = std::stoll(v, &used);
    if (used != v.size())
        throw std::invalid_argument(v);
    return out;
}

unsigned long long parse_uint(std::string const& v)
{
    if (!v.empty() && v[0] == '-')
        throw std::invalid_argument(v);
    std::size_t used = 0;
    unsigned long long out = std::stoull(v, &used);
    if (used != v.size())
        throw std::invalid_argument(v);
    return out;
}

bool parse_bool(std::string const& v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw std::invalid_argument(v);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string to_string(CassetteMode m)
{
    switch (m)
    {
        case CassetteMode::off:
            return "off";
        case CassetteMode::record:
            return "record";
        case CassetteMode::replay:
            return "replay";
    }
    return "off";
}

CassetteMode cassette_mode_from(std::string const& v)
{
    if (v == "off")
        return CassetteMode::off;
    if (v == "record")
        return CassetteMode::record;
    if (v == "replay")
        return CassetteMode::replay;
    throw std::invalid_argument(v);
}

struct Entry
{
    char const* section;
    char const* key;
    std::function<std::string(ExperimentConfig const&)> get;
    std::function<void(ExperimentConfig&, std::string const&)> set;
};

template<class T, class Parse, class Format>
Entry make_entry(char const* section,
                 char const* key,
                 T ExperimentConfig::*group,
                 auto member,
                 Parse parse,
                 Format format)
{
    return Entry{
        section,
        key,
        [=](ExperimentConfig const& c) { return format((c.*group).*member); },
        [=](ExperimentConfig& c, std::string const& v) {
            (c.*group).*member = parse(v);
        }};
}

std::vector<Entry> const& entries()
{
    using E = ExperimentConfig;
    auto d = [](std::string const& v) { return parse_double(v); };
    auto i = [](std::string const& v) { return static_cast<int>(parse_int(v)); };
    auto fd = [](double v) { return fmt_double(v); };
    auto fi = [](int v) { return std::to_string(v); };
    auto b = [](std::string const& v) { return parse_bool(v); };
    auto fb = [](bool v) { return fmt_bool(v); };
    auto s = [](std::string const& v) { return v; };
    auto fs = [](std::string const& v) { return v; };
    auto ms = [](std::string const& v) {
        return std::chrono::milliseconds(parse_int(v));
    };
    auto fms = [](std::chrono::milliseconds v) { return std::to_string(v.count()); };

    static std::vector<Entry> const table = [&] {
        std::vector<Entry> t;
        // [train]
        t.push_back(make_entry("train", "generations", &E::train, &TrainConfig::generations, i, fi));
        t.push_back(make_entry("train", "group_size", &E::train, &TrainConfig::group_size, i, fi));
        t.push_back(make_entry("train", "lambda", &E::train, &TrainConfig::lambda, d, fd));
        t.push_back(make_entry("train", "gamma", &E::train, &TrainConfig::gamma, d, fd));
        t.push_back(make_entry("train", "epsilon", &E::train, &TrainConfig::epsilon, d, fd));
        t.push_back(make_entry("train", "beta", &E::train, &TrainConfig::beta, d, fd));
        t.push_back(make_entry("train", "learning_rate", &E::train, &TrainConfig::learning_rate, d, fd));
        t.push_back(make_entry("train", "episodes_per_update", &E::train, &TrainConfig::episodes_per_update, i, fi));
        t.push_back(make_entry("train", "updates", &E::train, &TrainConfig::updates, i, fi));
        t.push_back(make_entry(
            "train", "seed", &E::train, &TrainConfig::master_seed,
            [](std::string const& v) { return static_cast<std::uint64_t>(parse_uint(v)); },
            [](std::uint64_t v) { return std::to_string(v); }));
        t.push_back(make_entry(
            "train", "mode", &E::train, &TrainConfig::mode,
            [](std::string const& v) { return mode_from_string(v); },
            [](Mode m) { return to_string(m); }));
        t.push_back(make_entry(
            "train", "environment", &E::train, &TrainConfig::environment,
            [](std::string const& v) { return env_from_string(v); },
            [](EnvKind e) { return to_string(e); }));
        t.push_back(make_entry("train", "inter_uses_gen0", &E::train, &TrainConfig::inter_uses_gen0, b, fb));
        t.push_back(make_entry("train", "refresh_reference", &E::train, &TrainConfig::refresh_reference, b, fb));
        t.push_back(make_entry("train", "init_scale", &E::train, &TrainConfig::init_scale, d, fd));
        t.push_back(make_entry("train", "jobs", &E::train, &TrainConfig::jobs, i, fi));
        t.push_back(make_entry("train", "eval_repeats", &E::train, &TrainConfig::eval_repeats, i, fi));
        // [synthetic]
        t.push_back(make_entry("synthetic", "bits", &E::synthetic, &SyntheticEnvConfig::bits, i, fi));
        t.push_back(make_entry("synthetic", "eta", &E::synthetic, &SyntheticEnvConfig::eta, d, fd));
        t.push_back(make_entry("synthetic", "tol", &E::synthetic, &SyntheticEnvConfig::tol, i, fi));
        t.push_back(make_entry("synthetic", "instance_count", &E::synthetic, &SyntheticEnvConfig::instance_count, i, fi));
        t.push_back(make_entry("synthetic", "bank_size", &E::synthetic, &SyntheticEnvConfig::bank_size, i, fi));
        // [llm]
        auto ep = [](auto member) {
            return [member](LlmSettings& l) -> auto& { return l.endpoint.*member; };
        };
        (void)ep;
        auto add_llm = [&t](char const* key,
                            std::function<std::string(LlmSettings const&)> get,
                            std::function<void(LlmSettings&, std::string const&)> set) {
            t.push_back(Entry{
                "llm", key,
                [get](ExperimentConfig const& c) { return get(c.llm); },
                [set](ExperimentConfig& c, std::string const& v) { set(c.llm, v); }});
        };
        add_llm("base_url", [](auto const& l) { return l.endpoint.base_url; },
                [](auto& l, auto const& v) { l.endpoint.base_url = v; });
        add_llm("path", [](auto const& l) { return l.endpoint.path; },
                [](auto& l, auto const& v) { l.endpoint.path = v; });
        add_llm("model", [](auto const& l) { return l.endpoint.model; },
                [](auto& l, auto const& v) { l.endpoint.model = v; });
        add_llm("temperature", [fd](auto const& l) { return fd(l.endpoint.temperature); },
                [d](auto& l, auto const& v) { l.endpoint.temperature = d(v); });
        add_llm("max_tokens", [fi](auto const& l) { return fi(l.endpoint.max_tokens); },
                [i](auto& l, auto const& v) { l.endpoint.max_tokens = i(v); });
        add_llm("supports_seed", [fb](auto const& l) { return fb(l.endpoint.supports_seed); },
                [b](auto& l, auto const& v) { l.endpoint.supports_seed = b(v); });
        add_llm("timeout_ms", [fms](auto const& l) { return fms(l.endpoint.timeout); },
                [ms](auto& l, auto const& v) { l.endpoint.timeout = ms(v); });
        add_llm("max_retries", [fi](auto const& l) { return fi(l.endpoint.max_retries); },
                [i](auto& l, auto const& v) { l.endpoint.max_retries = i(v); });
        add_llm("backoff_initial_ms", [fms](auto const& l) { return fms(l.endpoint.backoff_initial); },
                [ms](auto& l, auto const& v) { l.endpoint.backoff_initial = ms(v); });
        add_llm("backoff_max_ms", [fms](auto const& l) { return fms(l.endpoint.backoff_max); },
                [ms](auto& l, auto const& v) { l.endpoint.backoff_max = ms(v); });
        add_llm("max_in_flight", [fi](auto const& l) { return fi(l.endpoint.max_in_flight); },
                [i](auto& l, auto const& v) { l.endpoint.max_in_flight = i(v); });
        add_llm("requests_per_second", [fd](auto const& l) { return fd(l.endpoint.requests_per_second); },
                [d](auto& l, auto const& v) { l.endpoint.requests_per_second = d(v); });
        add_llm("answer_marker", [fs](auto const& l) { return fs(l.prompt.answer_marker); },
                [s](auto& l, auto const& v) { l.prompt.answer_marker = s(v); });
        add_llm("max_history_chars", [](auto const& l) { return std::to_string(l.prompt.max_history_chars); },
                [](auto& l, auto const& v) { l.prompt.max_history_chars = parse_uint(v); });
        add_llm("max_rollout_chars", [](auto const& l) { return std::to_string(l.prompt.max_rollout_chars); },
                [](auto& l, auto const& v) { l.prompt.max_rollout_chars = parse_uint(v); });
        add_llm("tasks", [](auto const& l) { return l.tasks; },
                [](auto& l, auto const& v) { l.tasks = v; });
        add_llm("skills", [](auto const& l) { return l.skills; },
                [](auto& l, auto const& v) { l.skills = v; });
        add_llm("cassettes", [](auto const& l) { return l.cassettes; },
                [](auto& l, auto const& v) { l.cassettes = v; });
        add_llm("cassette_mode", [](auto const& l) { return to_string(l.cassette_mode); },
                [](auto& l, auto const& v) { l.cassette_mode = cassette_mode_from(v); });
        add_llm("no_skills", [fb](auto const& l) { return fb(l.no_skills); },
                [b](auto& l, auto const& v) { l.no_skills = b(v); });
        add_llm("rollout_concurrency", [fi](auto const& l) { return fi(l.rollout_concurrency); },
                [i](auto& l, auto const& v) { l.rollout_concurrency = i(v); });
        return t;
    }();
    return table;
}
}  // namespace

void apply_setting(ExperimentConfig& cfg,
                   std::string const& section,
                   std::string const& key,
                   std::string const& value)
{
    if (section == "llm" && (key == "api_key" || key == "token"))
    {
        throw FormatError("credentials are read from the environment ("
                          + std::string(llm::kApiKeyEnv)
                          + "), not from config files");
    }
    for (auto const& e : entries())
    {
        if (section == e.section && key == e.key)
        {
            try
            {
                e.set(cfg, value);
            }
            catch (std::exception const&)
            {
                throw FormatError("[" + section + "] " + key + ": invalid value \""
                                  + value + "\"");
            }
            return;
        }
    }
    throw FormatError("unknown setting [" + section + "] " + key);
}

ExperimentConfig parse_config(std::string const& text, std::string const& origin)
{
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(is, line))
    {
        ++line_no;
        auto t = trim(strip_comment(line));
        if (t.empty())
            continue;
        auto where = origin + ":" + std::to_string(line_no) + ": ";
        if (t.front() == '[')
        {
            if (t.back() != ']')
                throw FormatError(where + "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section != "train" && section != "synthetic" && section != "llm")
                throw FormatError(where + "unknown section [" + section + "]");
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw FormatError(where + "expected 'key = value'");
        if (section.empty())
            throw FormatError(where + "setting outside of a section");
        try
        {
            apply_setting(cfg, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
        catch (FormatError const& e)
        {
            throw FormatError(where + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(std::filesystem::path const& path)
{
    std::ifstream is(path);
    if (!is)
        throw FormatError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string write_config(ExperimentConfig const& cfg)
{
    std::string out;
    std::string section;
    for (auto const& e : entries())
    {
        if (section != e.section)
        {
            if (!section.empty())
                out += '\n';
            section = e.section;
            out += "[" + section + "]\n";
        }
        out += std::string(e.key) + " = " + e.get(cfg) + "\n";
    }
    return out;
}

std::vector<std::string> validate_experiment(ExperimentConfig const& cfg)
{
    std::vector<std::string> errors;
    for (auto const& v : validate_config(cfg.train))
        errors.push_back(v.field + ": " + v.message);
    if (cfg.train.environment == EnvKind::synthetic)
    {
        try
        {
            cfg.synthetic.validate();
        }
        catch (PreconditionError const& e)
        {
            errors.emplace_back(e.what());
        }
    }
    else
    {
        if (cfg.llm.tasks.empty())
            errors.emplace_back("llm.tasks: task file required in llm mode");
        if (cfg.llm.skills.empty() && !cfg.llm.no_skills)
            errors.emplace_back("llm.skills: skill directory required unless "
                                "no_skills = true");
        if (cfg.llm.cassette_mode != CassetteMode::off && cfg.llm.cassettes.empty())
            errors.emplace_back("llm.cassettes: directory required for "
                                "cassette record/replay");
    }
    return errors;
}

}  // namespace skillr1::cli
