#include "skillr1/llm/chat_client.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "skillr1/env.hpp"

namespace skillr1::llm
{
using Json = nlohmann::ordered_json;

std::string encode_request(ChatRequest const& request)
{
    Json j;
    j["model"] = request.model;
    Json messages = Json::array();
    for (auto const& m : request.messages)
    {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    j["messages"] = std::move(messages);
    j["temperature"] = request.temperature;
    j["max_tokens"] = request.max_tokens;
    if (request.seed)
        j["seed"] = *request.seed;
    return j.dump();
}

std::string parse_completion(std::string const& body)
{
    Json j;
    try
    {
        j = Json::parse(body);
        auto const& content = j.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string{} : content.get<std::string>();
    }
    catch (Json::exception const& e)
    {
        throw PortError(std::string("malformed chat-completions response: ")
                        + e.what());
    }
}

//---------------------------------------------------------------------------//

HttpTransport::HttpTransport(std::string base_url,
                             std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout)
{
}

HttpResponse HttpTransport::post(std::string const& path,
                                 std::string const& body,
                                 Headers const& headers)
{
    httplib::Client client(base_url_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers hdrs;
    for (auto const& [k, v] : headers)
        hdrs.emplace(k, v);

    HttpResponse out;
    auto res = client.Post(path, hdrs, body, "application/json");
    if (!res)
    {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

//---------------------------------------------------------------------------//

std::string cassette_name(std::string const& request_body)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : request_body)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%016llx.cassette",
                  static_cast<unsigned long long>(h));
    return buf;
}

void write_cassette(std::filesystem::path const& file, Cassette const& c)
{
    std::ofstream os(file, std::ios::binary);
    if (!os)
        throw FormatError("cannot write cassette " + file.string());
    os << "skillr1-cassette 1\n"
       << "path: " << c.path << '\n'
       << "status: " << c.status << '\n'
       << "request-bytes: " << c.request_body.size() << '\n'
       << "response-bytes: " << c.response_body.size() << '\n'
       << '\n'
       << c.request_body << '\n'
       << c.response_body << '\n';
}

Cassette read_cassette(std::filesystem::path const& file)
{
    std::ifstream is(file, std::ios::binary);
    if (!is)
        throw FormatError("cannot read cassette " + file.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    std::string const data = ss.str();

    auto fail = [&file](std::string const& what) -> Cassette {
        throw FormatError("cassette " + file.string() + ": " + what);
    };

    std::size_t pos = 0;
    auto next_line = [&]() -> std::optional<std::string> {
        auto nl = data.find('\n', pos);
        if (nl == std::string::npos)
            return std::nullopt;
        auto line = data.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };

    if (next_line() != std::optional<std::string>("skillr1-cassette 1"))
        return fail("missing 'skillr1-cassette 1' header");

    Cassette c;
    std::size_t req_bytes = 0, resp_bytes = 0;
    bool have_req = false, have_resp = false;
    while (true)
    {
        auto line = next_line();
        if (!line)
            return fail("unterminated header");
        if (line->empty())
            break;
        auto colon = line->find(": ");
        if (colon == std::string::npos)
            return fail("bad header line \"" + *line + "\"");
        auto key = line->substr(0, colon);
        auto value = line->substr(colon + 2);
        try
        {
            if (key == "path")
                c.path = value;
            else if (key == "status")
                c.status = std::stoi(value);
            else if (key == "request-bytes")
                req_bytes = std::stoull(value), have_req = true;
            else if (key == "response-bytes")
                resp_bytes = std::stoull(value), have_resp = true;
        }
        catch (std::exception const&)
        {
            return fail("bad value for " + key);
        }
    }
    if (!have_req || !have_resp)
        return fail("missing byte counts");
    if (data.size() < pos + req_bytes + 1 + resp_bytes + 1)
        return fail("truncated body");
    c.request_body = data.substr(pos, req_bytes);
    pos += req_bytes + 1;
    c.response_body = data.substr(pos, resp_bytes);
    return c;
}

CassetteReplay::CassetteReplay(std::filesystem::path const& dir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw FormatError("cassette directory " + dir.string() + " not found");
    std::vector<fs::path> files;
    for (auto const& entry : fs::directory_iterator(dir))
    {
        if (entry.is_regular_file() && entry.path().extension() == ".cassette")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (auto const& f : files)
    {
        auto c = read_cassette(f);
        auto key = c.request_body;
        cassettes_.emplace(std::move(key), std::move(c));
    }
}

HttpResponse CassetteReplay::post(std::string const& path,
                                  std::string const& body,
                                  Headers const&)
{
    HttpResponse out;
    auto it = cassettes_.find(body);
    if (it == cassettes_.end() || it->second.path != path)
    {
        // Not retryable: a replay never gains a recording by waiting
        out.status = 404;
        out.body = "no cassette recorded for this request ("
                   + cassette_name(body) + ")";
        return out;
    }
    out.status = it->second.status;
    out.body = it->second.response_body;
    return out;
}

CassetteRecorder::CassetteRecorder(Transport& inner, std::filesystem::path dir)
    : inner_(inner), dir_(std::move(dir))
{
    std::filesystem::create_directories(dir_);
}

HttpResponse CassetteRecorder::post(std::string const& path,
                                    std::string const& body,
                                    Headers const& headers)
{
    auto res = inner_.post(path, body, headers);
    if (res.status == 200)
    {
        std::lock_guard lock(mutex_);
        write_cassette(dir_ / cassette_name(body),
                       Cassette{path, res.status, body, res.body});
    }
    return res;
}

//---------------------------------------------------------------------------//

EndpointConfig with_environment(EndpointConfig cfg)
{
    if (char const* url = std::getenv(kBaseUrlEnv); url && *url)
        cfg.base_url = url;
    if (char const* key = std::getenv(kApiKeyEnv); key && *key)
        cfg.api_key = key;
    return cfg;
}

TokenBucket& TokenBucket::global()
{
    static TokenBucket bucket;
    return bucket;
}

void TokenBucket::acquire(double rate_per_second)
{
    if (!(rate_per_second > 0))
        return;
    using namespace std::chrono;
    while (true)
    {
        duration<double> wait{};
        {
            std::lock_guard lock(mutex_);
            auto now = steady_clock::now();
            double elapsed = duration<double>(now - last_).count();
            last_ = now;
            tokens_ = std::min(1.0, tokens_ + elapsed * rate_per_second);
            if (tokens_ >= 1.0)
            {
                tokens_ -= 1.0;
                return;
            }
            wait = duration<double>((1.0 - tokens_) / rate_per_second);
        }
        std::this_thread::sleep_for(wait);
    }
}

ChatClient::ChatClient(EndpointConfig cfg,
                       Transport& transport,
                       EventLog* log,
                       Sleeper sleeper)
    : cfg_(std::move(cfg))
    , transport_(transport)
    , log_(log)
    , sleeper_(sleeper ? std::move(sleeper)
                       : [](std::chrono::milliseconds d) {
                             std::this_thread::sleep_for(d);
                         })
{
}

std::chrono::milliseconds ChatClient::backoff(int attempt) const
{
    auto delay = cfg_.backoff_initial;
    for (int i = 0; i < attempt && delay < cfg_.backoff_max; ++i)
        delay *= 2;
    return std::min(delay, cfg_.backoff_max);
}

namespace
{
std::int64_t now_ms()
{
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch())
        .count();
}

bool retryable(HttpResponse const& r)
{
    return r.status == 0 || r.status == 429 || r.status >= 500;
}
}  // namespace

std::string ChatClient::complete(ChatRequest const& request,
                                 std::string const& request_id)
{
    auto body = encode_request(request);
    Headers headers{{"Accept", "application/json"}};
    if (!cfg_.api_key.empty())
        headers.emplace_back("Authorization", "Bearer " + cfg_.api_key);

    {
        std::unique_lock lock(flight_mutex_);
        flight_cv_.wait(lock, [this] {
            return in_flight_ < std::max(cfg_.max_in_flight, 1);
        });
        ++in_flight_;
    }
    struct Release
    {
        ChatClient* self;
        ~Release()
        {
            {
                std::lock_guard lock(self->flight_mutex_);
                --self->in_flight_;
            }
            self->flight_cv_.notify_one();
        }
    } release{this};

    HttpResponse res;
    for (int attempt = 0;; ++attempt)
    {
        TokenBucket::global().acquire(cfg_.requests_per_second);
        if (log_)
        {
            log_->emit("llm_request",
                       {{"request_id", request_id},
                        {"attempt", std::int64_t{attempt}},
                        {"timestamp_ms", now_ms()},
                        {"bytes", static_cast<std::uint64_t>(body.size())},
                        {"body", body}});
        }
        res = transport_.post(cfg_.path, body, headers);
        if (log_)
        {
            log_->emit("llm_response",
                       {{"request_id", request_id},
                        {"attempt", std::int64_t{attempt}},
                        {"timestamp_ms", now_ms()},
                        {"status", std::int64_t{res.status}},
                        {"bytes", static_cast<std::uint64_t>(res.body.size())},
                        {"body", res.body}});
        }
        if (res.status == 200)
            break;
        if (!retryable(res) || attempt >= cfg_.max_retries)
        {
            std::string detail = res.status == 0
                                     ? "transport error: " + res.error
                                     : "HTTP " + std::to_string(res.status);
            throw PortError("request " + request_id + ": " + detail + " after "
                            + std::to_string(attempt + 1) + " attempt(s)");
        }
        sleeper_(backoff(attempt));
    }

    try
    {
        return parse_completion(res.body);
    }
    catch (PortError const& e)
    {
        throw PortError("request " + request_id + ": " + e.what());
    }
}

}  // namespace skillr1::llm
