#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skillr1/event_log.hpp"

namespace skillr1::llm
{
//---------------------------------------------------------------------------//
// Wire format
//---------------------------------------------------------------------------//

struct ChatMessage
{
    std::string role;
    std::string content;

    bool operator==(ChatMessage const&) const = default;
};

struct ChatRequest
{
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    int max_tokens = 1024;
    std::optional<std::uint64_t> seed;
};

//! Canonical JSON body for POST /chat/completions
std::string encode_request(ChatRequest const& request);

//! choices[0].message.content of a chat-completions response body
std::string parse_completion(std::string const& body);

//---------------------------------------------------------------------------//
// Transports
//---------------------------------------------------------------------------//

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse
{
    int status = 0;  //!< 0 when the request never got a response
    std::string body;
    std::string error;  //!< transport-level failure description
};

class Transport
{
  public:
    virtual ~Transport() = default;
    virtual HttpResponse
    post(std::string const& path, std::string const& body, Headers const& headers)
        = 0;
};

//! Plain HTTP(S) transport to a base URL such as "http://127.0.0.1:8080"
class HttpTransport final : public Transport
{
  public:
    HttpTransport(std::string base_url, std::chrono::milliseconds timeout);

    HttpResponse post(std::string const& path,
                      std::string const& body,
                      Headers const& headers) override;

  private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

/*!
 * One recorded request/response pair.
 *
 * File layout: a "skillr1-cassette 1" line, "key: value" header lines
 * (path, status, request-bytes, response-bytes), a blank line, then the
 * request body and the response body verbatim, each followed by '\n'.
 */
struct Cassette
{
    std::string path;
    int status = 200;
    std::string request_body;
    std::string response_body;
};

void write_cassette(std::filesystem::path const& file, Cassette const& cassette);
Cassette read_cassette(std::filesystem::path const& file);

//! Stable file name for a request body
std::string cassette_name(std::string const& request_body);

//! Serves responses recorded in a directory, matched on exact request bytes
class CassetteReplay final : public Transport
{
  public:
    explicit CassetteReplay(std::filesystem::path const& dir);

    HttpResponse post(std::string const& path,
                      std::string const& body,
                      Headers const& headers) override;

    std::size_t size() const { return cassettes_.size(); }

  private:
    std::map<std::string, Cassette> cassettes_;
};

//! Forwards to another transport and records every exchange
class CassetteRecorder final : public Transport
{
  public:
    CassetteRecorder(Transport& inner, std::filesystem::path dir);

    HttpResponse post(std::string const& path,
                      std::string const& body,
                      Headers const& headers) override;

  private:
    Transport& inner_;
    std::filesystem::path dir_;
    std::mutex mutex_;
};

//---------------------------------------------------------------------------//
// Client
//---------------------------------------------------------------------------//

struct EndpointConfig
{
    std::string base_url = "http://127.0.0.1:8080";
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o-mini";
    std::string api_key;  //!< only ever filled from the environment
    double temperature = 0.7;
    int max_tokens = 1024;
    bool supports_seed = false;
    std::chrono::milliseconds timeout{60000};
    int max_retries = 3;
    std::chrono::milliseconds backoff_initial{500};
    std::chrono::milliseconds backoff_max{8000};
    int max_in_flight = 4;
    double requests_per_second = 0;  //!< 0 disables rate limiting
};

//! Environment variable holding the endpoint base URL
inline constexpr char const* kBaseUrlEnv = "SKILLR1_BASE_URL";
//! Environment variable holding the bearer token
inline constexpr char const* kApiKeyEnv = "SKILLR1_API_KEY";

//! Overlay base URL and credentials from the environment
EndpointConfig with_environment(EndpointConfig cfg);

//! Process-wide token bucket shared by every client
class TokenBucket
{
  public:
    static TokenBucket& global();

    //! Block until a token is available at the given rate
    void acquire(double rate_per_second);

  private:
    std::mutex mutex_;
    double tokens_ = 1;
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

/*!
 * Chat-completions client with bounded retries.
 *
 * Transport failures, 429, and 5xx responses retry with exponential
 * backoff (initial * 2^attempt, capped) up to max_retries; other failures
 * raise PortError immediately. Requests and responses are logged with
 * timestamps and byte sizes when an event log is attached.
 */
class ChatClient
{
  public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    ChatClient(EndpointConfig cfg,
               Transport& transport,
               EventLog* log = nullptr,
               Sleeper sleeper = {});

    //! Returns the completion text
    std::string complete(ChatRequest const& request,
                         std::string const& request_id);

    EndpointConfig const& config() const { return cfg_; }

    //! Delay before retry \c attempt (0-based)
    std::chrono::milliseconds backoff(int attempt) const;

  private:
    EndpointConfig cfg_;
    Transport& transport_;
    EventLog* log_;
    Sleeper sleeper_;

    std::mutex flight_mutex_;
    std::condition_variable flight_cv_;
    int in_flight_ = 0;
};

}  // namespace skillr1::llm
