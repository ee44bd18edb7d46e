#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace logcog {

enum class Role { System, User, Assistant };

std::string_view role_name(Role role) noexcept;

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 512;
    /// Caller-side tag (e.g. the record id) kept in the transcript; never sent.
    std::string correlation_id;

    /// Throws Error{InvalidRequest} unless there is a user message, every
    /// content is non-empty, temperature >= 0 and max_tokens >= 1.
    void validate() const;
    /// Wire body: exactly {model, messages, temperature, max_tokens}.
    std::string to_wire_json() const;
};

struct ChatResponse {
    std::string text;
    std::optional<std::int64_t> prompt_tokens;
    std::optional<std::int64_t> completion_tokens;
    double latency_ms = 0.0;
    int attempts = 1;
};

struct TranscriptEntry {
    ChatRequest request;
    ChatResponse response;
};

/// Chat-completion interface shared by the HTTP client and the mock.
/// `complete` is safe to call from several threads.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    virtual ChatResponse complete(const ChatRequest& request) = 0;

    void set_recording(bool enabled);
    /// Completed calls in completion order. Empty while recording is off.
    std::vector<TranscriptEntry> transcript() const;
    void clear_transcript();

protected:
    void record(const ChatRequest& request, const ChatResponse& response);

private:
    mutable std::mutex transcript_mutex_;
    bool recording_ = false;
    std::vector<TranscriptEntry> transcript_;
};

/// Counting semaphore bounding concurrent work.
class AdmissionLimiter {
public:
    explicit AdmissionLimiter(std::size_t limit);

    void acquire();
    void release();
    std::size_t limit() const noexcept { return limit_; }

    class Slot {
    public:
        explicit Slot(AdmissionLimiter& l) : limiter_(l) { limiter_.acquire(); }
        ~Slot() { limiter_.release(); }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        AdmissionLimiter& limiter_;
    };

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t limit_;
    std::size_t in_use_ = 0;
};

struct HttpReply {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// One POST round trip. Implementations throw Error{Timeout} or
/// Error{TransportFailure} when no HTTP reply was obtained.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpReply post(const std::string& path, const HttpHeaders& headers, const std::string& body) = 0;
};

/// cpp-httplib based transport for "http://host:port" endpoints.
std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& endpoint_url, int timeout_ms);

enum class BackendKind { Http, Mock };
enum class MockMode { Scripted, SimilarityOracle };

struct MockRule {
    MockMode mode = MockMode::SimilarityOracle;
    std::vector<std::string> script;
    double threshold = 0.85;
};

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    /// Display name used in reports (row label).
    std::string name;
    std::string endpoint_url;
    std::string path = "/v1/chat/completions";
    std::string model_id;
    int timeout_ms = 120000;
    int max_retries = 2;
    int retry_backoff_ms = 500;
    std::size_t max_in_flight = 1;
    /// Environment variable holding an optional bearer token.
    std::string api_key_env = "LOGCOG_API_KEY";
    MockRule mock;

    /// Throws Error{InvalidConfig}.
    void validate() const;
};

/// Client for the chat-completions JSON protocol. Retries HTTP 5xx, timeouts
/// and connection failures up to `max_retries` times with doubling backoff;
/// 4xx replies fail immediately. At most `max_in_flight` requests are on the
/// wire at once.
class HttpBackend final : public ChatBackend {
public:
    explicit HttpBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport = nullptr);

    ChatResponse complete(const ChatRequest& request) override;
    const BackendConfig& config() const noexcept { return config_; }

private:
    BackendConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    AdmissionLimiter limiter_;
};

/// Deterministic stand-in for a model.
///
/// Scripted: replies with the script entries in order, then fails with
/// Error{ScriptExhausted}. SimilarityOracle: reads the "CTX score=<x>"
/// envelope line from the prompt and answers "VERDICT: ANOMALY" when
/// x < threshold, otherwise "VERDICT: NORMAL".
class MockBackend final : public ChatBackend {
public:
    explicit MockBackend(MockRule rule);

    ChatResponse complete(const ChatRequest& request) override;

    static std::string oracle_reply(double score, double threshold, std::string_view query_log,
                                    std::string_view retrieved_log);

private:
    MockRule rule_;
    std::mutex mutex_;
    std::size_t cursor_ = 0;
};

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config);

/// Last "CTX score=<x>" value found in the request's messages, if any.
std::optional<double> find_envelope_score(const ChatRequest& request);

} // namespace logcog
