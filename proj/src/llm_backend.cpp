#include "logcog/llm_backend.hpp"

#include "logcog/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

namespace logcog {

namespace {

constexpr const char* kModule = "llm_backend";
constexpr std::string_view kEnvelopeKey = "CTX score=";
constexpr std::string_view kQueryMarker = "Log entry under analysis:";
constexpr std::string_view kReferenceMarker = "Closest known-normal entry:";

class HttplibTransport final : public HttpTransport {
public:
    HttplibTransport(std::string endpoint_url, int timeout_ms)
        : endpoint_url_(std::move(endpoint_url)), timeout_ms_(timeout_ms) {}

    HttpReply post(const std::string& path, const HttpHeaders& headers, const std::string& body) override {
        // A client per call keeps concurrent posts independent.
        httplib::Client client(endpoint_url_);
        const auto secs = timeout_ms_ / 1000;
        const auto usecs = (timeout_ms_ % 1000) * 1000;
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers h(headers.begin(), headers.end());
        auto res = client.Post(path, h, body, "application/json");
        if (!res) {
            const auto err = res.error();
            const auto code = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout
                                  ? Errc::Timeout
                                  : Errc::TransportFailure;
            throw Error(code, kModule, "POST " + endpoint_url_ + path + ": " + httplib::to_string(err));
        }
        return HttpReply{res->status, res->body};
    }

private:
    std::string endpoint_url_;
    int timeout_ms_;
};

ChatResponse parse_completion(const std::string& body) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(Errc::ProtocolError, kModule, "reply is not a JSON object");
    }
    const auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) {
        throw Error(Errc::ProtocolError, kModule, "reply has no choices");
    }
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
        !first["message"].contains("content") || !first["message"]["content"].is_string()) {
        throw Error(Errc::ProtocolError, kModule, "choices[0].message.content missing");
    }
    ChatResponse out;
    out.text = first["message"]["content"].get<std::string>();
    if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
        if (usage->contains("prompt_tokens") && (*usage)["prompt_tokens"].is_number_integer()) {
            out.prompt_tokens = (*usage)["prompt_tokens"].get<std::int64_t>();
        }
        if (usage->contains("completion_tokens") && (*usage)["completion_tokens"].is_number_integer()) {
            out.completion_tokens = (*usage)["completion_tokens"].get<std::int64_t>();
        }
    }
    return out;
}

std::string line_after(const ChatRequest& request, std::string_view marker) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        const auto& text = it->content;
        const auto pos = text.rfind(marker);
        if (pos == std::string::npos) continue;
        auto start = pos + marker.size();
        while (start < text.size() && text[start] == ' ') ++start;
        const auto end = text.find('\n', start);
        return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    }
    return "(not provided)";
}

} // namespace

std::string_view role_name(Role role) noexcept {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

void ChatRequest::validate() const {
    bool has_user = false;
    for (const auto& m : messages) {
        if (m.content.empty()) {
            throw Error(Errc::InvalidRequest, kModule, "message content must be non-empty");
        }
        has_user = has_user || m.role == Role::User;
    }
    if (!has_user) {
        throw Error(Errc::InvalidRequest, kModule, "request needs at least one user message");
    }
    if (!(temperature >= 0.0)) {
        throw Error(Errc::InvalidRequest, kModule, "temperature must be >= 0");
    }
    if (max_tokens < 1) {
        throw Error(Errc::InvalidRequest, kModule, "max_tokens must be >= 1");
    }
}

std::string ChatRequest::to_wire_json() const {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    }
    nlohmann::json body = {
        {"model", model_id}, {"messages", msgs}, {"temperature", temperature}, {"max_tokens", max_tokens}};
    return body.dump();
}

void ChatBackend::set_recording(bool enabled) {
    std::lock_guard lock(transcript_mutex_);
    recording_ = enabled;
}

std::vector<TranscriptEntry> ChatBackend::transcript() const {
    std::lock_guard lock(transcript_mutex_);
    return transcript_;
}

void ChatBackend::clear_transcript() {
    std::lock_guard lock(transcript_mutex_);
    transcript_.clear();
}

void ChatBackend::record(const ChatRequest& request, const ChatResponse& response) {
    std::lock_guard lock(transcript_mutex_);
    if (recording_) {
        transcript_.push_back(TranscriptEntry{request, response});
    }
}

AdmissionLimiter::AdmissionLimiter(std::size_t limit) : limit_(limit) {
    if (limit_ == 0) {
        throw Error(Errc::InvalidConfig, kModule, "max_in_flight must be >= 1");
    }
}

void AdmissionLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return in_use_ < limit_; });
    ++in_use_;
}

void AdmissionLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        --in_use_;
    }
    cv_.notify_one();
}

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& endpoint_url, int timeout_ms) {
    return std::make_unique<HttplibTransport>(endpoint_url, timeout_ms);
}

void BackendConfig::validate() const {
    auto bad = [](const std::string& why) { throw Error(Errc::InvalidConfig, kModule, why); };
    if (max_in_flight < 1) bad("max_in_flight must be >= 1");
    if (timeout_ms <= 0) bad("timeout_ms must be > 0");
    if (max_retries < 0) bad("max_retries must be >= 0");
    if (retry_backoff_ms < 0) bad("retry_backoff_ms must be >= 0");
    if (kind == BackendKind::Http && endpoint_url.empty()) bad("http backend '" + name + "' needs endpoint_url");
    if (kind == BackendKind::Mock && (mock.threshold < -1.0 || mock.threshold > 1.0)) {
        bad("mock threshold must lie in [-1, 1]");
    }
}

HttpBackend::HttpBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)), limiter_(config_.max_in_flight) {
    config_.validate();
    if (!transport_) {
        transport_ = make_httplib_transport(config_.endpoint_url, config_.timeout_ms);
    }
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    request.validate();
    ChatRequest wire = request;
    if (wire.model_id.empty()) wire.model_id = config_.model_id;
    const std::string body = wire.to_wire_json();

    HttpHeaders headers;
    if (!config_.api_key_env.empty()) {
        if (const char* token = std::getenv(config_.api_key_env.c_str()); token && *token) {
            headers.emplace_back("Authorization", std::string("Bearer ") + token);
        }
    }

    const auto started = std::chrono::steady_clock::now();
    const int max_attempts = config_.max_retries + 1;
    int backoff = config_.retry_backoff_ms;
    Errc last_code = Errc::TransportFailure;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        HttpReply reply;
        try {
            AdmissionLimiter::Slot slot(limiter_);
            reply = transport_->post(config_.path, headers, body);
        } catch (const Error& e) {
            if (e.code() != Errc::Timeout && e.code() != Errc::TransportFailure) throw;
            last_code = e.code();
            last_error = e.what();
            continue;
        }
        if (reply.status >= 500) {
            last_code = Errc::TransportFailure;
            last_error = "HTTP " + std::to_string(reply.status);
            continue;
        }
        if (reply.status != 200) {
            throw Error(Errc::TransportFailure, kModule,
                        "HTTP " + std::to_string(reply.status) + " from " + config_.endpoint_url + config_.path);
        }
        ChatResponse response = parse_completion(reply.body);
        response.attempts = attempt;
        response.latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        record(request, response);
        return response;
    }
    throw Error(last_code, kModule,
                "giving up after " + std::to_string(max_attempts) + " attempts: " + last_error);
}

MockBackend::MockBackend(MockRule rule) : rule_(std::move(rule)) {}

std::string MockBackend::oracle_reply(double score, double threshold, std::string_view query_log,
                                      std::string_view retrieved_log) {
    char numbers[96];
    std::snprintf(numbers, sizeof numbers, "%.4f against a threshold of %.4f", score, threshold);
    std::string reply = "The entry \"";
    reply += query_log;
    reply += "\" was compared with the closest known-normal entry \"";
    reply += retrieved_log;
    reply += "\". Their similarity is ";
    reply += numbers;
    if (score < threshold) {
        reply += ", so the entry departs from the reference behaviour.\nVERDICT: ANOMALY";
    } else {
        reply += ", so the entry matches the reference behaviour.\nVERDICT: NORMAL";
    }
    return reply;
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
    request.validate();
    const auto started = std::chrono::steady_clock::now();
    ChatResponse response;
    if (rule_.mode == MockMode::Scripted) {
        std::lock_guard lock(mutex_);
        if (cursor_ >= rule_.script.size()) {
            throw Error(Errc::ScriptExhausted, kModule,
                        "script exhausted after " + std::to_string(rule_.script.size()) + " replies");
        }
        response.text = rule_.script[cursor_++];
    } else {
        const auto score = find_envelope_score(request);
        if (!score) {
            throw Error(Errc::ProtocolError, kModule, "prompt carries no 'CTX score=' envelope line");
        }
        response.text = oracle_reply(*score, rule_.threshold, line_after(request, kQueryMarker),
                                     line_after(request, kReferenceMarker));
    }
    response.attempts = 1;
    response.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    record(request, response);
    return response;
}

std::optional<double> find_envelope_score(const ChatRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        const auto& text = it->content;
        const auto pos = text.rfind(kEnvelopeKey);
        if (pos == std::string::npos) continue;
        const char* begin = text.c_str() + pos + kEnvelopeKey.size();
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end == begin || !std::isfinite(value)) return std::nullopt;
        return value;
    }
    return std::nullopt;
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
    config.validate();
    if (config.kind == BackendKind::Http) {
        return std::make_unique<HttpBackend>(config);
    }
    return std::make_unique<MockBackend>(config.mock);
}

} // namespace logcog
