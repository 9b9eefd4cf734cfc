#include "tor/llm_backend.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "tor/io.hpp"
#include "tor/strings.hpp"

namespace tor {

namespace {

int approx_tokens(const std::string& text) {
    return static_cast<int>(tokenize(text).size());
}

std::string all_content(const ChatRequest& request) {
    std::string out;
    for (const ChatMessage& m : request.messages) out += m.content + "\n";
    return out;
}

bool entry_matches(const TranscriptEntry& entry, const ChatRequest& request,
                   const std::string& digest) {
    if (!entry.tag.empty() && !glob_match(entry.tag, request.tag)) return false;
    if (!entry.contains.empty() &&
        all_content(request).find(entry.contains) == std::string::npos)
        return false;
    if (!entry.request_digest.empty() && entry.request_digest != digest) return false;
    return true;
}

std::string transcript_entry_line(const TranscriptEntry& entry) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    doc["tag"] = entry.tag;
    if (!entry.contains.empty()) doc["contains"] = entry.contains;
    doc["request_digest"] = entry.request_digest;
    doc["response"] = entry.response;
    return doc.dump();
}

}  // namespace

std::string chat_role_name(ChatMessage::Role role) {
    switch (role) {
        case ChatMessage::Role::System: return "system";
        case ChatMessage::Role::User: return "user";
        case ChatMessage::Role::Assistant: return "assistant";
    }
    return "user";
}

std::string request_digest(const ChatRequest& request) {
    std::string data;
    for (const ChatMessage& m : request.messages) {
        data += chat_role_name(m.role);
        data += '\x1f';
        data += m.content;
        data += '\x1e';
    }
    char params[64];
    std::snprintf(params, sizeof(params), "t=%.6f;m=%d", request.temperature,
                  request.max_tokens);
    data += params;
    return fnv1a_hex(data);
}

Transcript load_transcript(const std::string& path) {
    std::string text = read_text_file(path);
    Transcript transcript;
    int line_no = 0;
    for (const std::string& line : split(text, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(line_no, "(line)", std::string("invalid json: ") + e.what());
        }
        if (!doc.is_object() || !doc.contains("response"))
            throw SchemaError(line_no, "response", "transcript entries need a response");
        TranscriptEntry entry;
        entry.tag = doc.value("tag", std::string());
        entry.contains = doc.value("contains", std::string());
        entry.request_digest = doc.value("request_digest", std::string());
        entry.response = doc["response"].get<std::string>();
        transcript.entries.push_back(std::move(entry));
    }
    return transcript;
}

void save_transcript(const Transcript& transcript, const std::string& path) {
    std::string out;
    for (const TranscriptEntry& entry : transcript.entries)
        out += transcript_entry_line(entry) + "\n";
    write_text_file(path, out);
}

ScriptedBackend::ScriptedBackend(Transcript transcript, ReplayMode mode)
    : transcript_(std::move(transcript)), mode_(mode) {}

size_t ScriptedBackend::consumed_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cursor_;
}

size_t ScriptedBackend::entry_count() const { return transcript_.entries.size(); }

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::string digest = request_digest(request);

    const TranscriptEntry* matched = nullptr;
    if (mode_ == ReplayMode::Strict) {
        if (cursor_ >= transcript_.entries.size())
            throw BackendError(BackendError::Kind::NoMatch,
                               "transcript exhausted at request '" + request.tag + "'",
                               0, request.tag);
        const TranscriptEntry& next = transcript_.entries[cursor_];
        if (!entry_matches(next, request, digest))
            throw BackendError(
                BackendError::Kind::NoMatch,
                "request '" + request.tag + "' does not match transcript entry " +
                    std::to_string(cursor_) + " (tag pattern '" + next.tag + "')",
                0, request.tag);
        matched = &next;
        ++cursor_;
    } else {
        for (const TranscriptEntry& entry : transcript_.entries) {
            if (entry_matches(entry, request, digest)) {
                matched = &entry;
                break;
            }
        }
        if (!matched)
            throw BackendError(BackendError::Kind::NoMatch,
                               "no transcript entry matches request '" + request.tag + "'",
                               0, request.tag);
    }

    ChatResponse response;
    response.content = matched->response;
    response.usage.prompt_tokens = approx_tokens(all_content(request));
    response.usage.completion_tokens = approx_tokens(matched->response);
    response.latency_ms = 0.0;
    return response;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), jitter_state_(0x7052u) {
    if (config_.api_key.empty()) {
        const char* env = std::getenv("TOR_API_KEY");
        if (env) config_.api_key = env;
    }
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    std::string base = config_.base_url;
    while (!base.empty() && base.back() == '/') base.pop_back();
    if (base.empty())
        throw InvalidConfig("http backend requires a base url");

    // split scheme://host[:port] from the path prefix
    std::string host = base;
    std::string prefix;
    size_t scheme = base.find("://");
    size_t path_start = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start != std::string::npos) {
        host = base.substr(0, path_start);
        prefix = base.substr(path_start);
    }

    nlohmann::ordered_json payload;
    payload["model"] = config_.model;
    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    for (const ChatMessage& m : request.messages)
        messages.push_back({{"role", chat_role_name(m.role)}, {"content", m.content}});
    payload["messages"] = messages;
    payload["temperature"] = request.temperature;
    if (request.max_tokens > 0) payload["max_tokens"] = request.max_tokens;
    std::string body = payload.dump();

    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    const int attempts_allowed = config_.retry.max_retries + 1;
    double delay_ms = static_cast<double>(config_.retry.initial_delay_ms);
    int last_status = 0;
    bool last_was_timeout = false;
    std::string last_detail;
    last_attempts_ = 0;

    for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
        ++last_attempts_;
        httplib::Client client(host);
        auto timeout = std::chrono::milliseconds(
            static_cast<long long>(config_.retry.timeout_seconds * 1000.0));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto started = std::chrono::steady_clock::now();
        httplib::Result result =
            client.Post(prefix + "/chat/completions", headers, body, "application/json");

        if (result && result->status == 200) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(result->body);
            } catch (const nlohmann::json::exception& e) {
                throw BackendError(BackendError::Kind::Http,
                                   std::string("unparseable completion body: ") + e.what(),
                                   200, request.tag);
            }
            if (!doc.contains("choices") || doc["choices"].empty() ||
                !doc["choices"][0].contains("message"))
                throw BackendError(BackendError::Kind::Http,
                                   "completion body has no choices[0].message", 200,
                                   request.tag);
            ChatResponse response;
            response.content =
                doc["choices"][0]["message"].value("content", std::string());
            if (doc.contains("usage")) {
                response.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
                response.usage.completion_tokens =
                    doc["usage"].value("completion_tokens", 0);
            }
            response.latency_ms =
                std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - started)
                    .count();
            return response;
        }

        bool retryable;
        if (result) {
            last_status = result->status;
            last_was_timeout = false;
            last_detail = "http status " + std::to_string(result->status);
            retryable = result->status == 429 || result->status >= 500;
            if (!retryable)
                throw BackendError(BackendError::Kind::Http,
                                   "request '" + request.tag + "' failed: " + last_detail,
                                   result->status, request.tag);
        } else {
            last_status = 0;
            last_was_timeout = true;
            last_detail = "transport error: " + httplib::to_string(result.error());
            retryable = true;
        }

        if (attempt + 1 < attempts_allowed) {
            // xorshift-based jitter in [0.5, 1.0); independent of run RNG
            double jitter;
            {
                std::lock_guard<std::mutex> lock(jitter_mutex_);
                jitter_state_ ^= jitter_state_ << 13;
                jitter_state_ ^= jitter_state_ >> 7;
                jitter_state_ ^= jitter_state_ << 17;
                jitter = 0.5 + 0.5 * static_cast<double>(jitter_state_ % 1000) / 1000.0;
            }
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long long>(delay_ms * jitter)));
            delay_ms *= config_.retry.multiplier;
        }
    }

    if (last_was_timeout)
        throw BackendError(BackendError::Kind::Timeout,
                           "request '" + request.tag + "' timed out after " +
                               std::to_string(last_attempts_) + " attempts (" +
                               last_detail + ")",
                           0, request.tag);
    throw BackendError(BackendError::Kind::Exhausted,
                       "request '" + request.tag + "' failed after " +
                           std::to_string(last_attempts_) + " attempts (" + last_detail +
                           ")",
                       last_status, request.tag);
}

RecordingBackend::RecordingBackend(Backend& inner, std::string path)
    : inner_(inner), path_(std::move(path)) {
    if (!path_.empty()) write_text_file(path_, "");  // truncate up front
}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
    ChatResponse response = inner_.complete(request);
    TranscriptEntry entry;
    entry.tag = request.tag;
    entry.request_digest = request_digest(request);
    entry.response = response.content;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        recorded_.entries.push_back(entry);
        if (!path_.empty()) {
            std::ofstream out(path_, std::ios::app);
            out << transcript_entry_line(entry) << "\n";
        }
    }
    return response;
}

void RecordingBackend::save(const std::string& path) const {
    save_transcript(recorded_, path);
}

}  // namespace tor
