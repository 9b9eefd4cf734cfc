#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "tor/errors.hpp"

namespace tor {

struct ChatMessage {
    enum class Role { System, User, Assistant };
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage& other) const = default;
};

std::string chat_role_name(ChatMessage::Role role);

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 0;  // 0 means "backend default"
    std::string tag;     // "<role>/<phase>[/<round>.<turn>]"
};

struct ChatUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse {
    std::string content;
    ChatUsage usage;
    double latency_ms = 0.0;  // in-memory diagnostics only, never serialized
};

/// Stable digest of the request payload (messages and sampling parameters;
/// the tag is not part of the payload).
std::string request_digest(const ChatRequest& request);

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// One scripted exchange. Empty matcher fields are wildcards: `tag` is a glob
/// over the request tag, `contains` a substring over the concatenated message
/// contents, `request_digest` an exact digest match.
struct TranscriptEntry {
    std::string tag;
    std::string contains;
    std::string request_digest;
    std::string response;

    bool operator==(const TranscriptEntry& other) const = default;
};

struct Transcript {
    std::vector<TranscriptEntry> entries;
};

/// JSONL, one entry object per line.
Transcript load_transcript(const std::string& path);
void save_transcript(const Transcript& transcript, const std::string& path);

enum class ReplayMode { Strict, Lenient };

/// Replays a transcript instead of calling a model. Strict mode consumes
/// entries in order and every request must match the next unconsumed entry;
/// lenient mode answers with the first matching entry and entries are
/// reusable. Matching is serialized internally, so the backend is safe to
/// share across threads.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend(Transcript transcript, ReplayMode mode);

    ChatResponse complete(const ChatRequest& request) override;

    size_t consumed_count() const;
    size_t entry_count() const;

private:
    mutable std::mutex mutex_;
    Transcript transcript_;
    ReplayMode mode_;
    size_t cursor_ = 0;
};

struct RetryPolicy {
    int max_retries = 3;        // retries after the first attempt
    int initial_delay_ms = 500;
    double multiplier = 2.0;
    double timeout_seconds = 60.0;
};

struct HttpBackendConfig {
    std::string base_url;  // e.g. "http://localhost:8000/v1"
    std::string api_key;   // empty: resolved from TOR_API_KEY
    std::string model = "tor-default";
    RetryPolicy retry;
};

/// OpenAI-compatible chat client: POST {base_url}/chat/completions with
/// jittered exponential backoff on 429/5xx and transport timeouts.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    ChatResponse complete(const ChatRequest& request) override;

    /// Attempts made by the most recent complete() call.
    int last_attempt_count() const { return last_attempts_; }

private:
    HttpBackendConfig config_;
    std::mutex jitter_mutex_;
    int last_attempts_ = 0;
    std::uint64_t jitter_state_;
};

/// Decorator that captures every exchange as a transcript entry. When a path
/// is given, entries are also appended to the file as they happen.
class RecordingBackend : public Backend {
public:
    explicit RecordingBackend(Backend& inner, std::string path = "");

    ChatResponse complete(const ChatRequest& request) override;

    const Transcript& recorded() const { return recorded_; }
    void save(const std::string& path) const;

private:
    Backend& inner_;
    std::string path_;
    Transcript recorded_;
    std::mutex mutex_;
};

}  // namespace tor
