#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tor/io.hpp"
#include "tor/strings.hpp"

namespace tor {

/// One workflow event. The payload itself is never stored, only its digest,
/// so traces stay small and byte-stable across runs.
struct TraceEvent {
    int seq = 0;
    std::string phase;  // config, call, response, repair, anomaly, snapshot
    std::string tag;
    std::string payload_digest;

    bool operator==(const TraceEvent& other) const = default;
};

class Trace {
public:
    void add(const std::string& phase, const std::string& tag,
             const std::string& payload) {
        events_.push_back({static_cast<int>(events_.size()) + 1, phase, tag,
                           fnv1a_hex(payload)});
    }

    const std::vector<TraceEvent>& events() const { return events_; }

    std::vector<std::string> tags(const std::string& phase) const {
        std::vector<std::string> out;
        for (const auto& e : events_)
            if (e.phase == phase) out.push_back(e.tag);
        return out;
    }

    size_t count(const std::string& phase) const {
        size_t n = 0;
        for (const auto& e : events_)
            if (e.phase == phase) ++n;
        return n;
    }

    std::string to_jsonl() const {
        std::string out;
        for (const auto& e : events_) {
            nlohmann::ordered_json j;
            j["seq"] = e.seq;
            j["phase"] = e.phase;
            j["tag"] = e.tag;
            j["payload_digest"] = e.payload_digest;
            out += j.dump();
            out += "\n";
        }
        return out;
    }

    void save(const std::string& path) const { write_text_file(path, to_jsonl()); }

private:
    std::vector<TraceEvent> events_;
};

}  // namespace tor
