#include "tor/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "tor/io.hpp"
#include "tor/strings.hpp"

namespace tor {

namespace {

constexpr const char* kIndexMagic = "TORIDX1";

int term_frequency(const Index& index, const std::string& term, int ordinal) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) return 0;
    const auto& plist = it->second;
    auto pos = std::lower_bound(
        plist.begin(), plist.end(), ordinal,
        [](const std::pair<int, int>& e, int v) { return e.first < v; });
    if (pos == plist.end() || pos->first != ordinal) return 0;
    return pos->second;
}

}  // namespace

Corpus load_corpus(const std::string& path) {
    std::string text = read_text_file(path);
    Corpus corpus;
    int line_no = -1;
    for (const std::string& line : split(text, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(line_no, "(line)", std::string("invalid json: ") + e.what());
        }
        if (!doc.is_object() || !doc.contains("id") || !doc.contains("body"))
            throw SchemaError(line_no, "(line)", "expected {id, title, body}");
        CorpusDoc d;
        if (!doc["id"].is_string() || doc["id"].get<std::string>().empty())
            throw SchemaError(line_no, "id", "must be a non-empty string");
        d.id = doc["id"].get<std::string>();
        d.title = doc.value("title", std::string());
        if (!doc["body"].is_string())
            throw SchemaError(line_no, "body", "must be a string");
        d.body = doc["body"].get<std::string>();
        corpus.docs.push_back(std::move(d));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::string out;
    for (const CorpusDoc& d : corpus.docs) {
        nlohmann::ordered_json doc = {{"id", d.id}, {"title", d.title}, {"body", d.body}};
        out += doc.dump() + "\n";
    }
    write_text_file(path, out);
}

Index index_corpus(const Corpus& corpus, Bm25Params params) {
    if (corpus.docs.empty()) throw EmptyCorpus("corpus has no documents");

    Index index;
    index.params = params;
    index.docs = corpus.docs;

    std::set<std::string> ids;
    long long total_tokens = 0;
    for (size_t i = 0; i < corpus.docs.size(); ++i) {
        const CorpusDoc& doc = corpus.docs[i];
        if (!ids.insert(doc.id).second)
            throw SchemaError(static_cast<int>(i), "id",
                              "duplicate document id '" + doc.id + "'");
        std::vector<std::string> tokens = tokenize(doc.body);
        index.doc_lengths.push_back(static_cast<int>(tokens.size()));
        total_tokens += static_cast<long long>(tokens.size());

        std::map<std::string, int> tf;
        for (const std::string& t : tokens) tf[t]++;
        for (const auto& [term, count] : tf)
            index.postings[term].push_back({static_cast<int>(i), count});
    }
    if (total_tokens == 0) throw EmptyCorpus("corpus has no tokens");
    index.avg_doc_length =
        static_cast<double>(total_tokens) / static_cast<double>(corpus.docs.size());
    return index;
}

double bm25_score(const Index& index, const std::string& query, size_t ordinal) {
    if (ordinal >= index.docs.size())
        throw InvalidConfig("document ordinal out of range");
    const double n = static_cast<double>(index.docs.size());
    const double k1 = index.params.k1;
    const double b = index.params.b;
    const double dl = static_cast<double>(index.doc_lengths[ordinal]);

    double score = 0.0;
    for (const std::string& term : tokenize(query)) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        int tf = term_frequency(index, term, static_cast<int>(ordinal));
        if (tf == 0) continue;
        double df = static_cast<double>(it->second.size());
        double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        double tfd = static_cast<double>(tf);
        score += idf * (tfd * (k1 + 1.0)) /
                 (tfd + k1 * (1.0 - b + b * dl / index.avg_doc_length));
    }
    return score;
}

std::vector<RetrievedDoc> retrieve_top_k(const Index& index, const std::string& query,
                                         int k, int snippet_token_budget) {
    if (k < 0) throw InvalidConfig("k must be >= 0");

    std::vector<size_t> order(index.docs.size());
    std::vector<double> scores(index.docs.size());
    for (size_t i = 0; i < index.docs.size(); ++i) {
        order[i] = i;
        scores[i] = bm25_score(index, query, i);
    }
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.docs[a].id < index.docs[b].id;
    });

    size_t take = std::min(static_cast<size_t>(k), index.docs.size());
    std::vector<RetrievedDoc> out;
    for (size_t i = 0; i < take; ++i) {
        const CorpusDoc& doc = index.docs[order[i]];
        out.push_back({doc.id, doc.title, scores[order[i]],
                       truncate_tokens(doc.body, snippet_token_budget)});
    }
    return out;
}

std::string build_query(const RoleInput& input, int token_budget) {
    std::vector<std::string> parts;
    auto add = [&](const std::string& name) {
        for (const auto& [section, text] : input.sections)
            if (section == name && !trim(text).empty()) parts.push_back(trim(text));
    };
    if (input.role == AgentRole::Outpatient) {
        add("chief_complaints");
        add("present_illness");
        for (const auto& [section, text] : input.sections) {
            if (section == "age" || section == "sex" || section == "chief_complaints" ||
                section == "present_illness")
                continue;
            if (!trim(text).empty()) parts.push_back(trim(text));
        }
    } else {
        for (const auto& [section, text] : input.sections)
            if (!trim(text).empty()) parts.push_back(trim(text));
    }
    std::string joined = join(parts, " ");
    if (tokenize(joined).empty()) return "";
    return truncate_tokens(joined, token_budget);
}

std::string index_to_json_text(const Index& index) {
    nlohmann::ordered_json docs = nlohmann::ordered_json::array();
    for (const CorpusDoc& d : index.docs)
        docs.push_back({{"id", d.id}, {"title", d.title}, {"body", d.body}});

    nlohmann::ordered_json postings = nlohmann::ordered_json::object();
    for (const auto& [term, plist] : index.postings) {
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (const auto& [ordinal, tf] : plist)
            entries.push_back(nlohmann::ordered_json::array({ordinal, tf}));
        postings[term] = entries;
    }

    nlohmann::ordered_json doc = {{"magic", kIndexMagic},
                                  {"k1", index.params.k1},
                                  {"b", index.params.b},
                                  {"avg_doc_length", index.avg_doc_length},
                                  {"doc_lengths", index.doc_lengths},
                                  {"docs", docs},
                                  {"postings", postings}};
    return doc.dump() + "\n";
}

void save_index(const Index& index, const std::string& path) {
    write_text_file(path, index_to_json_text(index));
}

Index load_index(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid index file: " + std::string(e.what()));
    }
    if (!doc.is_object() || doc.value("magic", std::string()) != kIndexMagic)
        throw IoError("index file is missing the TORIDX1 magic header");

    Index index;
    try {
        index.params.k1 = doc.at("k1").get<double>();
        index.params.b = doc.at("b").get<double>();
        index.avg_doc_length = doc.at("avg_doc_length").get<double>();
        index.doc_lengths = doc.at("doc_lengths").get<std::vector<int>>();
        for (const auto& d : doc.at("docs"))
            index.docs.push_back({d.at("id").get<std::string>(),
                                  d.value("title", std::string()),
                                  d.at("body").get<std::string>()});
        for (const auto& [term, plist] : doc.at("postings").items()) {
            for (const auto& entry : plist) {
                int ordinal = entry.at(0).get<int>();
                int tf = entry.at(1).get<int>();
                if (ordinal < 0 || ordinal >= static_cast<int>(index.docs.size()) || tf < 1)
                    throw IoError("index file has an invalid posting");
                index.postings[term].push_back({ordinal, tf});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid index file: " + std::string(e.what()));
    }
    if (index.docs.empty() || index.doc_lengths.size() != index.docs.size())
        throw IoError("index file is inconsistent");
    return index;
}

}  // namespace tor
