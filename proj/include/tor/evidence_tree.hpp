#pragma once

#include <string>
#include <vector>

#include "tor/errors.hpp"

namespace tor {

/// One leaf of an evidence tree. Indices are 1-based and contiguous within an
/// entry after canonicalization.
struct EvidenceItem {
    int index = 0;
    std::string text;

    bool operator==(const EvidenceItem& other) const = default;
};

/// One diagnosis hypothesis: a disease label, one analysis paragraph, and at
/// least one evidence item.
struct DiagnosisEntry {
    std::string disease;
    std::string analysis;
    std::vector<EvidenceItem> evidence;

    bool operator==(const DiagnosisEntry& other) const = default;
};

/// Three-level reasoning tree: title, diagnosis entries, evidence leaves.
struct EvidenceTree {
    std::string title;
    std::vector<DiagnosisEntry> entries;

    bool operator==(const EvidenceTree& other) const = default;
};

/// Result of diffing two trees by normalized disease label. The three sets
/// partition the union of both trees' normalized labels.
struct ConflictSet {
    std::vector<std::string> only_in_left;
    std::vector<std::string> only_in_right;
    std::vector<std::string> shared;

    bool empty() const { return only_in_left.empty() && only_in_right.empty(); }
};

/// Case-fold, collapse internal whitespace, trim, and drop trailing
/// punctuation. Used for label identity in merge/diff and options matching.
std::string normalize_label(const std::string& label);

/// Parse model-emitted tree text. Lenient about indentation width, tabs, list
/// bullets, ".N"-style level markers, code fences, and prose before the title.
/// Throws TreeParseError on structural violations.
EvidenceTree parse_tree(const std::string& text);

/// Render the canonical text form: title at column 0, then per entry the
/// disease at 4 spaces, "Analysis:" at 8, "Evidence k:" at 12. Validates
/// first; throws TreeValidationError on invalid input.
std::string render_tree(const EvidenceTree& tree);

/// Collect structural violations without throwing. Empty result means valid.
std::vector<std::string> validate_tree(const EvidenceTree& tree);

/// Union of entries across trees keyed by normalized disease label, in first
/// appearance order. Analyses are attributed to their source tree title and
/// deduplicated; evidence is deduplicated by normalized text and renumbered.
EvidenceTree merge_trees(const std::vector<EvidenceTree>& trees,
                         const std::string& title);

/// Partition the two trees' normalized labels into left-only, right-only and
/// shared, each sorted ascending.
ConflictSet diff_trees(const EvidenceTree& left, const EvidenceTree& right);

/// Structured JSON form: {"title": ..., "entries": [{"disease", "analysis",
/// "evidence": [strings]}]}. Evidence indices are implicit in array order.
std::string tree_to_json_text(const EvidenceTree& tree, bool pretty);
EvidenceTree tree_from_json_text(const std::string& json_text);

}  // namespace tor
