#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gqr/common.hpp"

namespace gqr {

enum class ComponentKind { multi_choice, single_choice };

inline std::string to_string(ComponentKind k) {
    return k == ComponentKind::multi_choice ? "multi" : "single";
}

inline ComponentKind component_from_string(std::string_view s) {
    if (s == "multi") return ComponentKind::multi_choice;
    if (s == "single") return ComponentKind::single_choice;
    throw DataError("unknown component kind: " + std::string(s));
}

// One labeled side-information block of a prompt.
struct SideBlock {
    std::string label;
    std::vector<std::string> texts;
};

// The prompt handed to the recommendation policy: the user's query plus the
// side information the serving component had available. Side info carries the
// fixed labels "history", "ai_response" and "cor" so featurizers can weight
// the blocks separately.
struct PromptRecord {
    std::string user_query;
    std::vector<std::string> history;
    std::string ai_response;
    std::vector<std::string> cor_candidates;
    int n_queries = 1;
    ComponentKind component_kind = ComponentKind::multi_choice;

    std::vector<SideBlock> side_blocks() const {
        std::vector<SideBlock> blocks;
        blocks.push_back({"history", history});
        blocks.push_back({"ai_response", {ai_response}});
        blocks.push_back({"cor", cor_candidates});
        return blocks;
    }

    void validate() const {
        if (user_query.empty()) throw DataError("prompt: empty user_query");
        if (n_queries < 1) throw DataError("prompt: n_queries < 1");
    }

    bool operator==(const PromptRecord&) const = default;
};

// Auxiliary texts plus the ordered list of recommended queries.
struct ResponseRecord {
    std::vector<std::string> aux_texts;
    std::vector<std::string> queries;

    bool operator==(const ResponseRecord&) const = default;
};

inline constexpr std::string_view kQuerySeparator = "<SEP>";
inline constexpr char kAuxSeparator = '|';

// Aux texts and queries may not contain the query separator; aux texts and
// queries may not contain '|' either, since the aux header is '|'-joined in
// front of the first query and parsing could not undo it.
inline bool text_is_serializable(std::string_view t) {
    return t.find(kQuerySeparator) == std::string_view::npos &&
           t.find(kAuxSeparator) == std::string_view::npos;
}

// "t_1|...|t_l|q_1<SEP>q_2<SEP>...<SEP>q_N"
inline std::string serialize_response(const ResponseRecord& r) {
    if (r.queries.empty()) throw DataError("serialize_response: no queries");
    for (const auto& q : r.queries) {
        if (q.empty()) throw DataError("serialize_response: empty query");
        if (!text_is_serializable(q))
            throw DataError("serialize_response: query contains a separator literal: " + q);
    }
    for (const auto& t : r.aux_texts) {
        if (!text_is_serializable(t))
            throw DataError("serialize_response: aux text contains a separator literal: " + t);
    }
    std::string out;
    for (const auto& t : r.aux_texts) {
        out += t;
        out += kAuxSeparator;
    }
    for (std::size_t i = 0; i < r.queries.size(); ++i) {
        if (i > 0) out += kQuerySeparator;
        out += r.queries[i];
    }
    return out;
}

enum class ParseError {
    none,
    wrong_query_count,
    empty_query,
};

// Total: any input yields either a record with exactly expected_n queries or
// a classified error (callers discard such samples).
inline std::optional<ResponseRecord> parse_response(std::string_view text,
                                                    int expected_n,
                                                    ParseError* err = nullptr) {
    auto fail = [&](ParseError e) -> std::optional<ResponseRecord> {
        if (err) *err = e;
        return std::nullopt;
    };
    if (err) *err = ParseError::none;
    if (expected_n < 1) return fail(ParseError::wrong_query_count);

    std::vector<std::string> segments;
    std::size_t pos = 0;
    while (true) {
        std::size_t sep = text.find(kQuerySeparator, pos);
        if (sep == std::string_view::npos) {
            segments.emplace_back(text.substr(pos));
            break;
        }
        segments.emplace_back(text.substr(pos, sep - pos));
        pos = sep + kQuerySeparator.size();
    }
    if (static_cast<int>(segments.size()) != expected_n)
        return fail(ParseError::wrong_query_count);

    // The first segment may carry the '|'-joined aux header; its last piece
    // is q_1.
    ResponseRecord r;
    std::string& head = segments.front();
    std::size_t last_bar = head.rfind(kAuxSeparator);
    if (last_bar != std::string::npos) {
        std::size_t start = 0;
        while (true) {
            std::size_t bar = head.find(kAuxSeparator, start);
            if (bar == std::string::npos || bar > last_bar) break;
            r.aux_texts.emplace_back(head.substr(start, bar - start));
            start = bar + 1;
        }
        head = head.substr(last_bar + 1);
    }
    r.queries.push_back(head);
    for (std::size_t i = 1; i < segments.size(); ++i) r.queries.push_back(segments[i]);
    for (const auto& q : r.queries) {
        if (q.empty()) return fail(ParseError::empty_query);
    }
    return r;
}

}  // namespace gqr
