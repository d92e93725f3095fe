#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gqr/common.hpp"
#include "gqr/prompt.hpp"

namespace gqr {

struct SessionParams {
    double mean_length = 3.0;   // geometric session length, >= 1
    double topic_drift = 0.1;   // probability the next query switches topic
    double coherence = 1.0;     // in-topic weight exp(coherence * shared tokens)
};

struct WorldConfig {
    int n_topics = 3;
    int n_queries = 300;
    int words_per_topic = 12;
    int shared_words = 8;
    int query_words_min = 2;
    int query_words_max = 4;
    double zipf_exponent = 1.0;
    SessionParams session;

    void validate() const {
        if (n_topics < 1) throw ConfigError("world: n_topics >= 1 required");
        if (n_queries < 1) throw ConfigError("world: n_queries >= 1 required");
        if (words_per_topic < 1) throw ConfigError("world: words_per_topic >= 1 required");
        if (query_words_min < 1 || query_words_max < query_words_min)
            throw ConfigError("world: bad query word range");
        if (session.mean_length < 1.0) throw ConfigError("world: mean session length >= 1 required");
        if (session.topic_drift < 0.0 || session.topic_drift > 1.0)
            throw ConfigError("world: topic_drift in [0,1] required");
    }
};

struct Query {
    std::string text;
    int topic = 0;
    double popularity = 1.0;
};

struct QueryUniverse {
    std::vector<int> topics;
    std::vector<Query> queries;
    SessionParams session;

    std::vector<std::vector<std::size_t>> by_topic;
    std::unordered_map<std::string, std::size_t> by_text;

    void rebuild_index() {
        by_topic.assign(topics.size(), {});
        by_text.clear();
        for (std::size_t i = 0; i < queries.size(); ++i) {
            by_topic[static_cast<std::size_t>(queries[i].topic)].push_back(i);
            by_text.emplace(queries[i].text, i);
        }
    }

    const Query* find(const std::string& text) const {
        auto it = by_text.find(text);
        return it == by_text.end() ? nullptr : &queries[it->second];
    }
};

inline QueryUniverse build_universe(const WorldConfig& config, std::uint64_t seed) {
    config.validate();
    QueryUniverse u;
    u.session = config.session;
    for (int t = 0; t < config.n_topics; ++t) u.topics.push_back(t);

    Rng rng(derive_seed(seed, "universe"));
    std::unordered_set<std::string> seen;
    const int per_topic = config.n_queries / config.n_topics;
    const int remainder = config.n_queries % config.n_topics;

    for (int t = 0; t < config.n_topics; ++t) {
        const int count = per_topic + (t < remainder ? 1 : 0);
        for (int r = 0; r < count; ++r) {
            std::string text;
            for (int attempt = 0; attempt < 200; ++attempt) {
                const int k = config.query_words_min +
                              static_cast<int>(uniform_index(
                                  rng, static_cast<std::size_t>(
                                           config.query_words_max - config.query_words_min + 1)));
                std::vector<std::string> words;
                while (static_cast<int>(words.size()) < k) {
                    std::string w;
                    if (config.shared_words > 0 && uniform01(rng) < 0.2) {
                        w = "s" + std::to_string(uniform_index(
                                      rng, static_cast<std::size_t>(config.shared_words)));
                    } else {
                        w = "t" + std::to_string(t) + "w" +
                            std::to_string(uniform_index(
                                rng, static_cast<std::size_t>(config.words_per_topic)));
                    }
                    if (std::find(words.begin(), words.end(), w) == words.end())
                        words.push_back(w);
                }
                std::string candidate;
                for (std::size_t i = 0; i < words.size(); ++i) {
                    if (i > 0) candidate += ' ';
                    candidate += words[i];
                }
                if (!seen.count(candidate)) {
                    text = candidate;
                    break;
                }
            }
            if (text.empty()) {
                // vocabulary exhausted; disambiguate with a unique suffix word
                text = "t" + std::to_string(t) + "w0 u" + std::to_string(u.queries.size());
            }
            seen.insert(text);
            const double pop = std::pow(static_cast<double>(r + 1), -config.zipf_exponent);
            u.queries.push_back(Query{text, t, pop});
        }
    }
    u.rebuild_index();
    return u;
}

// ---------------------------------------------------------------------------
// Ground-truth click model
// ---------------------------------------------------------------------------

inline int shared_token_count(std::string_view a, std::string_view b) {
    auto sa = token_set(a);
    auto sb = token_set(b);
    int inter = 0;
    std::size_t i = 0, j = 0;
    while (i < sa.size() && j < sb.size()) {
        if (sa[i] == sb[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (sa[i] < sb[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return inter;
}

// Ground truth click probability of (user query, candidate, slot):
//   clamp01( sigmoid(affinity[t_user][t_cand] + token_bonus * shared_tokens)
//            * position_bias[slot] * base_rate + noise )
// where noise is zero-mean uniform in [-noise_scale, noise_scale], a
// deterministic function of (noise_seed, user text, candidate text, slot).
struct UserClickModel {
    std::vector<std::vector<double>> affinity;
    std::vector<double> position_bias;
    double token_bonus = 0.0;
    double noise_scale = 0.0;
    double base_rate = 0.5;
    std::uint64_t noise_seed = 0;

    void validate() const {
        if (position_bias.empty()) throw ConfigError("click model: empty position_bias");
        for (std::size_t i = 0; i < position_bias.size(); ++i) {
            if (!(position_bias[i] > 0.0 && position_bias[i] <= 1.0))
                throw ConfigError("click model: position_bias entries must lie in (0,1]");
            if (i > 0 && position_bias[i] > position_bias[i - 1])
                throw ConfigError("click model: position_bias must be non-increasing");
        }
        if (noise_scale < 0.0) throw ConfigError("click model: noise_scale >= 0 required");
        if (base_rate < 0.0 || base_rate > 1.0)
            throw ConfigError("click model: base_rate in [0,1] required");
        for (const auto& row : affinity) {
            if (row.size() != affinity.size())
                throw ConfigError("click model: affinity must be square");
        }
    }
};

inline double true_click_prob(const UserClickModel& model, const Query& user,
                              const Query& candidate, int slot) {
    if (slot < 0 || slot >= static_cast<int>(model.position_bias.size()))
        throw ArgumentError("true_click_prob: slot out of range");
    const double aff =
        model.affinity.empty()
            ? 0.0
            : model.affinity[static_cast<std::size_t>(user.topic)]
                            [static_cast<std::size_t>(candidate.topic)];
    const double z =
        aff + model.token_bonus * shared_token_count(user.text, candidate.text);
    double p = sigmoid(z) * model.position_bias[static_cast<std::size_t>(slot)] *
               model.base_rate;
    if (model.noise_scale > 0.0) {
        std::uint64_t h = model.noise_seed;
        h = fnv1a(user.text, h);
        h = fnv1a("\x1f", h);
        h = fnv1a(candidate.text, h);
        h = fnv1a_u64(static_cast<std::uint64_t>(slot), h);
        const double u = static_cast<double>(mix64(h) >> 11) * 0x1.0p-53;
        p += model.noise_scale * (2.0 * u - 1.0);
    }
    return clamp01(p);
}

// Convenience for a 2-parameter topic affinity matrix.
inline std::vector<std::vector<double>> topic_affinity(int n_topics, double same,
                                                       double cross) {
    std::vector<std::vector<double>> a(
        static_cast<std::size_t>(n_topics),
        std::vector<double>(static_cast<std::size_t>(n_topics), cross));
    for (int t = 0; t < n_topics; ++t)
        a[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)] = same;
    return a;
}

// ---------------------------------------------------------------------------
// Impression logs
// ---------------------------------------------------------------------------

struct ImpressionRecord {
    PromptRecord prompt;
    ResponseRecord response;
    std::vector<int> clicks;
    ComponentKind component_kind = ComponentKind::multi_choice;
    int day = 0;

    void validate() const {
        if (clicks.size() != response.queries.size())
            throw DataError("impression: clicks/queries length mismatch");
        int total = 0;
        for (int b : clicks) {
            if (b != 0 && b != 1) throw DataError("impression: clicks must be 0/1");
            total += b;
        }
        if (component_kind == ComponentKind::single_choice && total > 1)
            throw DataError("impression: single_choice with more than one click");
    }
};

struct TaskSpec {
    int n_queries = 3;
    ComponentKind kind = ComponentKind::multi_choice;
};

using ResponseProvider =
    std::function<ResponseRecord(const PromptRecord&, std::uint64_t seed)>;
using CorProvider = std::function<std::vector<std::string>(const std::string&)>;

namespace detail {

inline std::size_t sample_next_query(const QueryUniverse& u, Rng& rng,
                                     std::size_t current) {
    const Query& cur = u.queries[current];
    int topic = cur.topic;
    const int n_topics = static_cast<int>(u.topics.size());
    if (n_topics > 1 && uniform01(rng) < u.session.topic_drift) {
        int other = static_cast<int>(uniform_index(
            rng, static_cast<std::size_t>(n_topics - 1)));
        topic = other >= topic ? other + 1 : other;
    }
    const auto& pool = u.by_topic[static_cast<std::size_t>(topic)];
    std::vector<double> weights;
    weights.reserve(pool.size());
    for (std::size_t idx : pool) {
        if (idx == current) {
            weights.push_back(0.0);
            continue;
        }
        const Query& q = u.queries[idx];
        const double w =
            q.popularity *
            std::exp(u.session.coherence * shared_token_count(cur.text, q.text));
        weights.push_back(w);
    }
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return current;  // single-query topic
    return pool[weighted_index(rng, weights)];
}

}  // namespace detail

// One simulated serving day: n_sessions user sessions, each query served by
// the provider, clicks drawn from the ground-truth model. Sessions derive
// their own seeds, so they could run in parallel without changing output.
inline std::vector<ImpressionRecord> simulate_day(
    const QueryUniverse& universe, const UserClickModel& click_model,
    const ResponseProvider& serve, const CorProvider& cor, const TaskSpec& task,
    int n_sessions, int day, std::uint64_t seed) {
    click_model.validate();
    if (static_cast<int>(click_model.position_bias.size()) < task.n_queries)
        throw ConfigError("simulate_day: position_bias shorter than task N");
    if (universe.queries.empty()) throw ConfigError("simulate_day: empty universe");

    std::vector<double> first_weights;
    first_weights.reserve(universe.queries.size());
    for (const Query& q : universe.queries) first_weights.push_back(q.popularity);

    std::vector<ImpressionRecord> records;
    for (int s = 0; s < n_sessions; ++s) {
        const std::uint64_t session_seed = derive_seed(seed, static_cast<std::uint64_t>(s));
        Rng rng(session_seed);

        int length = 1;
        const double cont = 1.0 - 1.0 / universe.session.mean_length;
        while (length < 40 && uniform01(rng) < cont) ++length;

        std::size_t current = weighted_index(rng, first_weights);
        std::vector<std::string> past;
        for (int j = 0; j < length; ++j) {
            if (j > 0) current = detail::sample_next_query(universe, rng, current);
            const Query& user = universe.queries[current];

            PromptRecord prompt;
            prompt.user_query = user.text;
            const std::size_t h0 = past.size() > 3 ? past.size() - 3 : 0;
            prompt.history.assign(past.begin() + static_cast<std::ptrdiff_t>(h0), past.end());
            prompt.ai_response = "re " + tokenize(user.text).front();
            if (cor) prompt.cor_candidates = cor(user.text);
            prompt.n_queries = task.n_queries;
            prompt.component_kind = task.kind;

            ImpressionRecord rec;
            rec.prompt = prompt;
            rec.response = serve(prompt, derive_seed(session_seed, 1000 + static_cast<std::uint64_t>(j)));
            rec.component_kind = task.kind;
            rec.day = day;

            const int n = static_cast<int>(rec.response.queries.size());
            std::vector<double> probs(static_cast<std::size_t>(n), 0.0);
            for (int k = 0; k < n; ++k) {
                const Query* cand = universe.find(rec.response.queries[static_cast<std::size_t>(k)]);
                const Query fallback{rec.response.queries[static_cast<std::size_t>(k)], user.topic, 1.0};
                probs[static_cast<std::size_t>(k)] =
                    true_click_prob(click_model, user, cand ? *cand : fallback, k);
            }
            rec.clicks.assign(static_cast<std::size_t>(n), 0);
            if (task.kind == ComponentKind::multi_choice) {
                for (int k = 0; k < n; ++k) {
                    if (uniform01(rng) < probs[static_cast<std::size_t>(k)])
                        rec.clicks[static_cast<std::size_t>(k)] = 1;
                }
            } else {
                // categorical over {slot 1..N, no-click}; no-click mass clamped at >= 0
                double total = 0.0;
                for (double p : probs) total += p;
                std::vector<double> weights = probs;
                weights.push_back(std::max(0.0, 1.0 - total));
                double wsum = 0.0;
                for (double w : weights) wsum += w;
                if (wsum > 0.0) {
                    const std::size_t pick = weighted_index(rng, weights);
                    if (pick < static_cast<std::size_t>(n)) rec.clicks[pick] = 1;
                }
            }
            rec.validate();
            records.push_back(std::move(rec));
            past.push_back(user.text);
        }
    }
    return records;
}

// Reconstructs user sessions from an impression log: a record with empty
// history starts a new session. simulate_day emits records in session order,
// so this inverts it exactly.
inline std::vector<std::vector<std::string>> sessions_from_log(
    const std::vector<ImpressionRecord>& records) {
    std::vector<std::vector<std::string>> sessions;
    for (const ImpressionRecord& rec : records) {
        if (rec.prompt.history.empty() || sessions.empty()) sessions.emplace_back();
        sessions.back().push_back(rec.prompt.user_query);
    }
    return sessions;
}

}  // namespace gqr
