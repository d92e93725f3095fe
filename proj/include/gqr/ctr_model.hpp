#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "gqr/common.hpp"
#include "gqr/world.hpp"

namespace gqr {

// One training/scoring unit of the query-wise CTR predictor: the click
// probability of target_query at slot k given the user query and the queries
// already shown above it.
struct CtrInstance {
    std::string user_query;
    std::vector<std::string> context_queries;
    std::string target_query;
    int slot = 1;  // 1-based, == context_queries.size() + 1
    int label = 0;

    void validate() const {
        if (slot != static_cast<int>(context_queries.size()) + 1)
            throw DataError("ctr instance: slot != context size + 1");
    }
};

struct CtrDataset {
    std::vector<CtrInstance> instances;
    int first_day = 0;
    int last_day = 0;
};

// One instance per displayed query; label = b_k.
inline CtrDataset extract_instances(const std::vector<ImpressionRecord>& log) {
    CtrDataset ds;
    bool any = false;
    for (const ImpressionRecord& rec : log) {
        rec.validate();
        if (!any) {
            ds.first_day = ds.last_day = rec.day;
            any = true;
        }
        ds.first_day = std::min(ds.first_day, rec.day);
        ds.last_day = std::max(ds.last_day, rec.day);
        for (std::size_t k = 0; k < rec.response.queries.size(); ++k) {
            CtrInstance inst;
            inst.user_query = rec.prompt.user_query;
            inst.context_queries.assign(rec.response.queries.begin(),
                                        rec.response.queries.begin() + static_cast<std::ptrdiff_t>(k));
            inst.target_query = rec.response.queries[k];
            inst.slot = static_cast<int>(k) + 1;
            inst.label = rec.clicks[k];
            ds.instances.push_back(std::move(inst));
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Featurization: four hashed feature groups standing in for the four summed
// embedding tables (token / position / segment / domain).
// ---------------------------------------------------------------------------

struct CtrFeaturizerConfig {
    int hash_bits = 18;
    std::vector<int> char_ngram_orders = {2, 3};
    std::vector<int> word_ngram_orders = {1};
    bool group_token = true;
    bool group_position = true;   // slot identifier ("+pid")
    bool group_segment = true;    // target vs context flag
    bool group_domain = true;     // user query / context / target ("+ctx")
    int max_slot = 32;

    std::uint32_t hash_dim() const { return 1u << hash_bits; }

    void validate() const {
        if (hash_bits < 4 || hash_bits > 28) throw ConfigError("ctr featurizer: hash_bits out of range");
    }
};

namespace detail {

enum CtrDomain : std::uint64_t { dom_user = 0, dom_context = 1, dom_target = 2 };

template <typename Emit>
inline void for_each_gram(const CtrFeaturizerConfig& cfg, std::string_view text,
                          Emit&& emit) {
    for (int order : cfg.char_ngram_orders) {
        if (static_cast<int>(text.size()) < order) continue;
        for (std::size_t i = 0; i + static_cast<std::size_t>(order) <= text.size(); ++i)
            emit(text.substr(i, static_cast<std::size_t>(order)));
    }
    if (!cfg.word_ngram_orders.empty()) {
        auto words = tokenize(text);
        for (int order : cfg.word_ngram_orders) {
            if (order == 1) {
                for (const auto& w : words) emit(std::string_view(w));
            } else if (static_cast<int>(words.size()) >= order) {
                for (std::size_t i = 0; i + static_cast<std::size_t>(order) <= words.size(); ++i) {
                    std::string g = words[i];
                    for (int j = 1; j < order; ++j) g += " " + words[i + static_cast<std::size_t>(j)];
                    emit(std::string_view(g));
                }
            }
        }
    }
}

}  // namespace detail

class CtrFeaturizer {
  public:
    explicit CtrFeaturizer(CtrFeaturizerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    const CtrFeaturizerConfig& config() const { return cfg_; }
    std::uint32_t dim() const { return cfg_.hash_dim(); }

    SparseVec featurize(const CtrInstance& inst) const {
        SparseVec out;
        emit_field(out, inst.user_query, detail::dom_user, false);
        for (const auto& q : inst.context_queries) emit_field(out, q, detail::dom_context, false);
        emit_field(out, inst.target_query, detail::dom_target, true);
        if (cfg_.group_position) {
            const std::uint64_t s = static_cast<std::uint64_t>(std::min(inst.slot, cfg_.max_slot));
            push(out, fnv1a_u64(s, fnv1a("p")));
        }
        merge_features(out);
        return out;
    }

  private:
    void emit_field(SparseVec& out, std::string_view text, detail::CtrDomain domain,
                    bool is_target) const {
        const std::uint64_t tok_seed = fnv1a("t");
        const std::uint64_t dom_seed = fnv1a_u64(static_cast<std::uint64_t>(domain), fnv1a("d"));
        const std::uint64_t seg_seed = fnv1a_u64(is_target ? 1 : 0, fnv1a("s"));
        detail::for_each_gram(cfg_, text, [&](std::string_view g) {
            if (cfg_.group_token) push(out, fnv1a(g, tok_seed));
            if (cfg_.group_domain) push(out, fnv1a(g, dom_seed));
            if (cfg_.group_segment) push(out, fnv1a(g, seg_seed));
        });
    }

    void push(SparseVec& out, std::uint64_t h) const {
        out.push_back(Feature{static_cast<std::uint32_t>(h & (cfg_.hash_dim() - 1)), 1.0});
    }

    CtrFeaturizerConfig cfg_;
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

inline constexpr const char* kCtrModelFormat = "gqr.ctr/1";
inline constexpr double kProbEps = 1e-7;

struct CtrModel {
    std::string version = kCtrModelFormat;
    CtrFeaturizerConfig featurizer;
    std::vector<double> weights;
    double bias = 0.0;
    std::int64_t steps = 0;

    static CtrModel zero(const CtrFeaturizerConfig& cfg) {
        CtrModel m;
        m.featurizer = cfg;
        m.weights.assign(cfg.hash_dim(), 0.0);
        return m;
    }

    double logit(const SparseVec& x) const { return dot(weights, x) + bias; }

    double predict(const SparseVec& x) const {
        return std::min(1.0 - kProbEps, std::max(kProbEps, sigmoid(logit(x))));
    }
};

inline double predict(const CtrModel& model, const CtrFeaturizer& featurizer,
                      const CtrInstance& inst) {
    return model.predict(featurizer.featurize(inst));
}

// Mean negative log likelihood with predictions clipped to [eps, 1-eps].
inline double bce_loss(const CtrModel& model, const CtrFeaturizer& featurizer,
                       const std::vector<CtrInstance>& instances) {
    if (instances.empty()) return 0.0;
    double total = 0.0;
    for (const CtrInstance& inst : instances) {
        const double p = model.predict(featurizer.featurize(inst));
        total -= inst.label == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return total / static_cast<double>(instances.size());
}

// Gradient of the mean BCE over `instances` w.r.t. (weights, bias), written
// into a sparse accumulation; returns the bias component.
inline double bce_gradient(const CtrModel& model, const CtrFeaturizer& featurizer,
                           const std::vector<CtrInstance>& instances,
                           SparseVec& grad_out) {
    grad_out.clear();
    double grad_bias = 0.0;
    const double inv = 1.0 / static_cast<double>(instances.size());
    for (const CtrInstance& inst : instances) {
        const SparseVec x = featurizer.featurize(inst);
        const double p = sigmoid(model.logit(x));
        const double g = (p - static_cast<double>(inst.label)) * inv;
        for (const Feature& f : x) grad_out.push_back(Feature{f.index, g * f.value});
        grad_bias += g;
    }
    merge_features(grad_out);
    return grad_bias;
}

// ---------------------------------------------------------------------------
// Training: Adam, applied lazily to touched coordinates only (dense moment
// updates over 2^18 weights per step would dominate the runtime).
// ---------------------------------------------------------------------------

struct CtrTrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 256;
    int max_epochs = 20;
    int patience = 3;
    double val_fraction = 0.1;
    std::size_t max_instances = 0;  // 0 = use everything

    void validate() const {
        if (learning_rate <= 0.0) throw ConfigError("ctr train: learning_rate > 0 required");
        if (batch_size < 1) throw ConfigError("ctr train: batch_size >= 1 required");
        if (max_epochs < 1) throw ConfigError("ctr train: max_epochs >= 1 required");
        if (val_fraction < 0.0 || val_fraction >= 1.0)
            throw ConfigError("ctr train: val_fraction in [0,1) required");
    }
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    double m_bias = 0.0;
    double v_bias = 0.0;
    std::int64_t t = 0;

    explicit AdamState(std::size_t dim) : m(dim, 0.0), v(dim, 0.0) {}

    void apply(std::vector<double>& weights, double& bias, const SparseVec& grad,
               double grad_bias, const CtrTrainConfig& cfg) {
        ++t;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (const Feature& g : grad) {
            double& mi = m[g.index];
            double& vi = v[g.index];
            mi = cfg.beta1 * mi + (1.0 - cfg.beta1) * g.value;
            vi = cfg.beta2 * vi + (1.0 - cfg.beta2) * g.value * g.value;
            weights[g.index] -=
                cfg.learning_rate * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.adam_eps);
        }
        m_bias = cfg.beta1 * m_bias + (1.0 - cfg.beta1) * grad_bias;
        v_bias = cfg.beta2 * v_bias + (1.0 - cfg.beta2) * grad_bias * grad_bias;
        bias -= cfg.learning_rate * (m_bias / bc1) / (std::sqrt(v_bias / bc2) + cfg.adam_eps);
    }
};

struct CtrTrainReport {
    std::vector<double> val_logloss_per_epoch;
    int best_epoch = -1;
    double best_val_logloss = 0.0;
    std::size_t n_train = 0;
    std::size_t n_val = 0;
};

inline CtrModel train_ctr(const CtrDataset& dataset, const CtrFeaturizerConfig& fcfg,
                          const CtrTrainConfig& cfg, std::uint64_t seed,
                          CtrTrainReport* report = nullptr) {
    cfg.validate();
    if (dataset.instances.empty()) throw ConfigError("ctr train: empty dataset");

    CtrFeaturizer featurizer(fcfg);
    Rng rng(derive_seed(seed, "ctr_train"));

    std::vector<std::size_t> order(dataset.instances.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        std::swap(order[i - 1], order[j]);
    }
    if (cfg.max_instances > 0 && order.size() > cfg.max_instances)
        order.resize(cfg.max_instances);

    std::size_t n_val = static_cast<std::size_t>(
        cfg.val_fraction * static_cast<double>(order.size()));
    if (cfg.val_fraction > 0.0 && n_val == 0 && order.size() > 1) n_val = 1;
    const std::size_t n_train = order.size() - n_val;
    if (n_train == 0) throw ConfigError("ctr train: no training instances after split");

    std::vector<CtrInstance> val;
    val.reserve(n_val);
    for (std::size_t i = n_train; i < order.size(); ++i)
        val.push_back(dataset.instances[order[i]]);

    CtrModel model = CtrModel::zero(fcfg);
    AdamState adam(fcfg.hash_dim());
    CtrModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int since_best = 0;

    std::vector<CtrInstance> batch;
    SparseVec grad;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (std::size_t i = n_train; i > 1; --i) {
            std::size_t j = uniform_index(rng, i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < n_train;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(n_train, start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t i = start; i < end; ++i)
                batch.push_back(dataset.instances[order[i]]);
            const double grad_bias = bce_gradient(model, featurizer, batch, grad);
            adam.apply(model.weights, model.bias, grad, grad_bias, cfg);
            ++model.steps;
        }
        const double val_loss = n_val > 0 ? bce_loss(model, featurizer, val)
                                          : bce_loss(model, featurizer, dataset.instances);
        if (report) report->val_logloss_per_epoch.push_back(val_loss);
        if (val_loss < best_val) {
            best_val = val_loss;
            best = model;
            best_epoch = epoch;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            break;
        }
    }
    if (report) {
        report->best_epoch = best_epoch;
        report->best_val_logloss = best_val;
        report->n_train = n_train;
        report->n_val = n_val;
    }
    return best;
}

}  // namespace gqr
