#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gqr {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ArgumentError : Error {
    using Error::Error;
};

// Malformed or inconsistent data (bad response text, query missing from pool).
struct DataError : Error {
    using Error::Error;
};

// Serving-time failures (pool too small, degenerate prompt).
struct ServingError : Error {
    using Error::Error;
};

struct MetricError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
    for (int i = 0; i < 8; ++i) {
        h ^= v & 0xff;
        h *= kFnvPrime;
        v >>= 8;
    }
    return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Named substream derivation: all randomness in the pipeline flows from one
// root seed through these.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
    return mix64(root ^ fnv1a(stream));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    return mix64(root ^ mix64(index + 0x51ed2701ULL));
}

// ---------------------------------------------------------------------------
// Random draws (thin deterministic helpers over mt19937_64)
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    if (n == 0) throw ArgumentError("uniform_index: empty range");
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// Inverse-CDF draw over unnormalized non-negative weights.
inline std::size_t weighted_index(Rng& rng, const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw ArgumentError("weighted_index: non-positive total weight");
    double u = uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

// ---------------------------------------------------------------------------
// Math
// ---------------------------------------------------------------------------

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

inline double log_sigmoid(double z) {
    // log(1/(1+e^-z)) = -log1p(e^-z), stable on both tails
    if (z >= 0.0) return -std::log1p(std::exp(-z));
    return z - std::log1p(std::exp(z));
}

inline double clamp01(double x) {
    return std::min(1.0, std::max(0.0, x));
}

// ---------------------------------------------------------------------------
// Sparse feature vectors
// ---------------------------------------------------------------------------

struct Feature {
    std::uint32_t index;
    double value;
};

using SparseVec = std::vector<Feature>;

// Sort by index and sum duplicates; featurizers call this so identical inputs
// always yield identical vectors.
inline void merge_features(SparseVec& v) {
    std::sort(v.begin(), v.end(),
              [](const Feature& a, const Feature& b) { return a.index < b.index; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < v.size();) {
        std::uint32_t idx = v[i].index;
        double sum = 0.0;
        while (i < v.size() && v[i].index == idx) {
            sum += v[i].value;
            ++i;
        }
        v[out++] = Feature{idx, sum};
    }
    v.resize(out);
}

inline double dot(const std::vector<double>& weights, const SparseVec& x) {
    double s = 0.0;
    for (const Feature& f : x) s += weights[f.index] * f.value;
    return s;
}

inline void axpy(double a, const SparseVec& x, std::vector<double>& y) {
    for (const Feature& f : x) y[f.index] += a * f.value;
}

// ---------------------------------------------------------------------------
// Text
// ---------------------------------------------------------------------------

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n') {
            if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

inline std::vector<std::string> token_set(std::string_view text) {
    auto tokens = tokenize(text);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    return tokens;
}

// Normalized token Jaccard over the two texts' token sets.
inline double token_jaccard(std::string_view a, std::string_view b) {
    auto sa = token_set(a);
    auto sb = token_set(b);
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
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
    std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace gqr
