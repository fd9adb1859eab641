#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fraudseq/core.hpp"
#include "fraudseq/rng.hpp"

namespace fraudseq {

// Dense vectors for the values of one categorical feature. Lookup is total:
// values unseen at training time map to the out-of-vocabulary vector (the
// mean of all trained vectors).
struct EmbeddingTable {
    std::string feature;
    int dim = 0;
    std::unordered_map<std::uint16_t, std::vector<double>> vectors;
    std::vector<double> oov;

    const std::vector<double>& lookup(std::uint16_t code) const {
        auto it = vectors.find(code);
        return it == vectors.end() ? oov : it->second;
    }
};

struct Word2VecParams {
    int window = 2;
    int negatives = 5;
    int epochs = 5;
    double lr = 0.05;
    double lr_min = 1e-4;
};

// Skip-gram with negative sampling over the chronological sequences of one
// categorical feature's values, one sentence per card.
inline EmbeddingTable train_value_embeddings(const std::vector<CardTimeline>& timelines,
                                             int feature_index, int dim,
                                             const Word2VecParams& params, std::uint64_t seed) {
    if (feature_index < 0 || feature_index >= kNumCategorical)
        throw std::invalid_argument("train_value_embeddings: bad feature index");
    if (dim <= 0) throw std::invalid_argument("train_value_embeddings: dim must be positive");

    // sentences + vocabulary (training data only)
    std::vector<std::vector<std::uint32_t>> sentences;
    std::vector<std::uint16_t> id_to_code;
    std::unordered_map<std::uint16_t, std::uint32_t> code_to_id;
    std::vector<double> counts;
    for (const auto& tl : timelines) {
        std::vector<std::uint32_t> sent;
        sent.reserve(tl.txns.size());
        for (const auto& txn : tl.txns) {
            const std::uint16_t code = txn.categorical[static_cast<std::size_t>(feature_index)];
            auto [it, inserted] = code_to_id.try_emplace(
                code, static_cast<std::uint32_t>(id_to_code.size()));
            if (inserted) {
                id_to_code.push_back(code);
                counts.push_back(0.0);
            }
            counts[it->second] += 1.0;
            sent.push_back(it->second);
        }
        if (sent.size() >= 2) sentences.push_back(std::move(sent));
    }
    const std::size_t vocab = id_to_code.size();
    if (vocab < 2)
        throw std::invalid_argument("train_value_embeddings: vocabulary smaller than 2, nothing to embed");

    // unigram^0.75 negative-sampling weights
    std::vector<double> neg_weights(vocab);
    for (std::size_t i = 0; i < vocab; ++i) neg_weights[i] = std::pow(counts[i], 0.75);

    Rng rng(derive_seed(seed, 0x77327665, static_cast<std::uint64_t>(feature_index)));
    const std::size_t d = static_cast<std::size_t>(dim);
    std::vector<double> in(vocab * d), out(vocab * d, 0.0);
    for (auto& v : in) v = rng.uniform(-0.5, 0.5) / static_cast<double>(dim);

    std::size_t total_pairs = 0;
    for (const auto& s : sentences)
        total_pairs += s.size();  // approximate; only drives the lr schedule
    total_pairs *= static_cast<std::size_t>(2 * params.window * params.epochs);
    if (total_pairs == 0) total_pairs = 1;

    auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    std::vector<double> grad_center(d);
    std::size_t pair_count = 0;

    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (const auto& sent : sentences) {
            const int n = static_cast<int>(sent.size());
            for (int i = 0; i < n; ++i) {
                const std::uint32_t center = sent[static_cast<std::size_t>(i)];
                double* vin = &in[center * d];
                for (int off = -params.window; off <= params.window; ++off) {
                    const int j = i + off;
                    if (off == 0 || j < 0 || j >= n) continue;
                    const double lr = std::max(
                        params.lr_min,
                        params.lr * (1.0 - static_cast<double>(pair_count) /
                                               static_cast<double>(total_pairs)));
                    ++pair_count;
                    std::fill(grad_center.begin(), grad_center.end(), 0.0);
                    // one positive + `negatives` sampled negatives
                    for (int k = 0; k <= params.negatives; ++k) {
                        std::uint32_t target;
                        double label;
                        if (k == 0) {
                            target = sent[static_cast<std::size_t>(j)];
                            label = 1.0;
                        } else {
                            target = static_cast<std::uint32_t>(rng.categorical(neg_weights));
                            if (target == sent[static_cast<std::size_t>(j)]) continue;
                            label = 0.0;
                        }
                        double* vout = &out[target * d];
                        double z = 0.0;
                        for (std::size_t q = 0; q < d; ++q) z += vin[q] * vout[q];
                        const double g = (label - sigmoid(z)) * lr;
                        for (std::size_t q = 0; q < d; ++q) {
                            grad_center[q] += g * vout[q];
                            vout[q] += g * vin[q];
                        }
                    }
                    for (std::size_t q = 0; q < d; ++q) vin[q] += grad_center[q];
                }
            }
        }
    }

    EmbeddingTable table;
    table.feature = categorical_schema()[static_cast<std::size_t>(feature_index)].name;
    table.dim = dim;
    table.oov.assign(d, 0.0);
    for (std::size_t i = 0; i < vocab; ++i) {
        std::vector<double> v(in.begin() + static_cast<std::ptrdiff_t>(i * d),
                              in.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        for (std::size_t q = 0; q < d; ++q) table.oov[q] += v[q];
        table.vectors.emplace(id_to_code[i], std::move(v));
    }
    for (std::size_t q = 0; q < d; ++q) table.oov[q] /= static_cast<double>(vocab);
    return table;
}

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline nlohmann::json embedding_to_json(const EmbeddingTable& t) {
    nlohmann::json j;
    j["feature"] = t.feature;
    j["dim"] = t.dim;
    j["oov"] = t.oov;
    nlohmann::json vecs = nlohmann::json::object();
    // sorted keys keep the file deterministic
    std::vector<std::uint16_t> codes;
    codes.reserve(t.vectors.size());
    for (const auto& [code, _] : t.vectors) codes.push_back(code);
    std::sort(codes.begin(), codes.end());
    for (std::uint16_t code : codes) vecs[std::to_string(code)] = t.vectors.at(code);
    j["vectors"] = std::move(vecs);
    return j;
}

inline EmbeddingTable embedding_from_json(const nlohmann::json& j) {
    EmbeddingTable t;
    t.feature = j.at("feature").get<std::string>();
    t.dim = j.at("dim").get<int>();
    t.oov = j.at("oov").get<std::vector<double>>();
    for (const auto& [key, value] : j.at("vectors").items())
        t.vectors[static_cast<std::uint16_t>(std::stoul(key))] =
            value.get<std::vector<double>>();
    return t;
}

}  // namespace fraudseq
