#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraudseq/core.hpp"
#include "fraudseq/word2vec.hpp"

namespace fraudseq {

enum class FeatureSet : std::uint8_t { base, base_agg };

inline std::string feature_set_name(FeatureSet s) {
    return s == FeatureSet::base ? "base" : "base+agg";
}

inline FeatureSet parse_feature_set(const std::string& s) {
    if (s == "base") return FeatureSet::base;
    if (s == "base+agg" || s == "base_agg") return FeatureSet::base_agg;
    throw std::invalid_argument("unknown feature set: " + s);
}

// ---------------------------------------------------------------------------
// Aggregated context features: {sum, mean, count} x {unconstrained, same
// country, same mcc, same terminal type} over the trailing 24-hour window,
// plus seconds since the card's previous transaction. 13 in total.
// ---------------------------------------------------------------------------

inline constexpr int kNumAggregates = 13;
inline constexpr double kAggregateWindowSeconds = 86400.0;
inline constexpr double kSecsSincePrevCap = 7.0 * 86400.0;  // also the no-predecessor value

enum class AggFunction : std::uint8_t { count, sum, mean };
enum class AggConstraint : std::uint8_t { none, same_country, same_mcc, same_terminal };

struct AggregateSpec {
    AggFunction function;
    AggConstraint constraint;
    double window_seconds = kAggregateWindowSeconds;

    bool matches(const Transaction& past, const Transaction& current) const {
        switch (constraint) {
            case AggConstraint::none:
                return true;
            case AggConstraint::same_country:
                return past.categorical[kCountry] == current.categorical[kCountry];
            case AggConstraint::same_mcc:
                return past.categorical[kMcc] == current.categorical[kMcc];
            case AggConstraint::same_terminal:
                return past.categorical[kTerminalType] == current.categorical[kTerminalType];
        }
        return true;
    }
};

// The 12 windowed aggregates; the 13th value (seconds since the previous
// transaction) is appended by compute_aggregates itself.
inline const std::array<AggregateSpec, 12>& default_aggregate_specs() {
    static const std::array<AggregateSpec, 12> specs = {{
        {AggFunction::count, AggConstraint::none},
        {AggFunction::sum, AggConstraint::none},
        {AggFunction::mean, AggConstraint::none},
        {AggFunction::count, AggConstraint::same_country},
        {AggFunction::sum, AggConstraint::same_country},
        {AggFunction::mean, AggConstraint::same_country},
        {AggFunction::count, AggConstraint::same_mcc},
        {AggFunction::sum, AggConstraint::same_mcc},
        {AggFunction::mean, AggConstraint::same_mcc},
        {AggFunction::count, AggConstraint::same_terminal},
        {AggFunction::sum, AggConstraint::same_terminal},
        {AggFunction::mean, AggConstraint::same_terminal},
    }};
    return specs;
}

inline std::vector<std::string> aggregate_names() {
    static const char* constraint_names[] = {"24h", "same_country_24h", "same_mcc_24h",
                                             "same_terminal_24h"};
    static const char* fn_names[] = {"count", "sum", "mean"};
    std::vector<std::string> names;
    for (const auto& spec : default_aggregate_specs())
        names.push_back(std::string("agg_") + fn_names[static_cast<int>(spec.function)] + "_" +
                        constraint_names[static_cast<int>(spec.constraint)]);
    names.emplace_back("agg_secs_since_prev");
    return names;
}

// Causal aggregates for txns[index]: only transactions strictly before the
// current one and with timestamp inside the open window (t - 24h, t)
// participate. Empty windows yield count = sum = mean = 0.
inline std::array<double, kNumAggregates> compute_aggregates(const CardTimeline& timeline,
                                                             std::size_t index) {
    if (index >= timeline.txns.size())
        throw std::out_of_range("compute_aggregates: index past end of timeline");
    const Transaction& current = timeline.txns[index];
    const double t = static_cast<double>(current.timestamp);

    std::array<double, kNumAggregates> out{};
    const auto& specs = default_aggregate_specs();
    std::array<double, 12> sums{};
    std::array<double, 12> counts{};
    for (std::size_t j = 0; j < index; ++j) {
        const Transaction& past = timeline.txns[j];
        const double tj = static_cast<double>(past.timestamp);
        if (tj <= t - kAggregateWindowSeconds || tj >= t) continue;
        for (std::size_t k = 0; k < specs.size(); ++k) {
            if (!specs[k].matches(past, current)) continue;
            counts[k] += 1.0;
            sums[k] += past.numeric[kAmount];
        }
    }
    for (std::size_t k = 0; k < specs.size(); ++k) {
        switch (specs[k].function) {
            case AggFunction::count: out[k] = counts[k]; break;
            case AggFunction::sum: out[k] = sums[k]; break;
            case AggFunction::mean: out[k] = counts[k] > 0 ? sums[k] / counts[k] : 0.0; break;
        }
    }
    if (index == 0)
        out[12] = kSecsSincePrevCap;
    else
        out[12] = std::min(
            static_cast<double>(current.timestamp - timeline.txns[index - 1].timestamp),
            kSecsSincePrevCap);
    return out;
}

// ---------------------------------------------------------------------------
// Clipping and standardization. Fit on training data only; test-time
// transforms reuse the fitted parameters.
// ---------------------------------------------------------------------------

struct ColumnStats {
    double clip_lo = -std::numeric_limits<double>::infinity();
    double clip_hi = std::numeric_limits<double>::infinity();
    double mean = 0.0;
    double stddev = 1.0;

    double clip(double v) const { return std::min(std::max(v, clip_lo), clip_hi); }
    double transform(double v) const { return (clip(v) - mean) / stddev; }
};

struct AmountClip {
    double lo = 0.0;
    double hi = 1000.0;
};

struct FeatureStats {
    std::array<ColumnStats, kNumNumeric> numeric;
    // index 12 (seconds since previous txn) is fitted and applied on
    // log1p(value); the raw aggregate itself stays in seconds
    std::array<ColumnStats, kNumAggregates> aggregate;
    std::vector<std::string> warnings;  // constant-column fallbacks
};

inline constexpr int kLogScaledAggregate = 12;

namespace feat_detail {

struct Welford {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n) : 0.0; }
};

inline void finalize(ColumnStats& cs, const Welford& w, const std::string& name,
                     std::vector<std::string>& warnings) {
    cs.mean = w.mean;
    const double sd = std::sqrt(w.variance());
    if (sd <= 0.0) {
        cs.stddev = 1.0;
        warnings.push_back("constant feature '" + name + "': stddev fell back to 1");
    } else {
        cs.stddev = sd;
    }
}

}  // namespace feat_detail

// Fits clip bounds, means and standard deviations on the training timelines,
// including the aggregate columns (computed causally per card).
inline FeatureStats fit_stats(const std::vector<CardTimeline>& train_timelines,
                              const AmountClip& clip = {}) {
    std::size_t total = 0;
    for (const auto& tl : train_timelines) total += tl.txns.size();
    if (total == 0) throw std::invalid_argument("fit_stats: empty training stream");

    FeatureStats stats;
    stats.numeric[kAmount].clip_lo = clip.lo;
    stats.numeric[kAmount].clip_hi = clip.hi;

    std::array<feat_detail::Welford, kNumNumeric> num_acc;
    std::array<feat_detail::Welford, kNumAggregates> agg_acc;
    for (const auto& tl : train_timelines) {
        for (std::size_t i = 0; i < tl.txns.size(); ++i) {
            const auto& txn = tl.txns[i];
            for (int c = 0; c < kNumNumeric; ++c)
                num_acc[static_cast<std::size_t>(c)].add(
                    stats.numeric[static_cast<std::size_t>(c)].clip(
                        txn.numeric[static_cast<std::size_t>(c)]));
            const auto aggs = compute_aggregates(tl, i);
            for (int c = 0; c < kNumAggregates; ++c) {
                const double v = c == kLogScaledAggregate
                                     ? std::log1p(aggs[static_cast<std::size_t>(c)])
                                     : aggs[static_cast<std::size_t>(c)];
                agg_acc[static_cast<std::size_t>(c)].add(v);
            }
        }
    }

    const auto agg_names = aggregate_names();
    for (int c = 0; c < kNumNumeric; ++c)
        feat_detail::finalize(stats.numeric[static_cast<std::size_t>(c)],
                              num_acc[static_cast<std::size_t>(c)],
                              numeric_schema()[static_cast<std::size_t>(c)].name, stats.warnings);
    for (int c = 0; c < kNumAggregates; ++c)
        feat_detail::finalize(stats.aggregate[static_cast<std::size_t>(c)],
                              agg_acc[static_cast<std::size_t>(c)],
                              agg_names[static_cast<std::size_t>(c)], stats.warnings);
    return stats;
}

// ---------------------------------------------------------------------------
// Vectorization: standardized numerics + concatenated value embeddings
// (+ standardized aggregates for base+agg). Layout is fixed per feature set.
// ---------------------------------------------------------------------------

struct FeatureVector {
    std::vector<double> values;
};

inline int embedding_dim_for(int categorical_index) {
    return categorical_schema()[static_cast<std::size_t>(categorical_index)].cardinality > 20 ? 8
                                                                                              : 4;
}

inline int base_dim() {
    int d = kNumNumeric;
    for (int c = 0; c < kNumCategorical; ++c) d += embedding_dim_for(c);
    return d;
}

inline int feature_dim(FeatureSet set) {
    return base_dim() + (set == FeatureSet::base_agg ? kNumAggregates : 0);
}

inline std::vector<std::string> feature_layout(FeatureSet set) {
    std::vector<std::string> names;
    for (const auto& c : numeric_schema()) names.emplace_back(c.name);
    for (int c = 0; c < kNumCategorical; ++c) {
        const std::string base = categorical_schema()[static_cast<std::size_t>(c)].name;
        for (int k = 0; k < embedding_dim_for(c); ++k)
            names.push_back(base + "_e" + std::to_string(k));
    }
    if (set == FeatureSet::base_agg)
        for (const auto& n : aggregate_names()) names.push_back(n);
    return names;
}

inline FeatureVector vectorize(const Transaction& txn, const FeatureStats& stats,
                               const std::vector<EmbeddingTable>& tables,
                               const std::array<double, kNumAggregates>* aggregates,
                               FeatureSet set) {
    if (tables.size() != kNumCategorical)
        throw std::invalid_argument("vectorize: expected one embedding table per categorical feature");
    if (set == FeatureSet::base_agg && aggregates == nullptr)
        throw std::invalid_argument("vectorize: base+agg requires aggregate values");

    FeatureVector out;
    out.values.reserve(static_cast<std::size_t>(feature_dim(set)));
    for (int c = 0; c < kNumNumeric; ++c)
        out.values.push_back(stats.numeric[static_cast<std::size_t>(c)].transform(
            txn.numeric[static_cast<std::size_t>(c)]));
    for (int c = 0; c < kNumCategorical; ++c) {
        const auto& vec = tables[static_cast<std::size_t>(c)].lookup(
            txn.categorical[static_cast<std::size_t>(c)]);
        out.values.insert(out.values.end(), vec.begin(), vec.end());
    }
    if (set == FeatureSet::base_agg) {
        for (int c = 0; c < kNumAggregates; ++c) {
            const double raw = (*aggregates)[static_cast<std::size_t>(c)];
            const double v = c == kLogScaledAggregate ? std::log1p(raw) : raw;
            out.values.push_back(stats.aggregate[static_cast<std::size_t>(c)].transform(v));
        }
    }
    for (double v : out.values)
        if (!std::isfinite(v))
            throw std::runtime_error("vectorize: non-finite value in feature vector");
    return out;
}

// ---------------------------------------------------------------------------
// Fitted pipeline = stats + embedding tables + feature-set choice.
// ---------------------------------------------------------------------------

struct FeaturePipeline {
    FeatureSet set = FeatureSet::base_agg;
    FeatureStats stats;
    std::vector<EmbeddingTable> tables;

    int dim() const { return feature_dim(set); }

    FeatureVector transform(const Transaction& txn,
                            const std::array<double, kNumAggregates>* aggs) const {
        return vectorize(txn, stats, tables, aggs, set);
    }
};

inline FeaturePipeline fit_feature_pipeline(const std::vector<CardTimeline>& train_timelines,
                                            FeatureSet set, std::uint64_t seed,
                                            const Word2VecParams& w2v = {},
                                            const AmountClip& clip = {}) {
    FeaturePipeline pipe;
    pipe.set = set;
    pipe.stats = fit_stats(train_timelines, clip);
    pipe.tables.reserve(kNumCategorical);
    for (int c = 0; c < kNumCategorical; ++c)
        pipe.tables.push_back(train_value_embeddings(train_timelines, c, embedding_dim_for(c),
                                                     w2v, derive_seed(seed, 0x656d62, c)));
    return pipe;
}

// ---------------------------------------------------------------------------
// JSON serialization of fitted artifacts
// ---------------------------------------------------------------------------

inline nlohmann::json stats_to_json(const FeatureStats& stats) {
    auto column = [](const ColumnStats& c) {
        nlohmann::json j;
        if (std::isfinite(c.clip_lo)) j["clip_lo"] = c.clip_lo;
        if (std::isfinite(c.clip_hi)) j["clip_hi"] = c.clip_hi;
        j["mean"] = c.mean;
        j["stddev"] = c.stddev;
        return j;
    };
    nlohmann::json j;
    nlohmann::json numeric = nlohmann::json::object();
    for (int c = 0; c < kNumNumeric; ++c)
        numeric[numeric_schema()[static_cast<std::size_t>(c)].name] =
            column(stats.numeric[static_cast<std::size_t>(c)]);
    nlohmann::json aggregate = nlohmann::json::object();
    const auto agg_names = aggregate_names();
    for (int c = 0; c < kNumAggregates; ++c)
        aggregate[agg_names[static_cast<std::size_t>(c)]] =
            column(stats.aggregate[static_cast<std::size_t>(c)]);
    j["numeric"] = std::move(numeric);
    j["aggregate"] = std::move(aggregate);
    j["warnings"] = stats.warnings;
    return j;
}

inline FeatureStats stats_from_json(const nlohmann::json& j) {
    auto column = [](const nlohmann::json& cj) {
        ColumnStats c;
        if (cj.contains("clip_lo")) c.clip_lo = cj.at("clip_lo").get<double>();
        if (cj.contains("clip_hi")) c.clip_hi = cj.at("clip_hi").get<double>();
        c.mean = cj.at("mean").get<double>();
        c.stddev = cj.at("stddev").get<double>();
        return c;
    };
    FeatureStats stats;
    for (int c = 0; c < kNumNumeric; ++c)
        stats.numeric[static_cast<std::size_t>(c)] =
            column(j.at("numeric").at(numeric_schema()[static_cast<std::size_t>(c)].name));
    const auto agg_names = aggregate_names();
    for (int c = 0; c < kNumAggregates; ++c)
        stats.aggregate[static_cast<std::size_t>(c)] =
            column(j.at("aggregate").at(agg_names[static_cast<std::size_t>(c)]));
    if (j.contains("warnings")) stats.warnings = j.at("warnings").get<std::vector<std::string>>();
    return stats;
}

inline nlohmann::json pipeline_embeddings_to_json(const FeaturePipeline& pipe) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : pipe.tables) arr.push_back(embedding_to_json(t));
    nlohmann::json j;
    j["feature_set"] = feature_set_name(pipe.set);
    j["tables"] = std::move(arr);
    return j;
}

}  // namespace fraudseq
