#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "fraudseq/core.hpp"
#include "fraudseq/features.hpp"
#include "fraudseq/io.hpp"
#include "fraudseq/rng.hpp"

namespace fraudseq {

// Sequence layout m_P-1-m_F: m_P past transactions, the target, m_F future
// transactions. The target sits at index m_P.
struct Triplet {
    int past = 0;
    int future = 0;

    int length() const { return past + 1 + future; }
    int target_index() const { return past; }

    std::string str() const {
        return std::to_string(past) + "-1-" + std::to_string(future);
    }

    static Triplet parse(const std::string& s) {
        int p, one, f;
        if (std::sscanf(s.c_str(), "%d-%d-%d", &p, &one, &f) != 3 || one != 1 || p < 0 || f < 0)
            throw std::invalid_argument("bad triplet (expected e.g. \"4-1-2\"): " + s);
        return Triplet{p, f};
    }

    bool operator==(const Triplet&) const = default;
};

// Sliding-window starts with stride one: max(0, n_c - l_s + 1) windows; cards
// shorter than the sequence length yield none.
inline std::vector<std::size_t> extract_windows(const CardTimeline& timeline, int l_s) {
    if (l_s < 1) throw std::invalid_argument("extract_windows: sequence length must be >= 1");
    std::vector<std::size_t> starts;
    const std::size_t n_c = timeline.txns.size();
    if (n_c < static_cast<std::size_t>(l_s)) return starts;
    const std::size_t n_s = n_c - static_cast<std::size_t>(l_s) + 1;
    starts.reserve(n_s);
    for (std::size_t s = 0; s < n_s; ++s) starts.push_back(s);
    return starts;
}

struct TimeInterval {
    std::int64_t begin = 0;
    std::int64_t end = 0;  // half-open [begin, end)

    bool contains(std::int64_t t) const { return t >= begin && t < end; }
    bool overlaps(const TimeInterval& o) const { return begin < o.end && o.begin < end; }
};

struct SplitSpec {
    TimeInterval train;
    TimeInterval gap;
    TimeInterval test;

    void validate() const {
        if (train.begin >= train.end || gap.begin >= gap.end || test.begin >= test.end)
            throw std::invalid_argument("split: empty interval");
        if (train.overlaps(gap) || gap.overlaps(test) || train.overlaps(test))
            throw std::invalid_argument("split: intervals overlap");
        if (!(train.end <= gap.begin && gap.end <= test.begin))
            throw std::invalid_argument("split: intervals must be ordered train < gap < test");
    }

    // offsets in days relative to a stream start
    static SplitSpec from_days(std::int64_t start_epoch, double train_days, double gap_days,
                               double test_days) {
        auto at = [&](double d) { return start_epoch + static_cast<std::int64_t>(d * 86400.0); };
        SplitSpec s;
        s.train = {at(0), at(train_days)};
        s.gap = {at(train_days), at(train_days + gap_days)};
        s.test = {at(train_days + gap_days), at(train_days + gap_days + test_days)};
        return s;
    }
};

// Partition by target membership: transactions whose timestamp falls in the
// gap belong to neither side.
inline std::pair<TransactionStream, TransactionStream> temporal_split(
    const TransactionStream& stream, const SplitSpec& spec) {
    spec.validate();
    TransactionStream train, test;
    for (const auto& t : stream.transactions) {
        if (spec.train.contains(t.timestamp))
            train.transactions.push_back(t);
        else if (spec.test.contains(t.timestamp))
            test.transactions.push_back(t);
    }
    return {std::move(train), std::move(test)};
}

// Keeps every timeline containing fraud; genuine-only timelines survive
// independently with probability keep_ratio. Applied to the training split
// only. Decisions derive from (seed, card_id) and are order-independent.
inline std::vector<CardTimeline> account_sample(const std::vector<CardTimeline>& timelines,
                                                double keep_ratio_genuine, std::uint64_t seed) {
    if (keep_ratio_genuine < 0.0 || keep_ratio_genuine > 1.0)
        throw std::invalid_argument("account_sample: keep ratio must be in [0,1]");
    std::vector<CardTimeline> kept;
    for (const auto& tl : timelines) {
        if (tl.has_fraud()) {
            kept.push_back(tl);
            continue;
        }
        Rng rng(derive_seed(seed, 0x616363, tl.card_id));
        if (rng.bernoulli(keep_ratio_genuine)) kept.push_back(tl);
    }
    return kept;
}

// One model input: l_s vectorized transactions, label taken from the target.
struct SequenceSample {
    CardId card_id = 0;
    TxnId target_txn_id = 0;
    std::int64_t target_time = 0;
    Label label = Label::genuine;
    std::vector<float> data;  // row-major, length() x dim
};

struct SampleSet {
    Triplet triplet;
    int dim = 0;
    std::vector<SequenceSample> samples;

    std::size_t size() const { return samples.size(); }
};

// Builds one sample per window whose target transaction lies in `interval`
// (and, when given, in `eligible`). Window context may extend outside the
// interval; context labels are never used.
inline SampleSet make_dataset(const std::vector<CardTimeline>& timelines, const Triplet& triplet,
                              const FeaturePipeline& pipeline, const TimeInterval& interval,
                              const std::unordered_set<TxnId>* eligible = nullptr) {
    SampleSet set;
    set.triplet = triplet;
    set.dim = pipeline.dim();
    const int l_s = triplet.length();
    const std::size_t dim = static_cast<std::size_t>(set.dim);

    for (const auto& tl : timelines) {
        const auto starts = extract_windows(tl, l_s);
        if (starts.empty()) continue;

        // does any admissible target fall in the interval?
        bool any = false;
        for (std::size_t s : starts) {
            const auto& target = tl.txns[s + static_cast<std::size_t>(triplet.target_index())];
            if (interval.contains(target.timestamp) &&
                (eligible == nullptr || eligible->count(target.txn_id))) {
                any = true;
                break;
            }
        }
        if (!any) continue;

        // vectorize the card once; windows share rows
        std::vector<std::vector<double>> rows;
        rows.reserve(tl.txns.size());
        for (std::size_t i = 0; i < tl.txns.size(); ++i) {
            std::array<double, kNumAggregates> aggs{};
            const std::array<double, kNumAggregates>* aggs_ptr = nullptr;
            if (pipeline.set == FeatureSet::base_agg) {
                aggs = compute_aggregates(tl, i);
                aggs_ptr = &aggs;
            }
            rows.push_back(pipeline.transform(tl.txns[i], aggs_ptr).values);
        }

        for (std::size_t s : starts) {
            const std::size_t target_idx = s + static_cast<std::size_t>(triplet.target_index());
            const auto& target = tl.txns[target_idx];
            if (!interval.contains(target.timestamp)) continue;
            if (eligible != nullptr && !eligible->count(target.txn_id)) continue;
            SequenceSample sample;
            sample.card_id = tl.card_id;
            sample.target_txn_id = target.txn_id;
            sample.target_time = target.timestamp;
            sample.label = target.label;
            sample.data.reserve(static_cast<std::size_t>(l_s) * dim);
            for (int r = 0; r < l_s; ++r)
                for (std::size_t c = 0; c < dim; ++c)
                    sample.data.push_back(
                        static_cast<float>(rows[s + static_cast<std::size_t>(r)][c]));
            set.samples.push_back(std::move(sample));
        }
    }
    return set;
}

// Fair-comparison targets: transactions with at least max_past predecessors
// and max_future successors on their card, with timestamp in the interval.
inline std::unordered_set<TxnId> eligible_targets(const std::vector<CardTimeline>& timelines,
                                                  int max_past, int max_future,
                                                  const TimeInterval& interval) {
    std::unordered_set<TxnId> out;
    for (const auto& tl : timelines) {
        const std::size_t n = tl.txns.size();
        if (n < static_cast<std::size_t>(max_past + max_future + 1)) continue;
        for (std::size_t i = static_cast<std::size_t>(max_past);
             i + static_cast<std::size_t>(max_future) < n; ++i) {
            if (interval.contains(tl.txns[i].timestamp)) out.insert(tl.txns[i].txn_id);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSONL serialization: one sample per line.
// ---------------------------------------------------------------------------

inline void write_samples_jsonl(const SampleSet& set, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& s : set.samples) {
        nlohmann::json j;
        j["card_id"] = s.card_id;
        j["target_txn_id"] = s.target_txn_id;
        j["target_time"] = format_iso8601(s.target_time);
        j["label"] = s.label == Label::fraud ? "fraud" : "genuine";
        nlohmann::json rows = nlohmann::json::array();
        const std::size_t dim = static_cast<std::size_t>(set.dim);
        for (int r = 0; r < set.triplet.length(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < dim; ++c)
                row.push_back(s.data[static_cast<std::size_t>(r) * dim + c]);
            rows.push_back(std::move(row));
        }
        j["rows"] = std::move(rows);
        f << j.dump() << '\n';
    }
}

inline SampleSet read_samples_jsonl(const std::string& path, const Triplet& triplet) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    SampleSet set;
    set.triplet = triplet;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        SequenceSample s;
        s.card_id = j.at("card_id").get<CardId>();
        s.target_txn_id = j.at("target_txn_id").get<TxnId>();
        s.target_time = parse_iso8601(j.at("target_time").get<std::string>());
        s.label = j.at("label").get<std::string>() == "fraud" ? Label::fraud : Label::genuine;
        const auto& rows = j.at("rows");
        if (static_cast<int>(rows.size()) != triplet.length())
            throw std::runtime_error("sample row count does not match triplet " + triplet.str());
        for (const auto& row : rows) {
            if (set.dim == 0) set.dim = static_cast<int>(row.size());
            for (const auto& v : row) s.data.push_back(v.get<float>());
        }
        set.samples.push_back(std::move(s));
    }
    return set;
}

}  // namespace fraudseq
