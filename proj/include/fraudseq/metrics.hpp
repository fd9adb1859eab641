#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fraudseq/core.hpp"

namespace fraudseq {

// ---------------------------------------------------------------------------
// Precision-recall machinery. Area is computed as average precision with
// tie-grouped thresholds: AP = sum_k (R_k - R_{k-1}) * P_k over descending
// unique score values. No interpolation between points.
// ---------------------------------------------------------------------------

struct PrecisionRecallCurve {
    std::vector<std::pair<double, double>> points;  // (recall, precision), recall non-decreasing
    double area = 0.0;
};

inline PrecisionRecallCurve pr_curve(const std::vector<double>& scores,
                                     const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("pr_curve: scores and labels differ in length");
    if (scores.empty()) throw std::invalid_argument("pr_curve: empty input");

    std::size_t total_pos = 0;
    for (int l : labels) total_pos += (l != 0);
    if (total_pos == 0)
        throw std::invalid_argument("pr_curve: no positive labels, AUCPR undefined");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    PrecisionRecallCurve curve;
    double tp = 0.0, fp = 0.0, prev_recall = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        // one threshold step per group of tied scores
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]] != 0)
                tp += 1.0;
            else
                fp += 1.0;
            ++i;
        }
        const double recall = tp / static_cast<double>(total_pos);
        const double precision = tp / (tp + fp);
        curve.area += (recall - prev_recall) * precision;
        curve.points.emplace_back(recall, precision);
        prev_recall = recall;
    }
    return curve;
}

inline double aucpr_transaction(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
    return pr_curve(scores, labels).area;
}

// One scored transaction, as consumed by the card-level metrics.
struct ScoredTxn {
    TxnId txn_id = 0;
    CardId card_id = 0;
    std::int64_t timestamp = 0;
    int label = 0;  // 1 = fraud
    double score = 0.0;
};

struct CardScore {
    CardId card_id = 0;
    int label = 0;        // fraud iff any scored transaction on the card is fraud
    double score = 0.0;   // ranking score
    TxnId source_txn = 0; // transaction that produced the score
};

namespace detail {

inline std::vector<std::vector<const ScoredTxn*>> group_by_card(
    const std::vector<ScoredTxn>& txns) {
    std::unordered_map<CardId, std::size_t> index;
    std::vector<std::vector<const ScoredTxn*>> groups;
    for (const auto& t : txns) {
        auto [it, inserted] = index.try_emplace(t.card_id, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(&t);
    }
    return groups;
}

}  // namespace detail

// Card score = max over its transactions.
inline std::vector<CardScore> card_scores_regular(const std::vector<ScoredTxn>& txns) {
    std::vector<CardScore> out;
    for (const auto& group : detail::group_by_card(txns)) {
        CardScore cs;
        cs.card_id = group.front()->card_id;
        const ScoredTxn* best = group.front();
        for (const ScoredTxn* t : group) {
            cs.label |= t->label;
            if (t->score > best->score ||
                (t->score == best->score && t->txn_id < best->txn_id))
                best = t;
        }
        cs.score = best->score;
        cs.source_txn = best->txn_id;
        out.push_back(cs);
    }
    return out;
}

// Fraud cards are scored by the prediction on their chronologically first
// fraudulent transaction (ties on timestamp broken by lowest txn_id); genuine
// cards by their max score.
inline std::vector<CardScore> card_scores_early(const std::vector<ScoredTxn>& txns) {
    std::vector<CardScore> out;
    for (const auto& group : detail::group_by_card(txns)) {
        CardScore cs;
        cs.card_id = group.front()->card_id;
        const ScoredTxn* max_txn = group.front();
        const ScoredTxn* first_fraud = nullptr;
        for (const ScoredTxn* t : group) {
            cs.label |= t->label;
            if (t->score > max_txn->score ||
                (t->score == max_txn->score && t->txn_id < max_txn->txn_id))
                max_txn = t;
            if (t->label != 0) {
                if (first_fraud == nullptr || t->timestamp < first_fraud->timestamp ||
                    (t->timestamp == first_fraud->timestamp && t->txn_id < first_fraud->txn_id))
                    first_fraud = t;
            }
        }
        const ScoredTxn* chosen = cs.label ? first_fraud : max_txn;
        cs.score = chosen->score;
        cs.source_txn = chosen->txn_id;
        out.push_back(cs);
    }
    return out;
}

namespace detail {

inline double aucpr_of_cards(const std::vector<CardScore>& cards) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(cards.size());
    labels.reserve(cards.size());
    for (const auto& c : cards) {
        scores.push_back(c.score);
        labels.push_back(c.label);
    }
    return aucpr_transaction(scores, labels);
}

}  // namespace detail

inline double aucpr_card_regular(const std::vector<ScoredTxn>& txns) {
    if (txns.empty()) throw std::invalid_argument("aucpr_card_regular: empty input");
    return detail::aucpr_of_cards(card_scores_regular(txns));
}

inline double aucpr_card_early(const std::vector<ScoredTxn>& txns) {
    if (txns.empty()) throw std::invalid_argument("aucpr_card_early: empty input");
    return detail::aucpr_of_cards(card_scores_early(txns));
}

// ---------------------------------------------------------------------------
// Delay / availability analyses
// ---------------------------------------------------------------------------

// Empirical CDF as a step function: (delay_seconds, cumulative_fraction),
// one point per distinct delay, fractions non-decreasing.
struct DelayCurve {
    std::vector<std::pair<double, double>> points;

    double at(double delay) const {
        // largest cumulative fraction whose delay <= query
        double frac = 0.0;
        for (const auto& [d, f] : points) {
            if (d <= delay)
                frac = f;
            else
                break;
        }
        return frac;
    }
};

inline DelayCurve empirical_cdf(std::vector<double> values, std::size_t denominator) {
    std::sort(values.begin(), values.end());
    DelayCurve curve;
    const double n = static_cast<double>(denominator);
    std::size_t i = 0;
    while (i < values.size()) {
        const double v = values[i];
        while (i < values.size() && values[i] == v) ++i;
        curve.points.emplace_back(v, static_cast<double>(i) / n);
    }
    return curve;
}

// CDF of (block_time - first_fraud_time) over episodes.
inline DelayCurve verification_delay_cdf(const std::vector<FraudEpisode>& episodes) {
    if (episodes.empty())
        throw std::invalid_argument("verification_delay_cdf: no episodes");
    std::vector<double> delays;
    delays.reserve(episodes.size());
    for (const auto& e : episodes)
        delays.push_back(static_cast<double>(e.block_time - e.first_fraud_time));
    return empirical_cdf(std::move(delays), delays.size());
}

// curve_k(t) = fraction of compromised cards whose k-th transaction after the
// first fraud happened within delay t. Cards that never reach a k-th
// transaction keep the curve below 1. "After" is by (timestamp, txn_id) order.
inline std::vector<DelayCurve> future_availability_curves(const TransactionStream& stream,
                                                          const std::vector<FraudEpisode>& episodes,
                                                          int k_max = 4) {
    struct FirstFraud {
        std::int64_t time;
        TxnId txn_id;
    };
    std::unordered_map<CardId, FirstFraud> first_fraud;
    for (const auto& e : episodes) {
        if (e.fraud_txn_ids.empty()) continue;
        first_fraud[e.card_id] = FirstFraud{e.first_fraud_time, e.fraud_txn_ids.front()};
    }

    // delays[k][*] = delay of the (k+1)-th post-fraud transaction per card
    std::vector<std::vector<double>> delays(static_cast<std::size_t>(k_max));
    std::unordered_map<CardId, int> seen;
    // The stream is chronological, so one pass collects arrivals in order.
    for (const auto& t : stream.transactions) {
        auto it = first_fraud.find(t.card_id);
        if (it == first_fraud.end()) continue;
        const auto& ff = it->second;
        if (t.timestamp < ff.time) continue;
        if (t.timestamp == ff.time && t.txn_id <= ff.txn_id) continue;
        int& k = seen[t.card_id];
        if (k < k_max) {
            delays[static_cast<std::size_t>(k)].push_back(
                static_cast<double>(t.timestamp - ff.time));
        }
        ++k;
    }

    std::vector<DelayCurve> curves;
    curves.reserve(static_cast<std::size_t>(k_max));
    for (int k = 0; k < k_max; ++k)
        curves.push_back(empirical_cdf(std::move(delays[static_cast<std::size_t>(k)]),
                                       episodes.size()));
    return curves;
}

}  // namespace fraudseq
