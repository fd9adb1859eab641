#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fraudseq/core.hpp"
#include "fraudseq/rng.hpp"

namespace fraudseq {

// ---------------------------------------------------------------------------
// Synthetic stream generator. Genuine behavior per card is habit-driven
// (dominant countries / merchant categories / amount regime); frauds draw
// from population-level distributions so they read as discrepancies from the
// card's own habits rather than from globally separable feature values.
// Fraud bursts and card-block delays are calibrated so the delay and
// availability statistics of the generated data land on the published
// distributional targets (see tests/ and the acceptance suite).
// ---------------------------------------------------------------------------

struct GeneratorConfig {
    int n_cards = 10000;
    double days = 60.0;
    std::int64_t start_epoch = 1704067200;  // 2024-01-01T00:00:00Z

    // genuine arrival process: per-card log-normal gaps, parameters drawn
    // from a population prior; occasional short "session" gaps
    double gap_median_hours = 72.0;
    double gap_card_log_sigma = 0.6;
    double gap_sigma_lo = 0.5;
    double gap_sigma_hi = 1.1;
    double session_prob = 0.08;
    double session_median_minutes = 20.0;
    double session_log_sigma = 0.8;

    // fraud occurrence
    double fraud_card_rate = 0.04;
    double fraud_txn_rate_target = 0.0;  // > 0 overrides fraud_card_rate by calibration
    std::vector<double> burst_len_probs = {0.14, 0.10, 0.10, 0.04, 0.62};  // lengths 1..K
    double burst_tail_continue = 0.5;  // geometric continuation past length K
    double burst_gap_median_minutes = 10.0;
    double burst_gap_log_sigma = 1.0;
    double fraud_window_lo = 0.15;  // first fraud lands in this fraction of the horizon
    double fraud_window_hi = 0.98;

    // card blocking: log-normal investigations mixed with a uniform tail,
    // clamped at block_max_days
    double block_lognormal_weight = 0.8;
    double block_median_hours = 48.0;
    double block_log_sigma = 1.8;
    double block_max_days = 10.0;

    // fraud signal strength: 0 = fraud features indistinguishable from the
    // card's habit, 1 = fully population-drawn
    double separability = 0.6;

    // amount regime
    double amount_median = 25.0;
    double amount_card_sigma = 0.7;
    double amount_txn_sigma = 0.55;

    std::uint64_t seed = 42;

    double horizon_seconds() const { return days * 86400.0; }
    std::int64_t end_epoch() const {
        return start_epoch + static_cast<std::int64_t>(horizon_seconds());
    }

    void validate() const {
        if (n_cards <= 0) throw std::invalid_argument("generator: n_cards must be positive");
        if (days <= 0) throw std::invalid_argument("generator: days must be positive");
        if (fraud_card_rate < 0 || fraud_card_rate > 1)
            throw std::invalid_argument("generator: fraud_card_rate must be in [0,1]");
        if (fraud_txn_rate_target < 0 || fraud_txn_rate_target > 1)
            throw std::invalid_argument("generator: fraud_txn_rate_target must be in [0,1]");
        if (separability < 0 || separability > 1)
            throw std::invalid_argument("generator: separability must be in [0,1]");
        if (burst_len_probs.empty())
            throw std::invalid_argument("generator: burst_len_probs must not be empty");
        double total = 0.0;
        for (double p : burst_len_probs) {
            if (p < 0) throw std::invalid_argument("generator: negative burst length probability");
            total += p;
        }
        if (total <= 0) throw std::invalid_argument("generator: burst_len_probs sums to zero");
        if (burst_tail_continue < 0 || burst_tail_continue >= 1)
            throw std::invalid_argument("generator: burst_tail_continue must be in [0,1)");
        if (fraud_window_lo < 0 || fraud_window_hi > 1 || fraud_window_lo >= fraud_window_hi)
            throw std::invalid_argument("generator: fraud window must satisfy 0 <= lo < hi <= 1");
        if (block_lognormal_weight < 0 || block_lognormal_weight > 1)
            throw std::invalid_argument("generator: block_lognormal_weight must be in [0,1]");
        if (block_max_days < 0) throw std::invalid_argument("generator: block_max_days < 0");
        if (gap_median_hours <= 0) throw std::invalid_argument("generator: gap_median_hours <= 0");
    }

    // expected burst length under (burst_len_probs, burst_tail_continue)
    double expected_burst_length() const {
        double total = 0.0;
        for (double p : burst_len_probs) total += p;
        double mean = 0.0;
        const std::size_t k = burst_len_probs.size();
        for (std::size_t i = 0; i + 1 < k; ++i)
            mean += burst_len_probs[i] / total * static_cast<double>(i + 1);
        const double tail_mean =
            static_cast<double>(k) + burst_tail_continue / (1.0 - burst_tail_continue);
        mean += burst_len_probs[k - 1] / total * tail_mean;
        return mean;
    }
};

struct GeneratedStream {
    TransactionStream stream;
    std::vector<FraudEpisode> episodes;
};

namespace gen_detail {

inline constexpr std::uint64_t kTagGenuine = 0x67656e75;  // per-stage seed tags
inline constexpr std::uint64_t kTagFraud = 0x66726175;
inline constexpr std::uint64_t kTagBlock = 0x626c6f63;

inline std::vector<double> zipf_weights(int n, double exponent) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
    return w;
}

struct CardProfile {
    // habit mixtures
    std::array<std::uint16_t, 3> countries;
    std::array<std::uint16_t, 4> mccs;
    std::uint16_t terminal_type, entry_mode, currency, channel, merchant_tier;
    // fixed card attributes (unchanged by fraud)
    std::uint16_t card_type, issuer_region, network;
    double amount_median;
    double device_trust;
    double account_age_days;
    double aux_mean_0, aux_mean_1;
};

struct PopulationPriors {
    std::vector<double> country_w = zipf_weights(32, 0.8);
    std::vector<double> mcc_w = zipf_weights(48, 0.8);
    std::vector<double> terminal_w = zipf_weights(6, 0.6);
    std::vector<double> entry_w = zipf_weights(7, 0.6);
    std::vector<double> currency_w = zipf_weights(12, 0.9);
    std::vector<double> channel_w = zipf_weights(4, 0.5);
    std::vector<double> tier_w = zipf_weights(5, 0.4);
    std::vector<double> region_w = zipf_weights(8, 0.5);
    std::vector<double> network_w = zipf_weights(4, 0.7);
    std::vector<double> card_type_w = zipf_weights(5, 0.5);
};

inline const PopulationPriors& priors() {
    static const PopulationPriors p;
    return p;
}

inline CardProfile draw_profile(const GeneratorConfig& cfg, Rng& rng) {
    const auto& pp = priors();
    CardProfile prof;
    auto draw_distinct = [&](const std::vector<double>& w, auto& slots) {
        std::unordered_set<std::uint16_t> used;
        for (auto& s : slots) {
            std::uint16_t v;
            do {
                v = static_cast<std::uint16_t>(rng.categorical(w));
            } while (used.count(v) && used.size() < w.size());
            used.insert(v);
            s = v;
        }
    };
    draw_distinct(pp.country_w, prof.countries);
    draw_distinct(pp.mcc_w, prof.mccs);
    prof.terminal_type = static_cast<std::uint16_t>(rng.categorical(pp.terminal_w));
    prof.entry_mode = static_cast<std::uint16_t>(rng.categorical(pp.entry_w));
    prof.currency = static_cast<std::uint16_t>(rng.categorical(pp.currency_w));
    prof.channel = static_cast<std::uint16_t>(rng.categorical(pp.channel_w));
    prof.merchant_tier = static_cast<std::uint16_t>(rng.categorical(pp.tier_w));
    prof.card_type = static_cast<std::uint16_t>(rng.categorical(pp.card_type_w));
    prof.issuer_region = static_cast<std::uint16_t>(rng.categorical(pp.region_w));
    prof.network = static_cast<std::uint16_t>(rng.categorical(pp.network_w));
    prof.amount_median = rng.lognormal(cfg.amount_median, cfg.amount_card_sigma);
    prof.device_trust = rng.uniform(0.55, 0.95);
    prof.account_age_days = rng.uniform(30.0, 3000.0);
    prof.aux_mean_0 = rng.normal(0.0, 1.0);
    prof.aux_mean_1 = rng.normal(0.0, 1.0);
    return prof;
}

inline const std::array<double, 3> kCountryHabitW = {0.65, 0.25, 0.10};
inline const std::array<double, 4> kMccHabitW = {0.40, 0.30, 0.20, 0.10};

template <std::size_t N>
inline std::uint16_t habit_draw(const std::array<std::uint16_t, N>& values,
                                const std::array<double, N>& weights, Rng& rng) {
    double r = rng.uniform();
    for (std::size_t i = 0; i + 1 < N; ++i) {
        r -= weights[i];
        if (r < 0.0) return values[i];
    }
    return values[N - 1];
}

// fills the 30 feature columns; timestamp must already be set
inline void fill_features(Transaction& txn, const CardProfile& prof, const GeneratorConfig& cfg,
                          bool fraud, Rng& rng) {
    const auto& pp = priors();
    const double s = fraud ? cfg.separability : 0.0;

    // categorical columns
    auto habit_or_global = [&](std::uint16_t habit, const std::vector<double>& w,
                               double stick) -> std::uint16_t {
        if (fraud && rng.bernoulli(0.7 * s))
            return static_cast<std::uint16_t>(rng.categorical(w));
        return rng.bernoulli(stick) ? habit : static_cast<std::uint16_t>(rng.categorical(w));
    };
    if (fraud && rng.bernoulli(s))
        txn.categorical[kCountry] = static_cast<std::uint16_t>(rng.categorical(pp.country_w));
    else
        txn.categorical[kCountry] =
            rng.bernoulli(0.97) ? habit_draw(prof.countries, kCountryHabitW, rng)
                                : static_cast<std::uint16_t>(rng.categorical(pp.country_w));
    if (fraud && rng.bernoulli(s))
        txn.categorical[kMcc] = static_cast<std::uint16_t>(rng.categorical(pp.mcc_w));
    else
        txn.categorical[kMcc] = rng.bernoulli(0.97)
                                    ? habit_draw(prof.mccs, kMccHabitW, rng)
                                    : static_cast<std::uint16_t>(rng.categorical(pp.mcc_w));
    txn.categorical[kTerminalType] = habit_or_global(prof.terminal_type, pp.terminal_w, 0.85);
    txn.categorical[kEntryMode] = habit_or_global(prof.entry_mode, pp.entry_w, 0.85);
    txn.categorical[kCurrency] = habit_or_global(prof.currency, pp.currency_w, 0.90);
    txn.categorical[kChannel] = habit_or_global(prof.channel, pp.channel_w, 0.85);
    txn.categorical[kMerchantTier] = habit_or_global(prof.merchant_tier, pp.tier_w, 0.80);
    txn.categorical[kCardType] = prof.card_type;
    txn.categorical[kIssuerRegion] = prof.issuer_region;
    txn.categorical[kNetwork] = prof.network;
    const auto& cats = categorical_schema();
    for (int i = kAuxCat0; i <= kAuxCat4; ++i)
        txn.categorical[i] = static_cast<std::uint16_t>(
            rng.uniform_int(static_cast<std::uint64_t>(cats[static_cast<std::size_t>(i)].cardinality)));

    // numeric columns
    const double amount_median =
        fraud ? prof.amount_median * (1.0 + 2.5 * s) : prof.amount_median;
    const double amount_sigma = fraud ? cfg.amount_txn_sigma * 1.2 : cfg.amount_txn_sigma;
    txn.numeric[kAmount] = rng.lognormal(amount_median, amount_sigma);
    txn.numeric[kHourOfDay] = hour_of_day_utc(txn.timestamp);
    txn.numeric[kDayOfWeek] = day_of_week_utc(txn.timestamp);
    txn.numeric[kDayOfMonth] = day_of_month_utc(txn.timestamp);
    txn.numeric[kGeoDistHome] = rng.lognormal(fraud ? 8.0 * (1.0 + 4.0 * s) : 8.0,
                                              fraud ? 1.3 : 1.0);
    txn.numeric[kTerminalRisk] = rng.uniform(0.0, 0.4) + (fraud ? s * rng.uniform(0.0, 0.25) : 0.0);
    txn.numeric[kBasketSize] = 1.0 + std::floor(rng.exponential(2.2));
    txn.numeric[kAuthLatencyMs] = rng.lognormal(180.0, 0.5);
    txn.numeric[kDeviceScore] =
        std::clamp(rng.normal(prof.device_trust - (fraud ? 0.2 * s : 0.0), fraud ? 0.12 : 0.08),
                   0.0, 1.0);
    txn.numeric[kAccountAgeDays] =
        prof.account_age_days +
        static_cast<double>(txn.timestamp - cfg.start_epoch) / 86400.0;
    txn.numeric[kAuxNum0] = rng.normal(prof.aux_mean_0, 1.0);
    txn.numeric[kAuxNum1] = rng.normal(prof.aux_mean_1, 1.0);
    txn.numeric[kAuxNum2] = rng.normal(0.0, 1.0);
    txn.numeric[kAuxNum3] = rng.uniform(0.0, 1.0);
    txn.numeric[kAuxNum4] = rng.normal(0.0, 1.0);
}

inline int sample_burst_length(const GeneratorConfig& cfg, Rng& rng) {
    double total = 0.0;
    for (double p : cfg.burst_len_probs) total += p;
    double r = rng.uniform() * total;
    std::size_t idx = cfg.burst_len_probs.size() - 1;
    for (std::size_t i = 0; i < cfg.burst_len_probs.size(); ++i) {
        r -= cfg.burst_len_probs[i];
        if (r < 0.0) {
            idx = i;
            break;
        }
    }
    int len = static_cast<int>(idx) + 1;
    if (idx == cfg.burst_len_probs.size() - 1) {
        while (cfg.burst_tail_continue > 0.0 && rng.bernoulli(cfg.burst_tail_continue)) ++len;
    }
    return len;
}

inline constexpr TxnId kMaxTxnsPerCard = 100000;

}  // namespace gen_detail

// Genuine-only stream; txn ids are card_index * 100000 + chronological
// sequence number, so per-card generation is order-independent. Card
// profiles derive from (cfg.seed, card_id) so that fraud injection can
// reconstruct the same habits later.
inline TransactionStream generate_genuine_stream(const GeneratorConfig& cfg) {
    cfg.validate();
    TransactionStream stream;
    const std::int64_t end = cfg.end_epoch();
    for (int c = 0; c < cfg.n_cards; ++c) {
        Rng rng(derive_seed(cfg.seed, gen_detail::kTagGenuine, static_cast<std::uint64_t>(c)));
        const auto prof = gen_detail::draw_profile(cfg, rng);
        const double median_gap = rng.lognormal(cfg.gap_median_hours * 3600.0,
                                                cfg.gap_card_log_sigma);
        const double sigma_c = rng.uniform(cfg.gap_sigma_lo, cfg.gap_sigma_hi);

        double t = static_cast<double>(cfg.start_epoch) + rng.uniform(0.0, median_gap);
        TxnId seq = 0;
        while (t < static_cast<double>(end) && seq < gen_detail::kMaxTxnsPerCard) {
            Transaction txn;
            txn.txn_id = static_cast<TxnId>(c) * gen_detail::kMaxTxnsPerCard + seq;
            txn.card_id = static_cast<CardId>(c);
            txn.timestamp = static_cast<std::int64_t>(t);
            txn.label = Label::genuine;
            gen_detail::fill_features(txn, prof, cfg, /*fraud=*/false, rng);
            stream.transactions.push_back(txn);
            ++seq;
            const double gap = rng.bernoulli(cfg.session_prob)
                                   ? rng.lognormal(cfg.session_median_minutes * 60.0,
                                                   cfg.session_log_sigma)
                                   : rng.lognormal(median_gap, sigma_c);
            t += std::max(gap, 1.0);
        }
    }
    sort_stream(stream);
    return stream;
}

// Injects one fraud burst per compromised card. When fraud_txn_rate_target is
// set, the per-card compromise probability is calibrated against the genuine
// transaction count of the input stream; unattainable targets are rejected
// with the attainable range.
inline std::pair<TransactionStream, std::vector<FraudEpisode>> inject_fraud_episodes(
    TransactionStream stream, const GeneratorConfig& cfg, std::uint64_t seed) {
    cfg.validate();

    std::vector<CardId> cards;
    {
        std::unordered_set<CardId> seen;
        for (const auto& t : stream.transactions)
            if (seen.insert(t.card_id).second) cards.push_back(t.card_id);
        std::sort(cards.begin(), cards.end());
    }

    double p_compromise = cfg.fraud_card_rate;
    if (cfg.fraud_card_rate > 0.0 && cfg.fraud_txn_rate_target > 0.0 && !cards.empty()) {
        std::size_t genuine_count = 0;
        for (const auto& t : stream.transactions) genuine_count += !t.is_fraud();
        const double g = static_cast<double>(genuine_count);
        const double mean_burst = cfg.expected_burst_length();
        const double wanted_frauds =
            cfg.fraud_txn_rate_target * g / (1.0 - cfg.fraud_txn_rate_target);
        p_compromise = wanted_frauds / (mean_burst * static_cast<double>(cards.size()));
        if (p_compromise > 1.0) {
            const double m = mean_burst * static_cast<double>(cards.size());
            const double max_rate = m / (m + g);
            throw std::invalid_argument(
                "generator: fraud_txn_rate_target " + std::to_string(cfg.fraud_txn_rate_target) +
                " unattainable with these burst parameters; attainable range is [0, " +
                std::to_string(max_rate) + "]");
        }
    }

    std::vector<FraudEpisode> episodes;
    if (cfg.fraud_card_rate <= 0.0 || p_compromise <= 0.0) {
        return {std::move(stream), std::move(episodes)};
    }

    TxnId next_id = 0;
    for (const auto& t : stream.transactions) next_id = std::max(next_id, t.txn_id);
    ++next_id;

    const double horizon = cfg.horizon_seconds();
    const std::int64_t end = cfg.end_epoch();

    for (CardId cid : cards) {
        Rng rng(derive_seed(seed, gen_detail::kTagFraud, cid));
        if (!rng.bernoulli(p_compromise)) continue;

        // reconstruct the card's habit profile: fixed attributes (card type,
        // issuer, network) and the amount regime must match the card's own,
        // only merchant-context features shift under fraud
        Rng prof_rng(derive_seed(cfg.seed, gen_detail::kTagGenuine, cid));
        const auto prof = gen_detail::draw_profile(cfg, prof_rng);

        const double first_at = cfg.fraud_window_lo * horizon +
                                rng.uniform() * (cfg.fraud_window_hi - cfg.fraud_window_lo) *
                                    horizon;
        std::int64_t t = cfg.start_epoch + static_cast<std::int64_t>(first_at);
        const int burst_len = gen_detail::sample_burst_length(cfg, rng);

        FraudEpisode ep;
        ep.card_id = cid;
        ep.first_fraud_time = t;
        ep.block_time = t;  // assigned properly by assign_block_delays
        for (int j = 0; j < burst_len && t < end; ++j) {
            Transaction txn;
            txn.txn_id = next_id++;
            txn.card_id = cid;
            txn.timestamp = t;
            txn.label = Label::fraud;
            gen_detail::fill_features(txn, prof, cfg, /*fraud=*/true, rng);
            stream.transactions.push_back(txn);
            ep.fraud_txn_ids.push_back(txn.txn_id);
            const double gap = rng.lognormal(cfg.burst_gap_median_minutes * 60.0,
                                             cfg.burst_gap_log_sigma);
            t += std::max(static_cast<std::int64_t>(gap), std::int64_t{1});
        }
        episodes.push_back(std::move(ep));
    }

    sort_stream(stream);
    return {std::move(stream), std::move(episodes)};
}

// Samples block delays from the log-normal + uniform-tail mixture. The block
// can never precede the episode's last fraud, so the delay is floored by the
// burst span.
inline void assign_block_delays(std::vector<FraudEpisode>& episodes, const GeneratorConfig& cfg,
                                std::uint64_t seed) {
    cfg.validate();
    const double max_delay = cfg.block_max_days * 86400.0;
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        auto& ep = episodes[i];
        Rng rng(derive_seed(seed, gen_detail::kTagBlock, static_cast<std::uint64_t>(ep.card_id)));
        double delay;
        if (rng.bernoulli(cfg.block_lognormal_weight))
            delay = rng.lognormal(cfg.block_median_hours * 3600.0, cfg.block_log_sigma);
        else
            delay = rng.uniform(0.0, max_delay);
        delay = std::min(delay, max_delay);
        ep.block_time = ep.first_fraud_time + static_cast<std::int64_t>(delay);
    }
}

// Drops activity after block_time on compromised cards: a blocked card makes
// no further transactions.
inline void truncate_blocked_cards(TransactionStream& stream,
                                   const std::vector<FraudEpisode>& episodes) {
    std::unordered_map<CardId, std::int64_t> block_at;
    for (const auto& e : episodes) block_at[e.card_id] = e.block_time;
    if (block_at.empty()) return;
    auto& txns = stream.transactions;
    txns.erase(std::remove_if(txns.begin(), txns.end(),
                              [&](const Transaction& t) {
                                  auto it = block_at.find(t.card_id);
                                  return it != block_at.end() && t.timestamp > it->second;
                              }),
               txns.end());
}

// Full pipeline: genuine stream -> fraud injection -> block delays (floored
// by the burst span) -> truncation of blocked cards.
inline GeneratedStream generate_stream(const GeneratorConfig& cfg) {
    cfg.validate();
    TransactionStream genuine = generate_genuine_stream(cfg);
    auto [stream, episodes] = inject_fraud_episodes(std::move(genuine), cfg,
                                                    derive_seed(cfg.seed, 2));
    assign_block_delays(episodes, cfg, derive_seed(cfg.seed, 3));

    // floor each block by its episode's span so no fraud postdates the block
    std::unordered_map<TxnId, std::int64_t> fraud_times;
    for (const auto& t : stream.transactions)
        if (t.is_fraud()) fraud_times[t.txn_id] = t.timestamp;
    for (auto& ep : episodes) {
        std::int64_t last = ep.first_fraud_time;
        for (TxnId id : ep.fraud_txn_ids) last = std::max(last, fraud_times[id]);
        ep.block_time = std::max(ep.block_time, last);
    }

    truncate_blocked_cards(stream, episodes);
    return GeneratedStream{std::move(stream), std::move(episodes)};
}

inline double observed_fraud_rate(const TransactionStream& stream) {
    if (stream.empty()) return 0.0;
    std::size_t frauds = 0;
    for (const auto& t : stream.transactions) frauds += t.is_fraud();
    return static_cast<double>(frauds) / static_cast<double>(stream.size());
}

}  // namespace fraudseq
