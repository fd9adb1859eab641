#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraudseq {

using TxnId = std::uint64_t;
using CardId = std::uint32_t;

enum class Label : std::uint8_t { genuine = 0, fraud = 1 };

enum class FeatureKind : std::uint8_t { numeric, categorical };

// ---------------------------------------------------------------------------
// Raw transaction schema: exactly 30 feature columns, 15 numeric and
// 15 categorical. Bookkeeping fields (txn_id, card_id, timestamp, label) are
// not feature columns. hour_of_day / day_of_week / day_of_month are derived
// from the timestamp at generation time and stored as plain numerics.
// ---------------------------------------------------------------------------

inline constexpr int kNumNumeric = 15;
inline constexpr int kNumCategorical = 15;
inline constexpr int kNumFeatures = kNumNumeric + kNumCategorical;

struct NumericColumn {
    const char* name;
};

struct CategoricalColumn {
    const char* name;
    int cardinality;  // generator-side code range [0, cardinality)
};

// Indices into Transaction::numeric
enum NumericIndex : int {
    kAmount = 0,
    kHourOfDay,
    kDayOfWeek,
    kDayOfMonth,
    kGeoDistHome,
    kTerminalRisk,
    kBasketSize,
    kAuthLatencyMs,
    kDeviceScore,
    kAccountAgeDays,
    kAuxNum0,
    kAuxNum1,
    kAuxNum2,
    kAuxNum3,
    kAuxNum4,
};

// Indices into Transaction::categorical
enum CategoricalIndex : int {
    kCountry = 0,
    kMcc,
    kTerminalType,
    kCardType,
    kEntryMode,
    kCurrency,
    kChannel,
    kMerchantTier,
    kIssuerRegion,
    kNetwork,
    kAuxCat0,
    kAuxCat1,
    kAuxCat2,
    kAuxCat3,
    kAuxCat4,
};

inline const std::array<NumericColumn, kNumNumeric>& numeric_schema() {
    static const std::array<NumericColumn, kNumNumeric> cols = {{
        {"amount"},
        {"hour_of_day"},
        {"day_of_week"},
        {"day_of_month"},
        {"geo_dist_home"},
        {"terminal_risk"},
        {"basket_size"},
        {"auth_latency_ms"},
        {"device_score"},
        {"account_age_days"},
        {"aux_num_0"},
        {"aux_num_1"},
        {"aux_num_2"},
        {"aux_num_3"},
        {"aux_num_4"},
    }};
    return cols;
}

inline const std::array<CategoricalColumn, kNumCategorical>& categorical_schema() {
    static const std::array<CategoricalColumn, kNumCategorical> cols = {{
        {"country", 32},
        {"mcc", 48},
        {"terminal_type", 6},
        {"card_type", 5},
        {"entry_mode", 7},
        {"currency", 12},
        {"channel", 4},
        {"merchant_tier", 5},
        {"issuer_region", 8},
        {"network", 4},
        {"aux_cat_0", 3},
        {"aux_cat_1", 4},
        {"aux_cat_2", 5},
        {"aux_cat_3", 6},
        {"aux_cat_4", 8},
    }};
    return cols;
}

struct Transaction {
    TxnId txn_id = 0;
    CardId card_id = 0;
    std::int64_t timestamp = 0;  // seconds since epoch, > 0
    Label label = Label::genuine;
    std::array<double, kNumNumeric> numeric{};
    std::array<std::uint16_t, kNumCategorical> categorical{};

    bool is_fraud() const { return label == Label::fraud; }
};

// Chronologically ordered set of transactions; ties broken by txn_id so the
// order is total and within-card subsequences stay chronological.
struct TransactionStream {
    std::vector<Transaction> transactions;

    std::size_t size() const { return transactions.size(); }
    bool empty() const { return transactions.empty(); }
};

inline bool txn_order(const Transaction& a, const Transaction& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.txn_id < b.txn_id;
}

inline void sort_stream(TransactionStream& stream) {
    std::sort(stream.transactions.begin(), stream.transactions.end(), txn_order);
}

struct FraudEpisode {
    CardId card_id = 0;
    std::int64_t first_fraud_time = 0;
    std::vector<TxnId> fraud_txn_ids;  // chronological
    std::int64_t block_time = 0;       // >= first_fraud_time once assigned
};

struct CardTimeline {
    CardId card_id = 0;
    std::vector<Transaction> txns;  // sorted by (timestamp, txn_id)

    std::size_t n_c() const { return txns.size(); }
    bool has_fraud() const {
        for (const auto& t : txns)
            if (t.is_fraud()) return true;
        return false;
    }
};

// Split a stream into per-card timelines ordered by card_id.
inline std::vector<CardTimeline> split_by_card(const TransactionStream& stream) {
    std::vector<std::pair<CardId, const Transaction*>> refs;
    refs.reserve(stream.size());
    for (const auto& t : stream.transactions) refs.emplace_back(t.card_id, &t);
    std::stable_sort(refs.begin(), refs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<CardTimeline> out;
    for (const auto& [cid, ptr] : refs) {
        if (out.empty() || out.back().card_id != cid) {
            out.push_back(CardTimeline{cid, {}});
        }
        out.back().txns.push_back(*ptr);
    }
    for (auto& tl : out)
        std::sort(tl.txns.begin(), tl.txns.end(), txn_order);
    return out;
}

// ---------------------------------------------------------------------------
// Civil time helpers (proleptic Gregorian, UTC)
// ---------------------------------------------------------------------------

struct CivilDate {
    int year;
    int month;  // 1..12
    int day;    // 1..31
};

inline CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const std::int64_t doe = z - era * 146097;
    const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = yoe + era * 400;
    const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const std::int64_t mp = (5 * doy + 2) / 153;
    const std::int64_t d = doy - (153 * mp + 2) / 5 + 1;
    const std::int64_t m = mp < 10 ? mp + 3 : mp - 9;
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const std::int64_t yoe = y - era * 400;
    const std::int64_t doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

inline std::string format_iso8601(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t secs = epoch_seconds % 86400;
    if (secs < 0) {
        secs += 86400;
        days -= 1;
    }
    const CivilDate cd = civil_from_days(days);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", cd.year, cd.month, cd.day,
                  static_cast<int>(secs / 3600), static_cast<int>((secs / 60) % 60),
                  static_cast<int>(secs % 60));
    return buf;
}

inline std::int64_t parse_iso8601(const std::string& s) {
    int y, mo, d, h, mi, se;
    if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &se) != 6)
        throw std::runtime_error("bad ISO-8601 timestamp: " + s);
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
}

inline int hour_of_day_utc(std::int64_t ts) {
    std::int64_t s = ts % 86400;
    if (s < 0) s += 86400;
    return static_cast<int>(s / 3600);
}

inline int day_of_week_utc(std::int64_t ts) {
    // epoch day 0 (1970-01-01) was a Thursday = 4
    std::int64_t days = ts / 86400;
    if (ts % 86400 < 0) days -= 1;
    std::int64_t dow = (days + 4) % 7;
    if (dow < 0) dow += 7;
    return static_cast<int>(dow);
}

inline int day_of_month_utc(std::int64_t ts) {
    std::int64_t days = ts / 86400;
    if (ts % 86400 < 0) days -= 1;
    return civil_from_days(days).day;
}

}  // namespace fraudseq
