#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraudseq/core.hpp"
#include "fraudseq/metrics.hpp"

namespace fraudseq {

// %.17g round-trips doubles exactly, which keeps file outputs byte-stable
// across reruns.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace io_detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return f;
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Transaction stream CSV: header row, one row per transaction, ISO-8601
// timestamps, categorical codes as integers.
// ---------------------------------------------------------------------------

inline std::string stream_csv_header() {
    std::string h = "txn_id,card_id,timestamp,label";
    for (const auto& c : numeric_schema()) h += std::string(",") + c.name;
    for (const auto& c : categorical_schema()) h += std::string(",") + c.name;
    return h;
}

inline void write_stream_csv(const TransactionStream& stream, const std::string& path) {
    auto f = io_detail::open_out(path);
    f << stream_csv_header() << '\n';
    for (const auto& t : stream.transactions) {
        f << t.txn_id << ',' << t.card_id << ',' << format_iso8601(t.timestamp) << ','
          << (t.is_fraud() ? "fraud" : "genuine");
        for (double v : t.numeric) f << ',' << format_double(v);
        for (std::uint16_t v : t.categorical) f << ',' << v;
        f << '\n';
    }
}

inline TransactionStream read_stream_csv(const std::string& path) {
    auto f = io_detail::open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty stream file: " + path);
    if (line != stream_csv_header())
        throw std::runtime_error("unexpected stream CSV header in " + path);
    TransactionStream stream;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = io_detail::split_csv_line(line);
        if (fields.size() != 4 + kNumFeatures)
            throw std::runtime_error("bad stream CSV row: " + line);
        Transaction t;
        t.txn_id = std::stoull(fields[0]);
        t.card_id = static_cast<CardId>(std::stoul(fields[1]));
        t.timestamp = parse_iso8601(fields[2]);
        if (fields[3] == "fraud")
            t.label = Label::fraud;
        else if (fields[3] == "genuine")
            t.label = Label::genuine;
        else
            throw std::runtime_error("bad label value: " + fields[3]);
        for (int i = 0; i < kNumNumeric; ++i)
            t.numeric[static_cast<std::size_t>(i)] = std::stod(fields[static_cast<std::size_t>(4 + i)]);
        for (int i = 0; i < kNumCategorical; ++i)
            t.categorical[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(
                std::stoul(fields[static_cast<std::size_t>(4 + kNumNumeric + i)]));
        stream.transactions.push_back(t);
    }
    return stream;
}

// ---------------------------------------------------------------------------
// Fraud episode sidecar: one JSON object per line.
// ---------------------------------------------------------------------------

inline void write_episodes_jsonl(const std::vector<FraudEpisode>& episodes,
                                 const std::string& path) {
    auto f = io_detail::open_out(path);
    for (const auto& e : episodes) {
        nlohmann::json j;
        j["card_id"] = e.card_id;
        j["first_fraud_time"] = format_iso8601(e.first_fraud_time);
        j["block_time"] = format_iso8601(e.block_time);
        j["fraud_txn_ids"] = e.fraud_txn_ids;
        f << j.dump() << '\n';
    }
}

inline std::vector<FraudEpisode> read_episodes_jsonl(const std::string& path) {
    auto f = io_detail::open_in(path);
    std::vector<FraudEpisode> episodes;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        FraudEpisode e;
        e.card_id = j.at("card_id").get<CardId>();
        e.first_fraud_time = parse_iso8601(j.at("first_fraud_time").get<std::string>());
        e.block_time = parse_iso8601(j.at("block_time").get<std::string>());
        e.fraud_txn_ids = j.at("fraud_txn_ids").get<std::vector<TxnId>>();
        episodes.push_back(std::move(e));
    }
    return episodes;
}

// ---------------------------------------------------------------------------
// Scored transactions CSV (evaluate input) and curve / metric outputs.
// ---------------------------------------------------------------------------

inline constexpr const char* kScoresHeader = "txn_id,card_id,timestamp,label,score";

inline void write_scores_csv(const std::vector<ScoredTxn>& scored, const std::string& path) {
    auto f = io_detail::open_out(path);
    f << kScoresHeader << '\n';
    for (const auto& s : scored) {
        f << s.txn_id << ',' << s.card_id << ',' << format_iso8601(s.timestamp) << ','
          << (s.label ? "fraud" : "genuine") << ',' << format_double(s.score) << '\n';
    }
}

inline std::vector<ScoredTxn> read_scores_csv(const std::string& path) {
    auto f = io_detail::open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty scores file: " + path);
    if (line != kScoresHeader)
        throw std::runtime_error("unexpected scores CSV header in " + path);
    std::vector<ScoredTxn> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = io_detail::split_csv_line(line);
        if (fields.size() != 5) throw std::runtime_error("bad scores CSV row: " + line);
        ScoredTxn s;
        s.txn_id = std::stoull(fields[0]);
        s.card_id = static_cast<CardId>(std::stoul(fields[1]));
        s.timestamp = parse_iso8601(fields[2]);
        s.label = fields[3] == "fraud" ? 1 : 0;
        s.score = std::stod(fields[4]);
        out.push_back(s);
    }
    return out;
}

// Curve CSV: x,y per row.
inline void write_curve_csv(const std::vector<std::pair<double, double>>& points,
                            const std::string& path, const std::string& x_name = "x",
                            const std::string& y_name = "y") {
    auto f = io_detail::open_out(path);
    f << x_name << ',' << y_name << '\n';
    for (const auto& [x, y] : points) f << format_double(x) << ',' << format_double(y) << '\n';
}

// Metric report: {metric, value, n_cards, n_txns}
inline nlohmann::json metric_report(const std::string& metric, double value,
                                    std::size_t n_cards, std::size_t n_txns) {
    nlohmann::json j;
    j["metric"] = metric;
    j["value"] = value;
    j["n_cards"] = n_cards;
    j["n_txns"] = n_txns;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& contents) {
    auto f = io_detail::open_out(path);
    f << contents;
}

inline std::string read_text_file(const std::string& path) {
    auto f = io_detail::open_in(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace fraudseq
