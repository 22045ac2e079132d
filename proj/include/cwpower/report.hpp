#pragma once

// CSV and JSON serialization of evaluation reports, loss histories and PSD tables.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwpower/errors.hpp"
#include "cwpower/evaluate.hpp"
#include "cwpower/model.hpp"
#include "cwpower/spectral.hpp"

namespace cwpower::report {

/// Shortest round-trip decimal form; keeps text artifacts byte-stable across runs.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

class CsvWriter {
public:
    explicit CsvWriter(std::initializer_list<std::string_view> header) {
        bool first = true;
        for (auto h : header) {
            if (!first) out_ << ',';
            out_ << h;
            first = false;
        }
        out_ << '\n';
    }
    template <typename... Cells>
    void row(const Cells&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << '\n';
    }
    std::string str() const { return out_.str(); }

private:
    static std::string cell(double v) { return num(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(std::string_view s) { return std::string(s); }
    static std::string cell(const char* s) { return s; }
    template <typename I>
        requires std::is_integral_v<I>
    static std::string cell(I v) {
        return std::to_string(v);
    }

    std::ostringstream out_;
};

}  // namespace detail

inline std::string per_burst_csv(const EvalReport& r) {
    detail::CsvWriter w{"estimator", "cell", "index", "cw_tx_dbm", "qpsk_tx_dbm", "sir_db",
                        "true_dbm", "est_dbm", "err_db", "err_pct"};
    for (const BurstResult& b : r.per_burst) {
        w.row(b.estimator, b.cell, b.index, b.cw_tx_dbm, b.qpsk_tx_dbm, b.sir_db, b.true_dbm, b.est_dbm, b.err_db,
              b.err_pct);
    }
    return w.str();
}

inline std::string boxplot_csv(const EvalReport& r) {
    detail::CsvWriter w{"estimator", "cell", "cw_tx_dbm", "qpsk_tx_dbm", "sir_db", "count", "median_db", "q1_db",
                        "q3_db", "whisker_lo_db", "whisker_hi_db", "outliers", "mae_db"};
    for (const CellSummary& c : r.per_cell) {
        w.row(c.estimator, c.cell, c.cw_tx_dbm, c.qpsk_tx_dbm, c.sir_db, c.count, c.box.median, c.box.q1, c.box.q3,
              c.box.whisker_lo, c.box.whisker_hi, c.box.outliers, c.mae_db);
    }
    return w.str();
}

inline std::string sir_sweep_csv(const EvalReport& r) {
    detail::CsvWriter w{"sir_db", "estimator", "mae_db", "sigma_db", "lower_db", "upper_db", "count"};
    for (const SirRow& s : r.per_sir) {
        w.row(s.sir_db, s.estimator, s.mae_db, s.sigma_db, s.mae_db - s.sigma_db, s.mae_db + s.sigma_db, s.count);
    }
    return w.str();
}

inline std::string mae_pct_csv(const EvalReport& r) {
    detail::CsvWriter w{"estimator", "mae_pct", "mae_db", "count"};
    for (const EstimatorSummary& s : r.overall) w.row(s.estimator, s.mae_pct, s.mae_db, s.count);
    return w.str();
}

inline nlohmann::ordered_json summary_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["bursts_per_estimator"] = r.overall.empty() ? 0 : r.overall.front().count;
    auto& est = j["estimators"] = nlohmann::ordered_json::array();
    for (const EstimatorSummary& s : r.overall) {
        nlohmann::ordered_json e;
        e["name"] = s.estimator;
        e["mae_pct"] = s.mae_pct;
        e["mae_db"] = s.mae_db;
        auto& sir = e["mae_db_by_sir"] = nlohmann::ordered_json::array();
        for (const SirRow& row : r.per_sir) {
            if (row.estimator != s.estimator) continue;
            sir.push_back({{"sir_db", row.sir_db}, {"mae_db", row.mae_db}, {"sigma_db", row.sigma_db}});
        }
        est.push_back(std::move(e));
    }
    return j;
}

inline std::string loss_csv(const std::vector<EpochLoss>& history) {
    detail::CsvWriter w{"epoch", "train_loss_db2", "val_loss_db2"};
    for (std::size_t i = 0; i < history.size(); ++i) w.row(i + 1, history[i].train_db2, history[i].val_db2);
    return w.str();
}

/// Long-format PSD table: one row per (cell, frequency bin).
inline std::string psd_csv(const std::vector<std::pair<std::size_t, WelchPsd>>& cells) {
    detail::CsvWriter w{"cell", "freq_hz", "psd_dbm_per_bin"};
    for (const auto& [cell, psd] : cells) {
        for (std::size_t k = 0; k < psd.power_dbm.size(); ++k) w.row(cell, psd.frequency_of(k), psd.power_dbm[k]);
    }
    return w.str();
}

inline std::string parameter_table(const ModelSpec& spec) {
    std::ostringstream out;
    char line[96];
    std::snprintf(line, sizeof line, "%-8s %-14s %10s\n", "layer", "weight", "params");
    out << line;
    std::size_t total = 0;
    for (const LayerInfo& l : layer_table(spec)) {
        std::snprintf(line, sizeof line, "%-8s %-14s %10zu\n", l.name.c_str(), ag::shape_str(l.weight_shape).c_str(),
                      l.parameter_count());
        out << line;
        total += l.parameter_count();
    }
    std::snprintf(line, sizeof line, "%-8s %-14s %10zu\n", "total", "", total);
    out << line;
    return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw FileError("write to '" + path + "' failed");
}

}  // namespace cwpower::report
