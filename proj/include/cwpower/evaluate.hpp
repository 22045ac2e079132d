#pragma once

// Per-burst error tables and the aggregates behind the result figures: per-cell boxplot
// statistics, MAE dB versus nominal SIR with +-1 sigma, and overall MAE% per estimator.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwpower/autograd/ops.hpp"
#include "cwpower/dataset.hpp"
#include "cwpower/model.hpp"
#include "cwpower/spectral.hpp"

namespace cwpower {

struct Estimator {
    std::string name;
    std::function<double(const CorpusRecord&)> estimate_dbm;
};

inline Estimator fft3bin_estimator(const RfConfig& rf) {
    return {"fft3bin", [f = rf.f_cw_offset_hz](const CorpusRecord& r) {
                return fft_3bin_estimate(r.raw, f).power_dbm;
            }};
}

/// Hann-windowed gain extractor applied to the DC-centred mixture.
inline Estimator oracle_estimator() {
    return {"oracle", [](const CorpusRecord& r) { return extract_gain(r.dc).power_dbm; }};
}

inline Estimator model_estimator(const ModelWeights<float>& weights) {
    if (weights.params.empty()) throw std::invalid_argument("model_estimator: model has no weights");
    auto w = std::make_shared<ModelWeights<float>>(weights.clone());
    w->set_requires_grad(false);
    const bool dc = expects_dc_representation(w->spec.variant);
    return {std::string(to_string(w->spec.variant)),
            [w, dc](const CorpusRecord& r) { return predict_gain(*w, r.representation(dc)).power_dbm; }};
}

struct BurstResult {
    std::uint32_t cell = 0;
    std::uint32_t index = 0;
    double cw_tx_dbm = 0.0;
    double qpsk_tx_dbm = 0.0;
    double sir_db = 0.0;
    std::string estimator;
    double true_dbm = 0.0;
    double est_dbm = 0.0;
    double err_db = 0.0;
    double err_pct = 0.0;
};

struct BoxStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_lo = 0.0;  // q1 - 1.5 IQR
    double whisker_hi = 0.0;  // q3 + 1.5 IQR
    std::size_t outliers = 0;
};

struct CellSummary {
    std::string estimator;
    std::uint32_t cell = 0;
    double cw_tx_dbm = 0.0;
    double qpsk_tx_dbm = 0.0;
    double sir_db = 0.0;
    std::size_t count = 0;
    BoxStats box;             // of err_db
    double mae_db = 0.0;      // mean |err_db|
    double median_abs_db = 0.0;
};

struct SirRow {
    double sir_db = 0.0;
    std::string estimator;
    double mae_db = 0.0;
    double sigma_db = 0.0;  // population std of |err_db| over bursts
    std::size_t count = 0;
};

struct EstimatorSummary {
    std::string estimator;
    double mae_pct = 0.0;
    double mae_db = 0.0;
    std::size_t count = 0;
};

struct EvalReport {
    std::vector<BurstResult> per_burst;
    std::vector<CellSummary> per_cell;
    std::vector<SirRow> per_sir;
    std::vector<EstimatorSummary> overall;

    const EstimatorSummary& summary(std::string_view name) const {
        for (const auto& s : overall)
            if (s.estimator == name) return s;
        throw std::out_of_range("no estimator '" + std::string(name) + "' in report");
    }
};

/// Quantile of sorted data, linear interpolation between order statistics (h = (n - 1) p).
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline BoxStats box_stats(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    BoxStats b;
    b.q1 = quantile_sorted(values, 0.25);
    b.median = quantile_sorted(values, 0.5);
    b.q3 = quantile_sorted(values, 0.75);
    const double iqr = b.q3 - b.q1;
    b.whisker_lo = b.q1 - 1.5 * iqr;
    b.whisker_hi = b.q3 + 1.5 * iqr;
    b.outliers = static_cast<std::size_t>(std::count_if(
        values.begin(), values.end(), [&](double v) { return v < b.whisker_lo || v > b.whisker_hi; }));
    return b;
}

namespace detail {

// Cells sharing a nominal SIR merge; keys are SIR on a 0.1 dB grid.
inline long long sir_key(double sir_db) { return std::llround(sir_db * 10.0); }

}  // namespace detail

/// Nominal-SIR table: rows ascending in SIR, estimators in report order within a SIR.
inline std::vector<SirRow> sir_sweep_table(const EvalReport& report) {
    if (report.per_burst.empty()) throw std::invalid_argument("sir_sweep_table: empty report");
    std::vector<std::string> order;
    for (const auto& s : report.overall) order.push_back(s.estimator);
    std::map<std::pair<long long, std::size_t>, std::vector<double>> groups;
    for (const BurstResult& b : report.per_burst) {
        const auto est = static_cast<std::size_t>(std::find(order.begin(), order.end(), b.estimator) - order.begin());
        groups[{detail::sir_key(b.sir_db), est}].push_back(std::abs(b.err_db));
    }
    std::vector<SirRow> rows;
    for (const auto& [key, errs] : groups) {
        double mean = 0.0;
        for (double e : errs) mean += e;
        mean /= static_cast<double>(errs.size());
        double var = 0.0;
        for (double e : errs) var += (e - mean) * (e - mean);
        var /= static_cast<double>(errs.size());
        rows.push_back({static_cast<double>(key.first) / 10.0,
                        key.second < order.size() ? order[key.second] : std::string{}, mean, std::sqrt(var),
                        errs.size()});
    }
    return rows;
}

inline EvalReport evaluate(const Corpus& corpus, std::span<const Estimator> estimators, Split split = Split::test) {
    if (estimators.empty()) throw std::invalid_argument("evaluate: no estimators given");
    for (const Estimator& e : estimators) {
        if (!e.estimate_dbm) throw std::invalid_argument("evaluate: estimator '" + e.name + "' has no model");
        if (std::count_if(estimators.begin(), estimators.end(), [&](const Estimator& o) { return o.name == e.name; }) > 1) {
            throw std::invalid_argument("evaluate: estimator name '" + e.name + "' appears twice");
        }
    }
    const std::vector<std::size_t> idx = corpus.indices(split);
    if (idx.empty()) throw std::invalid_argument("evaluate: corpus has no records in the '" +
                                                 std::string(to_string(split)) + "' split");
    const double floor_dbm = mw_to_dbm(ag::kPowerFloorMw);

    EvalReport report;
    for (const Estimator& e : estimators) {
        double pct = 0.0, db = 0.0;
        for (std::size_t i : idx) {
            const CorpusRecord& r = corpus.records[i];
            BurstResult b;
            b.cell = r.cell;
            b.index = r.index;
            b.cw_tx_dbm = r.label.cw_tx_dbm;
            b.qpsk_tx_dbm = r.label.qpsk_tx_dbm;
            b.sir_db = r.label.sir_db;
            b.estimator = e.name;
            b.true_dbm = r.label.cw_rx_dbm;
            const double est = e.estimate_dbm(r);
            if (std::isnan(est)) throw NumericalError("evaluate: estimator '" + e.name + "' returned NaN");
            b.est_dbm = std::max(est, floor_dbm);
            b.err_db = b.est_dbm - b.true_dbm;
            b.err_pct = 100.0 * std::abs(std::pow(10.0, b.err_db / 10.0) - 1.0);
            pct += b.err_pct;
            db += std::abs(b.err_db);
            report.per_burst.push_back(std::move(b));
        }
        report.overall.push_back({e.name, pct / static_cast<double>(idx.size()), db / static_cast<double>(idx.size()),
                                  idx.size()});
    }

    std::map<std::pair<std::size_t, std::uint32_t>, std::vector<const BurstResult*>> cells;
    for (const BurstResult& b : report.per_burst) {
        const auto est = static_cast<std::size_t>(
            std::find_if(estimators.begin(), estimators.end(), [&](const Estimator& e) { return e.name == b.estimator; }) -
            estimators.begin());
        cells[{est, b.cell}].push_back(&b);
    }
    for (const auto& [key, rows] : cells) {
        CellSummary s;
        s.estimator = estimators[key.first].name;
        s.cell = key.second;
        s.cw_tx_dbm = rows.front()->cw_tx_dbm;
        s.qpsk_tx_dbm = rows.front()->qpsk_tx_dbm;
        s.sir_db = rows.front()->sir_db;
        s.count = rows.size();
        std::vector<double> err, abs_err;
        for (const BurstResult* b : rows) {
            err.push_back(b->err_db);
            abs_err.push_back(std::abs(b->err_db));
            s.mae_db += std::abs(b->err_db);
        }
        s.mae_db /= static_cast<double>(rows.size());
        s.box = box_stats(err);
        std::sort(abs_err.begin(), abs_err.end());
        s.median_abs_db = quantile_sorted(abs_err, 0.5);
        report.per_cell.push_back(std::move(s));
    }
    report.per_sir = sir_sweep_table(report);
    return report;
}

}  // namespace cwpower
