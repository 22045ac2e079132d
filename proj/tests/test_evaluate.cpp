#include <gtest/gtest.h>

#include <set>

#include "cwpower/evaluate.hpp"
#include "cwpower/report.hpp"
#include "test_support.hpp"

using namespace cwpower;

namespace {

const Corpus& small_corpus() {
    static const Corpus c = [] {
        Corpus x = generate_corpus(RfConfig{}, PowerGrid{}, 34, 19);
        split_corpus(x, 0.0, 30, 19);
        return x;
    }();
    return c;
}

Estimator truth() {
    return {"truth", [](const CorpusRecord& r) { return r.label.cw_rx_dbm; }};
}

Estimator offset(double db) {
    return {"offset", [db](const CorpusRecord& r) { return r.label.cw_rx_dbm + db; }};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Quantile, HandValues) {
    const std::vector<double> v{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(std::vector<double>{7}, 0.3), 7.0);
    EXPECT_THROW(quantile_sorted(std::vector<double>{}, 0.5), std::invalid_argument);
}

TEST(BoxStats, MatchesIndependentQuantilesAndFences) {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(1 + rng.below(60));
        for (double& x : v) x = rng.normal() * 3.0 + (rng.below(10) == 0 ? 20.0 : 0.0);
        const BoxStats b = box_stats(v);
        std::vector<double> s = v;
        std::sort(s.begin(), s.end());
        EXPECT_NEAR(b.q1, cwtest::quantile_by_positions(s, 0.25), 1e-9);
        EXPECT_NEAR(b.median, cwtest::quantile_by_positions(s, 0.5), 1e-9);
        EXPECT_NEAR(b.q3, cwtest::quantile_by_positions(s, 0.75), 1e-9);
        EXPECT_LE(b.q1, b.median);
        EXPECT_LE(b.median, b.q3);
        EXPECT_DOUBLE_EQ(b.whisker_lo, b.q1 - 1.5 * (b.q3 - b.q1));
        EXPECT_DOUBLE_EQ(b.whisker_hi, b.q3 + 1.5 * (b.q3 - b.q1));
        std::size_t out = 0;
        for (double x : v) out += (x < b.whisker_lo || x > b.whisker_hi) ? 1 : 0;
        EXPECT_EQ(b.outliers, out);
    }
}

TEST(Evaluate, PerfectEstimatorHasZeroError) {
    const std::vector<Estimator> est{truth()};
    const EvalReport r = evaluate(small_corpus(), est);
    EXPECT_EQ(r.per_burst.size(), 40u * 30u);
    for (const auto& b : r.per_burst) {
        EXPECT_EQ(b.err_db, 0.0);
        EXPECT_EQ(b.err_pct, 0.0);
    }
    EXPECT_EQ(r.summary("truth").mae_pct, 0.0);
    EXPECT_EQ(r.summary("truth").mae_db, 0.0);
    for (const auto& c : r.per_cell) {
        EXPECT_EQ(c.box.median, 0.0);
        EXPECT_EQ(c.box.outliers, 0u);
    }
    for (const auto& s : r.per_sir) EXPECT_EQ(s.sigma_db, 0.0);
}

TEST(Evaluate, ConstantOffsetErrorsAndPercentIdentity) {
    const std::vector<Estimator> est{offset(3.0), offset(-1.0)};
    EXPECT_THROW(evaluate(small_corpus(), est), std::invalid_argument);  // duplicate names

    const std::vector<Estimator> one{offset(3.0)};
    const EvalReport r = evaluate(small_corpus(), one);
    for (const auto& b : r.per_burst) {
        EXPECT_NEAR(b.err_db, 3.0, 1e-12);
        EXPECT_NEAR(b.err_pct, 100.0 * std::abs(std::pow(10.0, b.err_db / 10.0) - 1.0), 1e-12);
        EXPECT_EQ(b.est_dbm - b.true_dbm, b.err_db);
    }
    EXPECT_NEAR(r.summary("offset").mae_db, 3.0, 1e-12);
    EXPECT_NEAR(r.summary("offset").mae_pct, 99.526231496887960, 1e-9);
}

TEST(Evaluate, EstimatesAreFlooredAndNanIsFatal) {
    const std::vector<Estimator> ninf{{"silent", [](const CorpusRecord&) { return -HUGE_VAL; }}};
    const EvalReport r = evaluate(small_corpus(), ninf);
    for (const auto& b : r.per_burst) {
        EXPECT_NEAR(b.est_dbm, -120.0, 1e-9);
        EXPECT_TRUE(std::isfinite(b.err_db));
    }
    const std::vector<Estimator> nan{{"broken", [](const CorpusRecord&) { return NAN; }}};
    EXPECT_THROW(evaluate(small_corpus(), nan), NumericalError);
}

TEST(Evaluate, RejectsMissingInputs) {
    EXPECT_THROW(evaluate(small_corpus(), std::vector<Estimator>{}), std::invalid_argument);
    EXPECT_THROW(evaluate(small_corpus(), std::vector<Estimator>{{"none", {}}}), std::invalid_argument);
    const std::vector<Estimator> est{truth()};
    EXPECT_THROW(evaluate(small_corpus(), est, Split::val), std::invalid_argument);
    EXPECT_THROW(evaluate(small_corpus(), est).summary("missing"), std::out_of_range);
}

TEST(Evaluate, BuiltInEstimatorsMatchDirectCalls) {
    const RfConfig rf;
    const auto w = build_model<float>(ModelSpec::sine_cnn(), 4);
    const std::vector<Estimator> est{model_estimator(w), fft3bin_estimator(rf), oracle_estimator()};
    EXPECT_EQ(est[0].name, "sine_cnn");
    const EvalReport r = evaluate(small_corpus(), est);
    const std::size_t n = 1200;
    ASSERT_EQ(r.per_burst.size(), 3 * n);
    const auto idx = small_corpus().indices(Split::test);
    for (std::size_t k = 0; k < n; k += 37) {
        const CorpusRecord& rec = small_corpus().records[idx[k]];
        EXPECT_EQ(r.per_burst[k].est_dbm, std::max(predict_gain(w, rec.raw).power_dbm, -120.0));
        EXPECT_EQ(r.per_burst[n + k].est_dbm, fft_3bin_estimate(rec.raw, rf.f_cw_offset_hz).power_dbm);
        EXPECT_EQ(r.per_burst[2 * n + k].est_dbm, extract_gain(rec.dc).power_dbm);
    }
    EXPECT_EQ(r.overall[0].estimator, "sine_cnn");
    EXPECT_EQ(r.overall[2].estimator, "oracle");
}

TEST(SirSweep, RowsAscendingGroupedAndConsistent) {
    const std::vector<Estimator> est{oracle_estimator(), fft3bin_estimator(RfConfig{})};
    const EvalReport r = evaluate(small_corpus(), est);

    std::set<long long> sirs;
    for (const auto& rec : small_corpus().records) sirs.insert(std::llround(rec.label.sir_db * 10));
    EXPECT_EQ(r.per_sir.size(), sirs.size() * 2);
    EXPECT_LE(r.per_sir.size(), 40u * 2u);

    std::size_t total = 0;
    for (std::size_t i = 0; i < r.per_sir.size(); ++i) {
        const SirRow& row = r.per_sir[i];
        if (i > 0) {
            EXPECT_GE(row.sir_db, r.per_sir[i - 1].sir_db);
        }
        EXPECT_GE(row.sigma_db, 0.0);
        total += row.count;

        double mean = 0.0;
        std::size_t n = 0;
        for (const auto& b : r.per_burst) {
            if (b.estimator == row.estimator && std::abs(b.sir_db - row.sir_db) < 0.05) {
                mean += std::abs(b.err_db);
                ++n;
            }
        }
        EXPECT_EQ(n, row.count);
        EXPECT_NEAR(row.mae_db, mean / static_cast<double>(n), 1e-12);
    }
    EXPECT_EQ(total, r.per_burst.size());
}

TEST(SirSweep, SingleBurstHasZeroSpreadAndEmptyThrows) {
    EvalReport r;
    r.overall.push_back({"x", 0.0, 0.0, 1});
    BurstResult b;
    b.estimator = "x";
    b.sir_db = -8.3;
    b.err_db = -2.0;
    r.per_burst.push_back(b);
    const auto rows = sir_sweep_table(r);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].sigma_db, 0.0);
    EXPECT_EQ(rows[0].mae_db, 2.0);
    EXPECT_DOUBLE_EQ(rows[0].sir_db, -8.3);
    EXPECT_THROW(sir_sweep_table(EvalReport{}), std::invalid_argument);
}

TEST(Reports, CsvShapesAndSummaryJson) {
    const std::vector<Estimator> est{truth(), offset(2.0)};
    const EvalReport r = evaluate(small_corpus(), est);
    EXPECT_EQ(lines(report::per_burst_csv(r)), 1 + r.per_burst.size());
    EXPECT_EQ(lines(report::boxplot_csv(r)), 1 + 2 * 40u);
    EXPECT_EQ(lines(report::sir_sweep_csv(r)), 1 + r.per_sir.size());
    EXPECT_EQ(lines(report::mae_pct_csv(r)), 3u);
    EXPECT_EQ(report::per_burst_csv(r).substr(0, 20), "estimator,cell,index");

    const auto j = report::summary_json(r);
    EXPECT_EQ(j["bursts_per_estimator"], 1200);
    ASSERT_EQ(j["estimators"].size(), 2u);
    EXPECT_EQ(j["estimators"][1]["name"], "offset");
    EXPECT_NEAR(j["estimators"][1]["mae_db"].get<double>(), 2.0, 1e-12);
    EXPECT_EQ(j["estimators"][0]["mae_db_by_sir"].size(), r.per_sir.size() / 2);
}

TEST(Reports, NumbersRoundTrip) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
        EXPECT_EQ(std::stod(report::num(v)), v);
    }
}

TEST(Reports, ParameterTableTotals) {
    const std::string t = report::parameter_table(ModelSpec::dc_cnn());
    EXPECT_NE(t.find("conv1"), std::string::npos);
    EXPECT_NE(t.find("16370"), std::string::npos);
    EXPECT_EQ(lines(t), 7u);
}

TEST(Reports, LossCsv) {
    const std::vector<EpochLoss> h{{2.5, 3.0}, {1.5, 2.0}};
    EXPECT_EQ(report::loss_csv(h), "epoch,train_loss_db2,val_loss_db2\n1,2.5,3\n2,1.5,2\n");
}
