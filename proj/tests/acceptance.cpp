// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "cwpower/cli.hpp"
#include "cwpower/cwpower.hpp"
#include "gradcheck.hpp"

using namespace cwpower;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void verdict(int n, bool ok, const std::string& detail) {
    std::printf("criterion %2d %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
    args.insert(args.begin(), "cwpower");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
    if (out) *out = o.str();
    if (code != 0) std::fprintf(stderr, "cwpower %s exited %d:\n%s\n", args[1].c_str(), code, e.str().c_str());
    return code;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

// 1 ------------------------------------------------------------------------------------------
void parameter_audit(const fs::path& work) {
    const auto t0 = Clock::now();
    std::string out;
    const int code = run_cli({"--output-dir", (work / "audit").string(), "audit"}, &out);
    const double dt = seconds_since(t0);
    bool layers_ok = true;
    const std::size_t expect[] = {304, 3616, 10304, 2080, 66};
    for (const ModelSpec& s : {ModelSpec::dc_cnn(), ModelSpec::sine_cnn()}) {
        const auto l = layer_table(s);
        for (std::size_t i = 0; i < 5; ++i) layers_ok &= l[i].parameter_count() == expect[i];
    }
    const bool ok = code == 0 && count_of(out, "total 16,370") == 2 && layers_ok && dt < 1.0;
    verdict(1, ok,
            fmt("parameter audit: 'total 16,370' printed for %zu of 2 variants, layers 304/3,616/10,304/2,080/66 %s, "
                "%.3f s (< 1 s)",
                count_of(out, "total 16,370"), layers_ok ? "match" : "MISMATCH", dt));
}

// 2 ------------------------------------------------------------------------------------------
void receptive_field() {
    const auto w = build_model<double>(ModelSpec::dc_cnn(), 5);
    Rng r(6);
    std::vector<cplx> v(1000);
    for (cplx& x : v) x = 1e-3 * cplx(r.normal(), r.normal());
    const Burst b(v, 10e6);
    const std::size_t t = 500, n = 1000;
    const auto base = forward_features(w, burst_to_input<double>(b, w.spec.input_scale));
    const auto changed_at = [&](long long offset) {
        std::vector<cplx> p = v;
        p[static_cast<std::size_t>(static_cast<long long>(t) + offset)] += cplx(5e-3, -5e-3);
        const auto f = forward_features(w, burst_to_input<double>(Burst(std::move(p), 10e6), w.spec.input_scale));
        bool any = false;
        for (std::size_t c = 0; c < w.spec.embedding_dim; ++c) any |= f.values()[c * n + t] != base.values()[c * n + t];
        return any;
    };
    const bool analytic = ModelSpec::dc_cnn().receptive_field() == 19 && ModelSpec::sine_cnn().receptive_field() == 19;
    const bool near = changed_at(9) && changed_at(-9);
    const bool far = !changed_at(10) && !changed_at(-10);
    verdict(2, analytic && near && far,
            fmt("receptive field: analytic %u samples; perturbation at distance 9 %s, at distance 10 %s",
                ModelSpec::dc_cnn().receptive_field(), near ? "changes the centre" : "DOES NOT change the centre",
                far ? "leaves it unchanged" : "CHANGES it"));
}

// 3 ------------------------------------------------------------------------------------------
void gradient_suite() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string worst_op;
    int min_shapes = 1 << 30;
    for (const auto& c : cwtest::gradient_suite(20, 3)) {
        min_shapes = std::min(min_shapes, c.shapes);
        if (c.worst >= worst) {
            worst = c.worst;
            worst_op = c.op;
        }
    }
    const double net = cwtest::network_gradient_error(3);
    const double dt = seconds_since(t0);
    verdict(3, worst < 1e-6 && net < 1e-6 && min_shapes >= 20 && dt < 30.0,
            fmt("gradient suite: worst op relative error %.2e (%s, %d shapes per op), full DC-CNN + loss %.2e "
                "(< 1e-6), %.1f s (< 30 s)",
                worst, worst_op.c_str(), min_shapes, net, dt));
}

// 4 ------------------------------------------------------------------------------------------
void oracle_exactness() {
    const auto t0 = Clock::now();
    const RfConfig rf;
    const PowerGrid grid;
    Rng r(4);
    double tone_worst = 0.0;
    for (double tx : grid.cw_tx_dbm) {
        const double a = std::pow(10.0, tx_to_rx_dbm(tx, rf.cw_path_loss_db) / 20.0);
        const double phi = r.uniform(0.0, 2.0 * std::numbers::pi);
        const GainEstimate e = extract_gain(synthesize_cw(a, 0.0, phi, rf.burst_len, rf.sample_rate_hz));
        tone_worst = std::max({tone_worst, std::abs(std::abs(e.gain) - a) / a, std::abs(e.power_mw / (a * a) - 1.0)});
    }
    RfConfig quiet = rf;
    quiet.noise_floor_dbm = -std::numeric_limits<double>::infinity();
    GenerateOptions opts;
    opts.interference = false;
    opts.float32_samples = false;
    double label_worst = 0.0;
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
        const CorpusRecord rec = make_record(quiet, grid, cell, 0, 7, opts);
        label_worst = std::max(label_worst,
                               std::abs(extract_gain(rec.dc).power_mw / dbm_to_mw(rec.label.cw_rx_dbm) - 1.0));
    }
    const double dt = seconds_since(t0);
    verdict(4, tone_worst < 1e-9 && label_worst < 1e-9 && dt < 5.0,
            fmt("oracle exactness: clean DC tones worst relative error %.2e over %zu grid powers, noise-free records "
                "vs labels %.2e over %zu cells (< 1e-9), %.2f s (< 5 s)",
                tone_worst, grid.cw_tx_dbm.size(), label_worst, grid.cell_count(), dt));
}

// 5 ------------------------------------------------------------------------------------------
void fft_correctness() {
    double dev = 0.0, parseval = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng r(seed);
        std::vector<cplx> x(1024);
        for (cplx& v : x) v = cplx(r.uniform(-1, 1), r.uniform(-1, 1));
        const auto fast = fft(x);
        const auto slow = cwtest::naive_dft(x);
        double ex = 0.0, eX = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            dev = std::max(dev, std::abs(fast[k] - slow[k]));
            ex += std::norm(x[k]);
            eX += std::norm(fast[k]);
        }
        parseval = std::max(parseval, std::abs(eX / 1024.0 - ex) / ex);
    }
    verdict(5, dev < 1e-9 && parseval < 1e-9,
            fmt("FFT: max |FFT - DFT| %.2e absolute, Parseval %.2e relative (< 1e-9) on 10 random length-1024 inputs",
                dev, parseval));
}

// 6 ------------------------------------------------------------------------------------------
void calibration() {
    const RfConfig rf;
    const PowerGrid g;
    const auto [cw_lo, cw_hi] = std::minmax_element(g.cw_tx_dbm.begin(), g.cw_tx_dbm.end());
    const auto [q_lo, q_hi] = std::minmax_element(g.qpsk_tx_dbm.begin(), g.qpsk_tx_dbm.end());
    const double lo = nominal_sir_db(*cw_lo, *q_hi, rf), hi = nominal_sir_db(*cw_hi, *q_lo, rf);
    verdict(6, lo == -33.3 && hi == 46.7, fmt("calibration: SIR end points %.17g dB and %.17g dB", lo, hi));
}

// 7, 8 ---------------------------------------------------------------------------------------
void fft_breakdown(const Corpus& c) {
    const auto t0 = Clock::now();
    const std::vector<Estimator> est{fft3bin_estimator(c.rf)};
    const EvalReport r = evaluate(c, est);
    double hi_sir_worst = 0.0, at_min = 0.0, low_sir_min = std::numeric_limits<double>::infinity();
    double low_sir_at = 0.0;
    std::size_t hi_cells = 0, low_cells = 0;
    for (const CellSummary& s : r.per_cell) {
        if (s.sir_db >= 20.0) {
            hi_sir_worst = std::max(hi_sir_worst, s.median_abs_db);
            ++hi_cells;
        }
        if (detail::sir_key(s.sir_db) == detail::sir_key(-33.3)) at_min = s.median_abs_db;
        if (s.sir_db <= -13.3 + 1e-9) {
            if (s.median_abs_db < low_sir_min) {
                low_sir_min = s.median_abs_db;
                low_sir_at = s.sir_db;
            }
            ++low_cells;
        }
    }
    const double dt = seconds_since(t0);
    const std::size_t per_cell = r.per_cell.empty() ? 0 : r.per_cell.front().count;
    verdict(7, hi_sir_worst < 0.5 && at_min > 10.0 && low_sir_min > 2.0 && dt < 60.0,
            fmt("FFT breakdown (%zu test bursts/cell): median |error| worst %.3f dB over %zu cells with SIR >= +20 dB "
                "(< 0.5), %.2f dB at SIR -33.3 dB (> 10), smallest %.2f dB at SIR %.1f dB over %zu cells with "
                "SIR <= -13.3 dB (> 2), %.1f s",
                per_cell, hi_sir_worst, hi_cells, at_min, low_sir_min, low_sir_at, low_cells, dt));
}

void learned_quality(const Corpus& c, const ModelWeights<float>& dc, double sweep_s) {
    const std::vector<Estimator> est{model_estimator(dc), fft3bin_estimator(c.rf)};
    const EvalReport r = evaluate(c, est);
    double worst = 0.0, worst_sir = 0.0;
    std::size_t cells = 0, over = 0;
    for (const CellSummary& s : r.per_cell) {
        if (s.estimator != "dc_cnn" || s.sir_db < -10.0) continue;
        ++cells;
        over += s.mae_db >= 1.0 ? 1 : 0;
        if (s.mae_db > worst) {
            worst = s.mae_db;
            worst_sir = s.sir_db;
        }
    }
    const double grid_mae = r.summary("dc_cnn").mae_db;
    const double cnn_pct = r.summary("dc_cnn").mae_pct, fft_pct = r.summary("fft3bin").mae_pct;
    const bool a = worst < 1.0, b = grid_mae < 2.0, cc = cnn_pct < fft_pct;
    verdict(8, a && b && cc,
            fmt("DC-CNN quality (desk profile, best epoch %u): (a) %s worst cell MAE %.3f dB at SIR %.1f dB, %zu of "
                "%zu cells with SIR >= -10 dB at or above 1.0 dB; (b) %s grid MAE %.3f dB (< 2.0); (c) %s MAE%% "
                "%.2f vs FFT %.2f; sweep %.0f s",
                dc.meta.epoch, a ? "ok" : "FAIL", worst, worst_sir, over, cells, b ? "ok" : "FAIL", grid_mae,
                cc ? "ok" : "FAIL", cnn_pct, fft_pct, sweep_s));
}

// 9 ------------------------------------------------------------------------------------------
void determinism(const fs::path& a, const fs::path& b, bool ran) {
    const char* files[] = {"corpus.cwpl",     "dc_cnn.cwpm",   "sine_cnn.cwpm", "loss_dc_cnn.csv",
                           "loss_sine_cnn.csv", "report.csv",  "summary.json",  "boxplot.csv",
                           "sir_sweep.csv",   "mae_pct.csv",   "psd.csv"};
    std::size_t same = 0, total = 0;
    std::string diff;
    for (const char* f : files) {
        ++total;
        const bool eq = ran && fs::exists(a / f) && fs::exists(b / f) &&
                        io::read_file((a / f).string()) == io::read_file((b / f).string());
        if (eq) ++same;
        else diff += std::string(" ") + f;
    }
    bool manifest_eq = false;
    if (ran && fs::exists(a / "manifest-sweep.json") && fs::exists(b / "manifest-sweep.json")) {
        auto ma = nlohmann::json::parse(std::ifstream(a / "manifest-sweep.json"));
        auto mb = nlohmann::json::parse(std::ifstream(b / "manifest-sweep.json"));
        ma.erase("volatile");
        mb.erase("volatile");
        ma["config"].erase("output-dir");
        mb["config"].erase("output-dir");
        manifest_eq = ma == mb;
    }
    verdict(9, same == total && manifest_eq,
            fmt("determinism: %zu of %zu sweep artifacts byte-identical across two seeded runs, manifest %s%s%s",
                same, total, manifest_eq ? "identical outside volatile fields" : "DIFFERS",
                diff.empty() ? "" : "; differing:", diff.c_str()));
}

// 10 -----------------------------------------------------------------------------------------
void round_trip(const fs::path& work) {
    Rng rng(10);
    std::size_t corpora = 0, checkpoints = 0;
    const fs::path dir = work / "roundtrip";
    fs::create_directories(dir);
    for (int i = 0; i < 100; ++i) {
        RfConfig rf;
        if (rng.below(2)) rf.noise_floor_dbm = -std::numeric_limits<double>::infinity();
        GenerateOptions opts;
        opts.interference = rng.below(4) != 0;
        const auto per_cell = static_cast<std::uint32_t>(1 + rng.below(3));
        Corpus c = generate_corpus(rf, PowerGrid{}, per_cell, rng.next_u64());
        split_corpus(c, rng.uniform(0.0, 0.9), static_cast<std::uint32_t>(rng.below(per_cell)), rng.next_u64());
        const std::string path = (dir / "c.cwpl").string();
        save_corpus(c, path);
        const Corpus back = load_corpus(path);
        bool ok = back.records.size() == c.records.size() && back.master_seed == c.master_seed &&
                  back.per_cell == c.per_cell && encode_corpus(back) == io::read_file(path);
        for (std::size_t k = 0; ok && k < c.records.size(); ++k) {
            const auto &x = c.records[k], &y = back.records[k];
            ok = x.label == y.label && x.split == y.split && x.cell == y.cell && x.index == y.index &&
                 std::ranges::equal(x.raw.samples(), y.raw.samples()) &&
                 std::ranges::equal(x.dc.samples(), y.dc.samples());
        }
        corpora += ok ? 1 : 0;

        auto m = build_model<float>(ModelSpec::for_variant(rng.below(2) ? Variant::dc_cnn : Variant::sine_cnn),
                                    rng.next_u64());
        m.meta.epoch = static_cast<std::uint32_t>(rng.below(200));
        m.meta.seed = rng.next_u64();
        for (std::size_t e = rng.below(50); e > 0; --e) m.meta.loss_history.push_back({rng.uniform(0, 100), rng.normal()});
        const std::string mpath = (dir / "m.cwpm").string();
        save_checkpoint(m, mpath);
        const auto mb = load_checkpoint(mpath);
        bool mok = mb.spec == m.spec && mb.meta == m.meta && mb.params.size() == m.params.size() &&
                   encode_checkpoint(mb) == io::read_file(mpath);
        for (std::size_t p = 0; mok && p < m.params.size(); ++p) {
            mok = mb.params[p].name == m.params[p].name && mb.params[p].tensor.shape() == m.params[p].tensor.shape() &&
                  std::ranges::equal(mb.params[p].tensor.values(), m.params[p].tensor.values());
        }
        checkpoints += mok ? 1 : 0;
    }
    verdict(10, corpora == 100 && checkpoints == 100,
            fmt("round trip: %zu of 100 random corpora and %zu of 100 random checkpoints reload bit-exact", corpora,
                checkpoints));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cwpower acceptance run"};
    std::string work_dir = "acceptance_work";
    std::uint64_t seed = 7;
    app.add_option("--work-dir", work_dir, "scratch directory for sweep outputs");
    app.add_option("--seed", seed, "sweep seed");
    CLI11_PARSE(app, argc, argv);

    const fs::path work(work_dir);
    fs::remove_all(work);
    fs::create_directories(work);

    parameter_audit(work);
    receptive_field();
    gradient_suite();
    oracle_exactness();
    fft_correctness();
    calibration();

    const fs::path run_a = work / "sweep_a", run_b = work / "sweep_b";
    const std::string seed_s = std::to_string(seed);
    const auto t0 = Clock::now();
    const bool ok_a = run_cli({"--output-dir", run_a.string(), "--seed", seed_s, "sweep", "--profile", "desk"}) == 0;
    const double sweep_s = seconds_since(t0);
    if (ok_a) {
        const Corpus c = load_corpus((run_a / "corpus.cwpl").string());
        fft_breakdown(c);
        learned_quality(c, load_checkpoint((run_a / "dc_cnn.cwpm").string()), sweep_s);
    } else {
        verdict(7, false, "FFT breakdown: sweep failed");
        verdict(8, false, "DC-CNN quality: sweep failed");
    }
    const bool ok_b = run_cli({"--output-dir", run_b.string(), "--seed", seed_s, "sweep", "--profile", "desk"}) == 0;
    determinism(run_a, run_b, ok_a && ok_b);
    round_trip(work);

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
