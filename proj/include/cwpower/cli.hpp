#pragma once

// Command-line front end: generate, train, evaluate, estimate, sweep, audit.
//
// Exit codes: 0 success, 1 usage error, 2 data or file error, 3 numerical failure.
// Every option also reads from a flat key=value config file (--config); a value given on the
// command line wins over the file, which wins over the built-in default. The default output
// directory comes from CWPOWER_OUTPUT_DIR when neither sets it.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cwpower/dataset.hpp"
#include "cwpower/errors.hpp"
#include "cwpower/evaluate.hpp"
#include "cwpower/report.hpp"
#include "cwpower/trainer.hpp"

namespace cwpower::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kOutputDirEnv = "CWPOWER_OUTPUT_DIR";
inline constexpr const char* kCorpusFile = "corpus.cwpl";

/// Parses a flat key=value file. Blank lines and lines starting with '#' or ';' are skipped;
/// keys use the long option name, with '_' accepted for '-'.
inline std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ":" + std::to_string(n) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.empty() || value.front() != '"') {
            // Trailing comment: '#' or ';' preceded by whitespace.
            for (std::size_t k = 1; k < value.size(); ++k) {
                if ((value[k] == '#' || value[k] == ';') && (value[k - 1] == ' ' || value[k - 1] == '\t')) {
                    value = trim(value.substr(0, k));
                    break;
                }
            }
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        std::replace(key.begin(), key.end(), '_', '-');
        if (key.empty()) throw UsageError(path + ":" + std::to_string(n) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

/// Two-column text burst: one "I Q" pair per line (whitespace or comma separated), '#' comments.
inline Burst read_text_burst(const std::string& path, double sample_rate_hz) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open burst file '" + path + "'");
    std::vector<cplx> x;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double i = 0.0, q = 0.0;
        if (!(ss >> i)) continue;
        std::string extra;
        if (!(ss >> q) || (ss >> extra)) {
            throw FormatError(path + ":" + std::to_string(n) + ": expected two columns (I Q)");
        }
        x.emplace_back(i, q);
    }
    if (x.empty()) throw FormatError("burst file '" + path + "' has no samples");
    return Burst(std::move(x), sample_rate_hz);
}

namespace detail {

inline nlohmann::ordered_json rf_json(const RfConfig& c) {
    return {{"f_c_hz", c.f_c_hz},
            {"f_cw_offset_hz", c.f_cw_offset_hz},
            {"qpsk_bandwidth_hz", c.qpsk_bandwidth_hz},
            {"sample_rate_hz", c.sample_rate_hz},
            {"cw_path_loss_db", c.cw_path_loss_db},
            {"qpsk_path_loss_db", c.qpsk_path_loss_db},
            {"noise_floor_dbm", c.noise_enabled() ? nlohmann::ordered_json(c.noise_floor_dbm) : nullptr},
            {"qpsk_symbol_rate_baud", c.qpsk_symbol_rate_baud},
            {"rrc_rolloff", c.rrc_rolloff},
            {"rrc_span_symbols", c.rrc_span_symbols},
            {"burst_len", c.burst_len}};
}

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Concatenated test bursts of one cell, so the Welch estimate averages over many segments.
inline Burst cell_test_stream(const Corpus& c, std::size_t cell) {
    std::vector<cplx> x;
    for (const CorpusRecord& r : c.records) {
        if (r.cell != cell || r.split != Split::test) continue;
        x.insert(x.end(), r.raw.samples().begin(), r.raw.samples().end());
    }
    if (x.empty()) {
        for (const CorpusRecord& r : c.records)
            if (r.cell == cell) x.insert(x.end(), r.raw.samples().begin(), r.raw.samples().end());
    }
    return Burst(std::move(x), c.rf.sample_rate_hz);
}

}  // namespace detail

/// Per-run state shared by the subcommand handlers.
class Session {
public:
    Session(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    std::ostream& out() { return out_; }
    std::ostream& err() { return err_; }

    std::filesystem::path output_dir;
    std::uint64_t seed = 7;
    std::string subcommand;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
    std::optional<RfConfig> rf;

    std::string path_for(const std::string& name) const { return (output_dir / name).string(); }

    void artifact(const std::string& path) { artifacts_.push_back(path); }

    void write_manifest() {
        nlohmann::ordered_json m;
        m["subcommand"] = subcommand;
        m["config"] = config;
        m["seeds"] = seeds;
        if (rf) m["rf_config"] = detail::rf_json(*rf);
        auto& arts = m["artifacts"] = nlohmann::ordered_json::array();
        for (const std::string& p : artifacts_) {
            const auto bytes = io::read_file(p);
            char crc[9];
            std::snprintf(crc, sizeof crc, "%08x", io::crc32(bytes));
            arts.push_back({{"path", std::filesystem::path(p).filename().string()},
                            {"bytes", bytes.size()},
                            {"crc32", crc}});
        }
        m["volatile"] = {{"timestamp_utc", detail::utc_timestamp()}};
        report::write_text(path_for("manifest-" + subcommand + ".json"), m.dump(2) + "\n");
    }

private:
    std::ostream& out_;
    std::ostream& err_;
    std::vector<std::string> artifacts_;
};

struct GenerateArgs {
    std::uint32_t per_cell = 50;
    bool no_noise = false;
    bool no_interference = false;
    double val_fraction = 0.15;
    std::uint32_t test_per_cell = 30;
    std::string out = kCorpusFile;
};

struct TrainArgs {
    std::string corpus;  // default: <output-dir>/corpus.cwpl
    std::string variant = "dc_cnn";
    std::string profile = "paper";
    std::optional<std::uint32_t> epochs;
    std::uint32_t batch_size = 16;
    double lr = 2e-4;
    double weight_decay = 1e-2;
    std::optional<std::uint32_t> patience;
    std::string out;  // default: <variant>.cwpm
};

struct EvaluateArgs {
    std::string corpus;  // default: <output-dir>/corpus.cwpl
    std::vector<std::string> checkpoints;
    std::string split = "test";
    bool baselines = true;
};

struct EstimateArgs {
    std::string method = "oracle";
    std::string burst;
    std::string corpus;
    std::optional<std::uint32_t> record;
    std::string checkpoint;
    std::string representation = "raw";
};

struct SweepArgs {
    std::string profile = "desk";
    std::optional<std::uint32_t> per_cell;
    std::optional<std::uint32_t> epochs;
};

struct AuditArgs {
    std::string variant = "both";
};

inline std::string with_commas(std::size_t v) {
    std::string s = std::to_string(v);
    for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
    return s;
}

inline Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw UsageError("unknown split '" + s + "' (expected train, val or test)");
}

inline Corpus do_generate(Session& s, const GenerateArgs& a) {
    RfConfig rf;
    if (a.no_noise) rf.noise_floor_dbm = -std::numeric_limits<double>::infinity();
    PowerGrid grid;
    GenerateOptions opts;
    opts.interference = !a.no_interference;
    Corpus c = generate_corpus(rf, grid, a.per_cell, s.seed, opts);
    if (a.per_cell > a.test_per_cell) {
        split_corpus(c, a.val_fraction, a.test_per_cell, s.seed);
    } else {
        s.err() << "note: per-cell " << a.per_cell << " <= test-per-cell " << a.test_per_cell
                << ", records left unassigned\n";
    }
    const std::string path = s.path_for(a.out);
    save_corpus(c, path);
    s.artifact(path);
    s.rf = rf;
    s.seeds["master_seed"] = s.seed;
    s.seeds["split_seed"] = s.seed;
    s.err() << "wrote " << c.records.size() << " records to " << path << " (train " << c.count(Split::train)
            << ", val " << c.count(Split::val) << ", test " << c.count(Split::test) << ")\n";
    return c;
}

inline TrainConfig train_config_for(const TrainArgs& a, std::uint64_t seed) {
    const Variant v = parse_variant(a.variant);
    TrainConfig cfg;
    if (a.profile == "desk") cfg = TrainConfig::desk(v);
    else if (a.profile == "paper") cfg = TrainConfig::paper(v);
    else throw UsageError("unknown profile '" + a.profile + "' (expected desk or paper)");
    if (a.epochs) cfg.epochs = *a.epochs;
    cfg.batch_size = a.batch_size;
    cfg.lr = a.lr;
    cfg.weight_decay = a.weight_decay;
    cfg.early_stop_patience = a.patience;
    cfg.seed = seed;
    return cfg;
}

inline ModelWeights<float> do_train(Session& s, const Corpus& corpus, const TrainArgs& a) {
    const TrainConfig cfg = train_config_for(a, s.seed);
    const ModelSpec spec = ModelSpec::for_variant(cfg.variant);
    auto& err = s.err();
    const std::string name(to_string(cfg.variant));
    TrainResult r = train(corpus, spec, cfg, [&](std::uint32_t epoch, const EpochLoss& l) {
        if (epoch == 1 || epoch % 10 == 0 || epoch == cfg.epochs) {
            err << name << " epoch " << epoch << "/" << cfg.epochs << "  train " << l.train_db2 << " dB^2  val "
                << l.val_db2 << " dB^2\n";
        }
    });
    const std::string ckpt = s.path_for(a.out.empty() ? name + ".cwpm" : a.out);
    save_checkpoint(r.weights, ckpt);
    s.artifact(ckpt);
    const std::string loss = s.path_for("loss_" + name + ".csv");
    report::write_text(loss, report::loss_csv(r.history));
    s.artifact(loss);
    s.rf = corpus.rf;
    s.seeds["train_seed_" + name] = cfg.seed;
    s.seeds["init_seed_" + name] = init_seed_for(cfg.seed);
    err << name << ": best epoch " << r.best_epoch << ", val " << r.best_val_db2 << " dB^2 -> " << ckpt << "\n";
    return std::move(r.weights);
}

inline EvalReport do_evaluate(Session& s, const Corpus& corpus, const std::vector<ModelWeights<float>>& models,
                              Split split, bool baselines) {
    std::vector<Estimator> est;
    for (const auto& m : models) {
        if (m.spec.input_length != corpus.rf.burst_len) {
            throw std::invalid_argument("checkpoint input length does not match the corpus burst length");
        }
        est.push_back(model_estimator(m));
    }
    if (baselines) {
        est.push_back(fft3bin_estimator(corpus.rf));
        est.push_back(oracle_estimator());
    }
    const EvalReport rep = evaluate(corpus, est, split);
    const auto emit = [&](const std::string& name, const std::string& text) {
        const std::string p = s.path_for(name);
        report::write_text(p, text);
        s.artifact(p);
    };
    emit("report.csv", report::per_burst_csv(rep));
    emit("summary.json", report::summary_json(rep).dump(2) + "\n");
    emit("boxplot.csv", report::boxplot_csv(rep));
    emit("sir_sweep.csv", report::sir_sweep_csv(rep));
    emit("mae_pct.csv", report::mae_pct_csv(rep));
    std::vector<std::pair<std::size_t, WelchPsd>> psd;
    for (std::size_t cell = 0; cell < corpus.grid.cell_count(); ++cell) {
        psd.emplace_back(cell, welch_psd(detail::cell_test_stream(corpus, cell)));
    }
    emit("psd.csv", report::psd_csv(psd));
    s.rf = corpus.rf;
    for (const EstimatorSummary& e : rep.overall) {
        s.out() << e.estimator << ": MAE " << e.mae_pct << " %, " << e.mae_db << " dB over " << e.count
                << " bursts\n";
    }
    return rep;
}

inline void do_estimate(Session& s, const EstimateArgs& a) {
    static const std::vector<std::string> methods{"dc_cnn", "sine_cnn", "fft3bin", "oracle"};
    if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) {
        throw UsageError("unknown method '" + a.method + "' (expected dc_cnn, sine_cnn, fft3bin or oracle)");
    }
    if (a.burst.empty() == !a.record.has_value()) throw UsageError("give exactly one of --burst or --record");
    if (a.representation != "raw" && a.representation != "dc") {
        throw UsageError("unknown representation '" + a.representation + "' (expected raw or dc)");
    }

    RfConfig rf;
    Burst raw = Burst::zeros(1, rf.sample_rate_hz);
    Burst dc = raw;
    if (a.record) {
        if (a.corpus.empty()) throw UsageError("--record needs --corpus");
        const Corpus c = load_corpus(a.corpus);
        if (*a.record >= c.records.size()) {
            throw std::invalid_argument("record " + std::to_string(*a.record) + " out of range (corpus has " +
                                        std::to_string(c.records.size()) + ")");
        }
        rf = c.rf;
        raw = c.records[*a.record].raw;
        dc = c.records[*a.record].dc;
    } else {
        const Burst b = read_text_burst(a.burst, rf.sample_rate_hz);
        raw = a.representation == "raw" ? b : frequency_shift(b, rf.f_cw_offset_hz);
        dc = a.representation == "dc" ? b : frequency_shift(b, -rf.f_cw_offset_hz);
    }
    s.rf = rf;

    double est = 0.0;
    if (a.method == "oracle") {
        est = extract_gain(dc).power_dbm;
    } else if (a.method == "fft3bin") {
        est = fft_3bin_estimate(raw, rf.f_cw_offset_hz).power_dbm;
    } else {
        if (a.checkpoint.empty()) throw UsageError("method " + a.method + " needs --checkpoint");
        ModelWeights<float> w = load_checkpoint(a.checkpoint);
        if (to_string(w.spec.variant) != a.method) {
            throw std::invalid_argument("checkpoint holds a " + std::string(to_string(w.spec.variant)) +
                                        " model, not " + a.method);
        }
        w.set_requires_grad(false);
        est = predict_gain(w, expects_dc_representation(w.spec.variant) ? dc : raw).power_dbm;
    }
    if (std::isnan(est)) throw NumericalError("estimate: result is NaN");
    est = std::max(est, mw_to_dbm(ag::kPowerFloorMw));
    nlohmann::ordered_json j{{"est_dbm", est}, {"method", a.method}};
    s.out() << j.dump() << "\n";
}

inline void do_audit(Session& s, const AuditArgs& a) {
    std::vector<Variant> vs;
    if (a.variant == "both") vs = {Variant::dc_cnn, Variant::sine_cnn};
    else vs = {parse_variant(a.variant)};
    for (Variant v : vs) {
        const ModelSpec spec = ModelSpec::for_variant(v);
        std::size_t total = 0;
        for (const LayerInfo& l : layer_table(spec)) total += l.parameter_count();
        s.out() << to_string(v) << " (receptive field " << spec.receptive_field() << " samples)\n"
                << report::parameter_table(spec) << "total " << with_commas(total) << "\n";
    }
}

namespace detail {

inline std::string option_key(const CLI::Option* o) {
    const auto& l = o->get_lnames();
    return l.empty() ? std::string{} : l.front();
}

// Fills options not given on the command line from the config file.
inline void apply_config(const std::map<std::string, std::string>& kv, CLI::App& root, CLI::App* sub) {
    for (const auto& [key, value] : kv) {
        CLI::Option* target = nullptr;
        bool known = false;
        for (CLI::App* app : {sub, &root}) {
            if (!app) continue;
            for (CLI::Option* o : app->get_options()) {
                if (option_key(o) == key) {
                    target = o;
                    break;
                }
            }
            if (target) break;
        }
        if (key == "config") throw UsageError("config file may not name another config file");
        for (CLI::App* other : root.get_subcommands({})) {
            for (CLI::Option* o : other->get_options())
                if (option_key(o) == key) known = true;
        }
        if (!target) {
            if (known) continue;  // belongs to another subcommand
            throw UsageError("unknown config key '" + key + "'");
        }
        if (target->count() > 0) continue;
        std::vector<std::string> items;
        if (target->get_expected_max() > 1) {
            std::stringstream ss(value);
            for (std::string item; std::getline(ss, item, ',');)
                if (!item.empty()) items.push_back(item);
        } else {
            items.push_back(value);
        }
        try {
            for (const std::string& item : items) target->add_result(item);
            target->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError("config key '" + key + "': " + e.what());
        }
    }
}

inline nlohmann::ordered_json resolved(CLI::App& root, CLI::App* sub) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (CLI::App* app : {&root, sub}) {
        for (CLI::Option* o : app->get_options()) {
            const std::string key = option_key(o);
            if (key.empty() || key == "help" || key == "config") continue;
            if (o->count() > 0) {
                const auto& r = o->results();
                std::string joined;
                for (std::size_t i = 0; i < r.size(); ++i) joined += (i ? "," : "") + r[i];
                j[key] = joined;
            } else {
                j[key] = o->get_default_str();
            }
        }
    }
    return j;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"CW carrier-power estimation under QPSK interference", "cwpower"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string output_dir;
    std::uint64_t seed = 7;
    app.add_option("--config", config_path, "flat key=value config file");
    app.add_option("--output-dir", output_dir, std::string("output directory (default $") + kOutputDirEnv + " or .)");
    app.add_option("--seed", seed, "master seed");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "synthesize a corpus over the 40-cell power grid and split it");
    g->add_option("--per-cell", gen.per_cell, "records per grid cell")->check(CLI::PositiveNumber);
    g->add_flag("--no-noise", gen.no_noise, "disable receiver noise");
    g->add_flag("--no-interference", gen.no_interference, "disable the QPSK interferer");
    g->add_option("--val-fraction", gen.val_fraction, "validation share of non-test records")->check(CLI::Range(0.0, 1.0));
    g->add_option("--test-per-cell", gen.test_per_cell, "test records per cell");
    g->add_option("--out", gen.out, "corpus file name inside the output directory");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train a DC-CNN or Sine-CNN on a corpus");
    t->add_option("--corpus", tr.corpus, "corpus file (default <output-dir>/corpus.cwpl)");
    t->add_option("--variant", tr.variant, "dc_cnn or sine_cnn")->check(CLI::IsMember({"dc_cnn", "sine_cnn"}));
    t->add_option("--profile", tr.profile, "paper (200 epochs) or desk (50 epochs)")
        ->check(CLI::IsMember({"paper", "desk"}));
    t->add_option("--epochs", tr.epochs, "override the profile's epoch count")->check(CLI::PositiveNumber);
    t->add_option("--batch-size", tr.batch_size)->check(CLI::PositiveNumber);
    t->add_option("--lr", tr.lr)->check(CLI::PositiveNumber);
    t->add_option("--weight-decay", tr.weight_decay)->check(CLI::NonNegativeNumber);
    t->add_option("--patience", tr.patience, "early-stopping patience in epochs");
    t->add_option("--out", tr.out, "checkpoint file name (default <variant>.cwpm)");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "score estimators on a corpus split and export figure data");
    e->add_option("--corpus", ev.corpus, "corpus file (default <output-dir>/corpus.cwpl)");
    e->add_option("--checkpoint", ev.checkpoints, "trained model checkpoint(s)")->delimiter(',');
    e->add_option("--split", ev.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
    e->add_option("--baselines", ev.baselines, "include fft3bin and oracle estimators");

    EstimateArgs es;
    auto* x = app.add_subcommand("estimate", "estimate CW power of one burst; prints one JSON line");
    x->add_option("--method", es.method, "dc_cnn, sine_cnn, fft3bin or oracle");
    x->add_option("--burst", es.burst, "two-column I/Q text file");
    x->add_option("--representation", es.representation, "raw (tone at +200 kHz) or dc");
    x->add_option("--corpus", es.corpus, "corpus file, with --record");
    x->add_option("--record", es.record, "record index in --corpus");
    x->add_option("--checkpoint", es.checkpoint, "checkpoint for learned methods");

    SweepArgs sw;
    auto* w = app.add_subcommand("sweep", "generate, train both variants, and evaluate");
    w->add_option("--profile", sw.profile, "desk (50/cell, 50 epochs) or paper (200/cell, 200 epochs)")
        ->check(CLI::IsMember({"paper", "desk"}));
    w->add_option("--per-cell", sw.per_cell, "override records per cell")->check(CLI::PositiveNumber);
    w->add_option("--epochs", sw.epochs, "override epochs")->check(CLI::PositiveNumber);

    AuditArgs au;
    auto* a = app.add_subcommand("audit", "print the per-layer parameter table");
    a->add_option("--variant", au.variant, "dc_cnn, sine_cnn or both")
        ->check(CLI::IsMember({"dc_cnn", "sine_cnn", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& pe) {
        std::ostringstream o, eo;
        const int code = app.exit(pe, o, eo);
        out << o.str();
        err << eo.str();
        return code == 0 ? kOk : kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    Session s(out, err);
    s.subcommand = sub->get_name();
    try {
        if (!config_path.empty()) detail::apply_config(read_config(config_path), app, sub);
        if (output_dir.empty()) {
            const char* env = std::getenv(kOutputDirEnv);
            output_dir = env && *env ? env : ".";
        }
        s.output_dir = output_dir;
        s.seed = seed;
        s.config = detail::resolved(app, sub);
        s.config["output-dir"] = output_dir;
        for (std::string* c : {&tr.corpus, &ev.corpus}) {
            if (c->empty()) *c = s.path_for(kCorpusFile);
        }
        if (sub == t) s.config["corpus"] = tr.corpus;
        if (sub == e) s.config["corpus"] = ev.corpus;
        std::filesystem::create_directories(s.output_dir);

        if (sub == g) {
            do_generate(s, gen);
        } else if (sub == t) {
            do_train(s, load_corpus(tr.corpus), tr);
        } else if (sub == e) {
            std::vector<ModelWeights<float>> models;
            for (const std::string& p : ev.checkpoints) models.push_back(load_checkpoint(p));
            if (models.empty() && !ev.baselines) throw UsageError("nothing to evaluate");
            const Corpus c = load_corpus(ev.corpus);
            do_evaluate(s, c, models, parse_split(ev.split), ev.baselines);
        } else if (sub == x) {
            do_estimate(s, es);
        } else if (sub == w) {
            const bool desk = sw.profile == "desk";
            GenerateArgs ga;
            ga.per_cell = sw.per_cell.value_or(desk ? 50 : 200);
            const Corpus c = do_generate(s, ga);
            std::vector<ModelWeights<float>> models;
            for (const char* v : {"dc_cnn", "sine_cnn"}) {
                TrainArgs ta;
                ta.variant = v;
                ta.profile = sw.profile;
                ta.epochs = sw.epochs;
                models.push_back(do_train(s, c, ta));
            }
            do_evaluate(s, c, models, Split::test, true);
        } else if (sub == a) {
            do_audit(s, au);
        }
        s.write_manifest();
    } catch (const UsageError& ue) {
        err << "usage error: " << ue.what() << "\n";
        return kUsage;
    } catch (const NumericalError& ne) {
        err << "numerical failure: " << ne.what() << "\n";
        return kNumerical;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kData;
    }
    return kOk;
}

}  // namespace cwpower::cli
