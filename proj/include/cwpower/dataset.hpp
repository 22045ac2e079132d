#pragma once

// Burst corpora over the CW x QPSK power grid, stratified splits, and the self-describing
// binary containers for corpora (.cwpl) and model checkpoints (.cwpm).
//
// Corpus file, little-endian:
//   "CWPL" | u16 version | u32 config length | config block | u32 crc
//   | u32 record count | records...
//   record: u32 cell | u32 index | u8 split | u64 seed | 7 x f64 label
//           | burst_len x (f32 I, f32 Q) raw samples | u32 crc of the record block
// The DC-centred representation is not stored; it is recomputed from the raw samples on load.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "cwpower/errors.hpp"
#include "cwpower/io.hpp"
#include "cwpower/model.hpp"
#include "cwpower/rng.hpp"
#include "cwpower/signal.hpp"

namespace cwpower {

enum class Split : std::uint8_t { unassigned = 0, train = 1, val = 2, test = 3 };

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        default: return "unassigned";
    }
}

struct CorpusRecord {
    Burst raw;  // CW at +f_cw_offset, QPSK centred at 0 Hz
    Burst dc;   // raw shifted by -f_cw_offset: CW at 0 Hz
    BurstLabel label;
    std::uint32_t cell = 0;
    std::uint32_t index = 0;
    Split split = Split::unassigned;

    const Burst& representation(bool dc_centred) const { return dc_centred ? dc : raw; }
};

struct Corpus {
    RfConfig rf;
    PowerGrid grid;
    std::uint32_t per_cell = 0;
    std::uint64_t master_seed = 0;
    std::vector<CorpusRecord> records;  // cell-major, then record index

    std::size_t count(Split s) const {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [s](const CorpusRecord& r) { return r.split == s; }));
    }

    std::vector<std::size_t> indices(Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].split == s) out.push_back(i);
        return out;
    }
};

struct GenerateOptions {
    bool interference = true;
    bool float32_samples = true;  // round samples to the on-disk precision
};

namespace detail {

inline Burst quantize_f32(const Burst& b) {
    std::vector<cplx> q(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) {
        q[k] = cplx(static_cast<float>(b[k].real()), static_cast<float>(b[k].imag()));
    }
    return Burst(std::move(q), b.sample_rate_hz());
}

enum SeedStream : std::uint64_t { kPhaseStream = 0, kQpskStream = 1, kNoiseStream = 2 };

inline double draw_phase(std::uint64_t record_seed) {
    return Rng(derive_seed(record_seed, kPhaseStream)).uniform(0.0, 2.0 * std::numbers::pi);
}

}  // namespace detail

inline std::uint64_t record_seed(std::uint64_t master_seed, std::size_t cell, std::size_t index) {
    return derive_seed(master_seed, cell, index);
}

inline BurstLabel make_label(const RfConfig& cfg, double cw_tx, double qpsk_tx, std::uint64_t seed) {
    BurstLabel l;
    l.cw_tx_dbm = cw_tx;
    l.qpsk_tx_dbm = qpsk_tx;
    l.cw_rx_dbm = tx_to_rx_dbm(cw_tx, cfg.cw_path_loss_db);
    l.qpsk_rx_dbm = tx_to_rx_dbm(qpsk_tx, cfg.qpsk_path_loss_db);
    l.sir_db = l.cw_rx_dbm - l.qpsk_rx_dbm;
    l.seed = seed;
    l.gain = std::polar(std::pow(10.0, l.cw_rx_dbm / 20.0), detail::draw_phase(seed));
    return l;
}

/// One mixture record. Raw samples are rounded to float32, the storage precision, so a
/// corpus in memory and one loaded from disk are identical.
inline CorpusRecord make_record(const RfConfig& cfg, const PowerGrid& grid, std::size_t cell, std::size_t index,
                                std::uint64_t master_seed, const GenerateOptions& opts = {}) {
    const std::uint64_t seed = record_seed(master_seed, cell, index);
    BurstLabel label = make_label(cfg, grid.cw_of(cell), grid.qpsk_of(cell), seed);
    const std::size_t n = cfg.burst_len;
    const double fs = cfg.sample_rate_hz;

    std::vector<Burst> parts;
    parts.push_back(synthesize_cw(std::abs(label.gain), cfg.f_cw_offset_hz, std::arg(label.gain), n, fs));
    if (opts.interference) {
        parts.push_back(synthesize_qpsk(label.qpsk_rx_dbm, cfg, derive_seed(seed, detail::kQpskStream), n));
    }
    parts.push_back(synthesize_noise(cfg.noise_floor_dbm, n, derive_seed(seed, detail::kNoiseStream), fs));
    Burst raw = opts.float32_samples ? detail::quantize_f32(mix(parts)) : mix(parts);
    Burst dc = frequency_shift(raw, -cfg.f_cw_offset_hz);
    return CorpusRecord{std::move(raw), std::move(dc), label, static_cast<std::uint32_t>(cell),
                        static_cast<std::uint32_t>(index), Split::unassigned};
}

/// Noise- and interference-free DC-centred CW burst for a label, in full double precision.
inline Burst clean_reference(const RfConfig& cfg, const BurstLabel& label) {
    const Burst cw = synthesize_cw(std::abs(label.gain), cfg.f_cw_offset_hz, detail::draw_phase(label.seed),
                                   cfg.burst_len, cfg.sample_rate_hz);
    return frequency_shift(cw, -cfg.f_cw_offset_hz);
}

inline Corpus generate_corpus(const RfConfig& cfg, const PowerGrid& grid, std::uint32_t per_cell,
                              std::uint64_t master_seed, const GenerateOptions& opts = {}) {
    cfg.validate();
    grid.validate();
    if (per_cell < 1) throw std::invalid_argument("generate_corpus: per_cell must be at least 1");
    Corpus c{cfg, grid, per_cell, master_seed, {}};
    c.records.reserve(grid.cell_count() * per_cell);
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
        for (std::size_t i = 0; i < per_cell; ++i) {
            c.records.push_back(make_record(cfg, grid, cell, i, master_seed, opts));
        }
    }
    return c;
}

/// Stratified split: exactly test_per_cell test records per cell, the remainder split with
/// floor(remaining * val_fraction) for validation. Deterministic per seed.
inline void split_corpus(Corpus& corpus, double val_fraction = 0.15, std::uint32_t test_per_cell = 30,
                         std::uint64_t seed = 0) {
    if (!(val_fraction >= 0.0) || !(val_fraction < 1.0)) {
        throw std::invalid_argument("split_corpus: val_fraction must be in [0, 1)");
    }
    const std::size_t cells = corpus.grid.cell_count();
    std::vector<std::vector<std::size_t>> by_cell(cells);
    for (std::size_t i = 0; i < corpus.records.size(); ++i) by_cell.at(corpus.records[i].cell).push_back(i);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        if (by_cell[cell].size() <= test_per_cell) {
            throw std::invalid_argument("split_corpus: cell " + std::to_string(cell) + " has " +
                                        std::to_string(by_cell[cell].size()) + " records, need more than " +
                                        std::to_string(test_per_cell));
        }
    }
    for (std::size_t cell = 0; cell < cells; ++cell) {
        auto& idx = by_cell[cell];
        Rng rng(derive_seed(seed, cell, 0x5111));
        rng.shuffle(std::span<std::size_t>(idx));
        const std::size_t remaining = idx.size() - test_per_cell;
        const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(remaining) * val_fraction));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            Split s = Split::train;
            if (j < test_per_cell) s = Split::test;
            else if (j < test_per_cell + n_val) s = Split::val;
            corpus.records[idx[j]].split = s;
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Containers

inline constexpr std::uint16_t kCorpusVersion = 1;
inline constexpr std::uint16_t kCheckpointVersion = 1;
inline constexpr std::string_view kCorpusMagic = "CWPL";
inline constexpr std::string_view kCheckpointMagic = "CWPM";

namespace detail {

inline void expect_magic(io::ByteReader& r, std::string_view magic, std::string_view what) {
    if (r.remaining() < magic.size() || r.bytes(magic.size()) != magic) {
        throw FormatError(std::string(what) + ": bad magic (expected \"" + std::string(magic) + "\")");
    }
}

inline void expect_version(io::ByteReader& r, std::uint16_t version, std::string_view what) {
    const std::uint16_t v = r.u16();
    if (v != version) {
        throw VersionError(std::string(what) + ": unsupported version " + std::to_string(v) + " (reader handles " +
                           std::to_string(version) + ")");
    }
}

inline void write_rf_config(io::ByteWriter& w, const RfConfig& c) {
    w.f64(c.f_c_hz);
    w.f64(c.f_cw_offset_hz);
    w.f64(c.qpsk_bandwidth_hz);
    w.f64(c.sample_rate_hz);
    w.f64(c.cw_path_loss_db);
    w.f64(c.qpsk_path_loss_db);
    w.f64(c.noise_floor_dbm);
    w.f64(c.qpsk_symbol_rate_baud);
    w.f64(c.rrc_rolloff);
    w.u32(c.burst_len);
    w.u32(c.rrc_span_symbols);
}

inline RfConfig read_rf_config(io::ByteReader& r) {
    RfConfig c;
    c.f_c_hz = r.f64();
    c.f_cw_offset_hz = r.f64();
    c.qpsk_bandwidth_hz = r.f64();
    c.sample_rate_hz = r.f64();
    c.cw_path_loss_db = r.f64();
    c.qpsk_path_loss_db = r.f64();
    c.noise_floor_dbm = r.f64();
    c.qpsk_symbol_rate_baud = r.f64();
    c.rrc_rolloff = r.f64();
    c.burst_len = r.u32();
    c.rrc_span_symbols = r.u32();
    return c;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_corpus(const Corpus& c) {
    io::ByteWriter w;
    w.bytes(kCorpusMagic);
    w.u16(kCorpusVersion);

    io::ByteWriter cfg;
    detail::write_rf_config(cfg, c.rf);
    cfg.u32(static_cast<std::uint32_t>(c.grid.cw_tx_dbm.size()));
    for (double v : c.grid.cw_tx_dbm) cfg.f64(v);
    cfg.u32(static_cast<std::uint32_t>(c.grid.qpsk_tx_dbm.size()));
    for (double v : c.grid.qpsk_tx_dbm) cfg.f64(v);
    cfg.u32(c.per_cell);
    cfg.u64(c.master_seed);
    w.u32(static_cast<std::uint32_t>(cfg.size()));
    const std::size_t cfg_start = w.size();
    for (std::uint8_t b : cfg.buffer()) w.u8(b);
    w.crc_since(cfg_start);

    w.u32(static_cast<std::uint32_t>(c.records.size()));
    for (const CorpusRecord& r : c.records) {
        if (r.raw.size() != c.rf.burst_len) {
            throw std::invalid_argument("encode_corpus: record burst length differs from the config");
        }
        const std::size_t start = w.size();
        w.u32(r.cell);
        w.u32(r.index);
        w.u8(static_cast<std::uint8_t>(r.split));
        w.u64(r.label.seed);
        w.f64(r.label.gain.real());
        w.f64(r.label.gain.imag());
        w.f64(r.label.cw_rx_dbm);
        w.f64(r.label.qpsk_rx_dbm);
        w.f64(r.label.sir_db);
        w.f64(r.label.cw_tx_dbm);
        w.f64(r.label.qpsk_tx_dbm);
        for (const cplx& s : r.raw.samples()) {
            w.f32(static_cast<float>(s.real()));
            w.f32(static_cast<float>(s.imag()));
        }
        w.crc_since(start);
    }
    return w.buffer();
}

inline Corpus decode_corpus(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes);
    detail::expect_magic(r, kCorpusMagic, "corpus");
    detail::expect_version(r, kCorpusVersion, "corpus");

    Corpus c;
    const std::uint32_t cfg_len = r.u32();
    const std::size_t cfg_start = r.position();
    c.rf = detail::read_rf_config(r);
    const std::uint32_t n_cw = r.u32();
    if (n_cw > r.remaining() / 8) throw TruncatedError("corpus: grid larger than file");
    c.grid.cw_tx_dbm.resize(n_cw);
    for (double& v : c.grid.cw_tx_dbm) v = r.f64();
    const std::uint32_t n_q = r.u32();
    if (n_q > r.remaining() / 8) throw TruncatedError("corpus: grid larger than file");
    c.grid.qpsk_tx_dbm.resize(n_q);
    for (double& v : c.grid.qpsk_tx_dbm) v = r.f64();
    c.per_cell = r.u32();
    c.master_seed = r.u64();
    if (r.position() - cfg_start != cfg_len) throw FormatError("corpus: config block length mismatch");
    r.expect_crc_since(cfg_start, "corpus config block");
    try {
        c.rf.validate();
        c.grid.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("corpus: invalid config block: ") + e.what());
    }

    const std::uint32_t count = r.u32();
    const std::size_t n = c.rf.burst_len;
    const std::size_t record_bytes = 4 + 4 + 1 + 8 + 7 * 8 + n * 8 + 4;
    if (count > r.remaining() / record_bytes) {
        throw TruncatedError("corpus: header announces " + std::to_string(count) + " records, file holds fewer");
    }
    c.records.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::size_t start = r.position();
        const std::uint32_t cell = r.u32();
        const std::uint32_t index = r.u32();
        const std::uint8_t split = r.u8();
        BurstLabel l;
        l.seed = r.u64();
        const double gre = r.f64();
        const double gim = r.f64();
        l.gain = cplx(gre, gim);
        l.cw_rx_dbm = r.f64();
        l.qpsk_rx_dbm = r.f64();
        l.sir_db = r.f64();
        l.cw_tx_dbm = r.f64();
        l.qpsk_tx_dbm = r.f64();
        std::vector<cplx> s(n);
        for (cplx& v : s) {
            const float re = r.f32();
            const float im = r.f32();
            v = cplx(re, im);
        }
        r.expect_crc_since(start, "corpus record " + std::to_string(k));
        if (cell >= c.grid.cell_count() || split > static_cast<std::uint8_t>(Split::test)) {
            throw FormatError("corpus: record " + std::to_string(k) + " has an invalid cell or split");
        }
        Burst raw(std::move(s), c.rf.sample_rate_hz);
        Burst dc = frequency_shift(raw, -c.rf.f_cw_offset_hz);
        c.records.push_back(CorpusRecord{std::move(raw), std::move(dc), l, cell, index, static_cast<Split>(split)});
    }
    if (r.remaining() != 0) throw FormatError("corpus: trailing bytes after last record");
    return c;
}

inline void save_corpus(const Corpus& c, const std::string& path) { io::write_file(path, encode_corpus(c)); }
inline Corpus load_corpus(const std::string& path) { return decode_corpus(io::read_file(path)); }

// Checkpoint file: "CWPM" | u16 version | spec block + crc | metadata block + crc
//   | u32 tensor count | per tensor: u16 name length, name, u8 rank, rank x u32 dims,
//     f32 values, u32 crc.

inline std::vector<std::uint8_t> encode_checkpoint(const ModelWeights<float>& m) {
    io::ByteWriter w;
    w.bytes(kCheckpointMagic);
    w.u16(kCheckpointVersion);

    std::size_t start = w.size();
    const ModelSpec& s = m.spec;
    w.u8(static_cast<std::uint8_t>(s.variant));
    for (std::uint32_t v : s.conv_channels) w.u32(v);
    for (std::uint32_t v : s.kernels) w.u32(v);
    w.u32(s.embedding_dim);
    w.u32(s.mlp_hidden);
    w.u32(s.output_dim);
    w.u32(s.input_channels);
    w.u32(s.input_length);
    w.f64(s.probe_offset_hz);
    w.f64(s.input_scale);
    w.crc_since(start);

    start = w.size();
    w.u32(m.meta.epoch);
    w.u64(m.meta.seed);
    w.u32(static_cast<std::uint32_t>(m.meta.loss_history.size()));
    for (const EpochLoss& e : m.meta.loss_history) {
        w.f64(e.train_db2);
        w.f64(e.val_db2);
    }
    w.crc_since(start);

    w.u32(static_cast<std::uint32_t>(m.params.size()));
    for (const auto& p : m.params) {
        start = w.size();
        w.u16(static_cast<std::uint16_t>(p.name.size()));
        w.bytes(p.name);
        w.u8(static_cast<std::uint8_t>(p.tensor.rank()));
        for (std::size_t d : p.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
        for (float v : p.tensor.values()) w.f32(v);
        w.crc_since(start);
    }
    return w.buffer();
}

inline ModelWeights<float> decode_checkpoint(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes);
    detail::expect_magic(r, kCheckpointMagic, "checkpoint");
    detail::expect_version(r, kCheckpointVersion, "checkpoint");

    ModelWeights<float> m;
    std::size_t start = r.position();
    ModelSpec& s = m.spec;
    const std::uint8_t variant = r.u8();
    if (variant > 1) throw FormatError("checkpoint: unknown model variant");
    s.variant = static_cast<Variant>(variant);
    for (auto& v : s.conv_channels) v = r.u32();
    for (auto& v : s.kernels) v = r.u32();
    s.embedding_dim = r.u32();
    s.mlp_hidden = r.u32();
    s.output_dim = r.u32();
    s.input_channels = r.u32();
    s.input_length = r.u32();
    s.probe_offset_hz = r.f64();
    s.input_scale = r.f64();
    r.expect_crc_since(start, "checkpoint spec block");

    start = r.position();
    m.meta.epoch = r.u32();
    m.meta.seed = r.u64();
    const std::uint32_t hist = r.u32();
    if (hist > r.remaining() / 16) throw TruncatedError("checkpoint: loss history larger than file");
    m.meta.loss_history.resize(hist);
    for (EpochLoss& e : m.meta.loss_history) {
        e.train_db2 = r.f64();
        e.val_db2 = r.f64();
    }
    r.expect_crc_since(start, "checkpoint metadata block");

    std::vector<LayerInfo> layers;
    try {
        layers = layer_table(s);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("checkpoint: invalid model spec: ") + e.what());
    }
    const std::uint32_t count = r.u32();
    if (count != 2 * layers.size()) throw FormatError("checkpoint: tensor count does not match the model spec");
    for (std::uint32_t k = 0; k < count; ++k) {
        start = r.position();
        const std::uint16_t name_len = r.u16();
        std::string name = r.bytes(name_len);
        const std::uint8_t rank = r.u8();
        ag::Shape shape(rank);
        for (auto& d : shape) d = r.u32();
        const LayerInfo& info = layers[k / 2];
        const std::string expected_name = info.name + (k % 2 == 0 ? ".weight" : ".bias");
        const ag::Shape& expected_shape = k % 2 == 0 ? info.weight_shape : info.bias_shape;
        if (name != expected_name || shape != expected_shape) {
            throw FormatError("checkpoint: tensor " + std::to_string(k) + " is '" + name + "' " + ag::shape_str(shape) +
                              ", expected '" + expected_name + "' " + ag::shape_str(expected_shape));
        }
        std::vector<float> v(ag::shape_size(shape));
        for (float& x : v) x = r.f32();
        r.expect_crc_since(start, "checkpoint tensor '" + name + "'");
        m.params.push_back({std::move(name), ag::Tensor<float>(std::move(shape), std::move(v), true)});
    }
    if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes after last tensor");
    return m;
}

inline void save_checkpoint(const ModelWeights<float>& m, const std::string& path) {
    io::write_file(path, encode_checkpoint(m));
}
inline ModelWeights<float> load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace cwpower
