#pragma once

// Complex-baseband burst synthesis: CW probe tone, RRC-shaped QPSK interferer, receiver noise,
// and the TX -> RX power calibration of the 5 GHz bench.
//
// Sample amplitudes carry sqrt(mW), so mean |x|^2 of a burst is its power in mW.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwpower/rng.hpp"

namespace cwpower {

using cplx = std::complex<double>;

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

class Burst {
public:
    Burst(std::vector<cplx> samples, double sample_rate_hz)
        : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
        if (samples_.empty()) {
            throw std::invalid_argument("burst must contain at least one sample");
        }
        if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
            throw std::invalid_argument("burst sample rate must be positive and finite");
        }
        for (const cplx& s : samples_) {
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
                throw std::invalid_argument("burst samples must be finite");
            }
        }
    }

    static Burst zeros(std::size_t n, double sample_rate_hz) {
        return Burst(std::vector<cplx>(n), sample_rate_hz);
    }

    std::size_t size() const noexcept { return samples_.size(); }
    double sample_rate_hz() const noexcept { return sample_rate_hz_; }
    std::span<const cplx> samples() const& noexcept { return samples_; }
    std::span<const cplx> samples() const&& = delete;  // would dangle
    const cplx& operator[](std::size_t i) const { return samples_[i]; }

    /// Mean |x|^2 in mW, accumulated in order.
    double mean_power() const noexcept {
        double acc = 0.0;
        for (const cplx& s : samples_) {
            acc += std::norm(s);
        }
        return acc / static_cast<double>(samples_.size());
    }

    friend bool operator==(const Burst&, const Burst&) = default;

private:
    std::vector<cplx> samples_;
    double sample_rate_hz_;
};

struct RfConfig {
    double f_c_hz = 5.0e9;
    double f_cw_offset_hz = 200e3;
    double qpsk_bandwidth_hz = 4e6;
    double sample_rate_hz = 10e6;
    double cw_path_loss_db = 17.5;
    double qpsk_path_loss_db = 24.2;
    /// -inf disables receiver noise.
    double noise_floor_dbm = -102.0;
    double qpsk_symbol_rate_baud = 2.5e6;
    double rrc_rolloff = 0.6;
    std::uint32_t burst_len = 1000;
    /// RRC half-span in symbols.
    std::uint32_t rrc_span_symbols = 8;

    std::uint32_t samples_per_symbol() const {
        return static_cast<std::uint32_t>(std::lround(sample_rate_hz / qpsk_symbol_rate_baud));
    }

    void validate() const {
        const auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(f_c_hz) || !finite(f_cw_offset_hz) || !finite(qpsk_bandwidth_hz) ||
            !finite(sample_rate_hz) || !finite(cw_path_loss_db) || !finite(qpsk_path_loss_db) ||
            !finite(qpsk_symbol_rate_baud) || !finite(rrc_rolloff) || std::isnan(noise_floor_dbm) ||
            noise_floor_dbm == std::numeric_limits<double>::infinity()) {
            throw std::invalid_argument("rf config: non-finite parameter");
        }
        if (sample_rate_hz <= 0.0 || qpsk_symbol_rate_baud <= 0.0 || burst_len < 1) {
            throw std::invalid_argument("rf config: rates and burst length must be positive");
        }
        if (rrc_rolloff <= 0.0 || rrc_rolloff > 1.0) {
            throw std::invalid_argument("rf config: rrc roll-off must lie in (0, 1]");
        }
        const double occupied = qpsk_symbol_rate_baud * (1.0 + rrc_rolloff);
        if (std::abs(occupied - qpsk_bandwidth_hz) > 1e-9 * qpsk_bandwidth_hz) {
            throw std::invalid_argument("rf config: symbol rate * (1 + roll-off) must equal the QPSK bandwidth");
        }
        const double osf = sample_rate_hz / qpsk_symbol_rate_baud;
        if (osf < 1.0 || std::abs(osf - std::round(osf)) > 1e-9) {
            throw std::invalid_argument("rf config: sample rate must be an integer multiple of the symbol rate");
        }
        if (std::abs(f_cw_offset_hz) + qpsk_bandwidth_hz / 2.0 >= sample_rate_hz / 2.0) {
            throw std::invalid_argument("rf config: CW tone and QPSK band must lie inside Nyquist");
        }
        if (rrc_span_symbols < 1) {
            throw std::invalid_argument("rf config: rrc span must be at least one symbol");
        }
    }

    bool noise_enabled() const noexcept { return std::isfinite(noise_floor_dbm); }

    friend bool operator==(const RfConfig&, const RfConfig&) = default;
};

struct PowerGrid {
    std::vector<double> cw_tx_dbm{-10, -20, -25, -30, -35, -40, -45, -50};
    std::vector<double> qpsk_tx_dbm{-10, -20, -30, -40, -50};

    std::size_t cell_count() const noexcept { return cw_tx_dbm.size() * qpsk_tx_dbm.size(); }

    /// Cells are CW-major: cell = cw_index * |qpsk| + qpsk_index.
    std::size_t cell_index(std::size_t cw_index, std::size_t qpsk_index) const {
        return cw_index * qpsk_tx_dbm.size() + qpsk_index;
    }
    double cw_of(std::size_t cell) const { return cw_tx_dbm.at(cell / qpsk_tx_dbm.size()); }
    double qpsk_of(std::size_t cell) const { return qpsk_tx_dbm.at(cell % qpsk_tx_dbm.size()); }

    void validate() const {
        if (cw_tx_dbm.empty() || qpsk_tx_dbm.empty()) {
            throw std::invalid_argument("power grid must have at least one CW and one QPSK level");
        }
        for (double v : cw_tx_dbm) {
            if (!std::isfinite(v)) throw std::invalid_argument("power grid: non-finite CW level");
        }
        for (double v : qpsk_tx_dbm) {
            if (!std::isfinite(v)) throw std::invalid_argument("power grid: non-finite QPSK level");
        }
    }

    friend bool operator==(const PowerGrid&, const PowerGrid&) = default;
};

struct BurstLabel {
    cplx gain;
    double cw_rx_dbm = 0.0;
    double qpsk_rx_dbm = 0.0;
    double sir_db = 0.0;
    double cw_tx_dbm = 0.0;
    double qpsk_tx_dbm = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const BurstLabel&, const BurstLabel&) = default;
};

inline double tx_to_rx_dbm(double tx_dbm, double path_loss_db) {
    return tx_dbm - path_loss_db;
}

inline double nominal_sir_db(double cw_tx_dbm, double qpsk_tx_dbm, const RfConfig& cfg) {
    return tx_to_rx_dbm(cw_tx_dbm, cfg.cw_path_loss_db) - tx_to_rx_dbm(qpsk_tx_dbm, cfg.qpsk_path_loss_db);
}

namespace detail {

// Phase of exp(j 2 pi f k) with f in cycles/sample; reduced before scaling by 2 pi so
// long records keep full precision.
inline double cycle_phase(double cycles_per_sample, std::size_t k) {
    const double cycles = cycles_per_sample * static_cast<double>(k);
    return 2.0 * std::numbers::pi * (cycles - std::floor(cycles));
}

}  // namespace detail

inline Burst synthesize_cw(double amplitude, double freq_hz, double phase_rad, std::size_t n, double fs) {
    if (!std::isfinite(amplitude) || !std::isfinite(freq_hz) || !std::isfinite(phase_rad) || !std::isfinite(fs)) {
        throw std::invalid_argument("synthesize_cw: non-finite input");
    }
    if (amplitude < 0.0) {
        throw std::invalid_argument("synthesize_cw: amplitude must be non-negative");
    }
    if (!(fs > 0.0) || std::abs(freq_hz) >= fs / 2.0) {
        throw std::invalid_argument("synthesize_cw: frequency must lie strictly inside Nyquist");
    }
    if (n < 1) {
        throw std::invalid_argument("synthesize_cw: n must be at least 1");
    }
    const double f = freq_hz / fs;
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = std::polar(amplitude, detail::cycle_phase(f, k) + phase_rad);
    }
    return Burst(std::move(out), fs);
}

/// Root-raised-cosine taps spanning +-span symbols, Hann-tapered, unit energy.
inline std::vector<double> rrc_taps(double rolloff, std::uint32_t sps, std::uint32_t span) {
    const std::size_t len = 2 * static_cast<std::size_t>(span) * sps + 1;
    const double a = rolloff;
    const double pi = std::numbers::pi;
    std::vector<double> taps(len);
    double energy = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double t = (static_cast<double>(i) - static_cast<double>(len - 1) / 2.0) / sps;
        double h;
        if (std::abs(t) < 1e-12) {
            h = 1.0 - a + 4.0 * a / pi;
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * a)) < 1e-9) {
            h = a / std::sqrt(2.0) *
                ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * a)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * a)));
        } else {
            h = (std::sin(pi * t * (1.0 - a)) + 4.0 * a * t * std::cos(pi * t * (1.0 + a))) /
                (pi * t * (1.0 - (4.0 * a * t) * (4.0 * a * t)));
        }
        const double taper = 0.5 * (1.0 - std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(len - 1)));
        taps[i] = h * taper;
        energy += taps[i] * taps[i];
    }
    const double norm = 1.0 / std::sqrt(energy);
    for (double& v : taps) v *= norm;
    return taps;
}

/// Gray-mapped QPSK at cfg.qpsk_symbol_rate_baud, RRC shaped, centred at 0 Hz, scaled so the
/// burst's mean power is exactly 10^(rx_power_dbm/10) mW.
inline Burst synthesize_qpsk(double rx_power_dbm, const RfConfig& cfg, std::uint64_t rng_seed,
                             std::size_t n = 0) {
    if (!std::isfinite(rx_power_dbm)) {
        throw std::invalid_argument("synthesize_qpsk: rx power must be finite");
    }
    cfg.validate();
    if (n == 0) n = cfg.burst_len;

    const std::uint32_t sps = cfg.samples_per_symbol();
    const std::vector<double> taps = rrc_taps(cfg.rrc_rolloff, sps, cfg.rrc_span_symbols);
    const std::size_t len = taps.size();
    // Skip the filter transient so every output sample sees the full tap set.
    const std::size_t start = len - 1;
    const std::size_t n_sym = (start + n + sps - 1) / sps + 1;

    Rng rng(rng_seed);
    const double s = 1.0 / std::numbers::sqrt2;
    std::vector<cplx> symbols(n_sym);
    for (cplx& sym : symbols) {
        const std::uint64_t bits = rng.next_u64();
        const double i_bit = (bits & 1U) ? -s : s;
        const double q_bit = (bits & 2U) ? -s : s;
        sym = cplx(i_bit, q_bit);
    }

    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t pos = start + k;
        // Symbols m with 0 <= pos - m*sps < len.
        const std::size_t m_hi = pos / sps;
        const std::size_t m_lo = pos >= len ? (pos - len) / sps + 1 : 0;
        cplx acc{};
        for (std::size_t m = m_lo; m <= m_hi; ++m) {
            acc += taps[pos - m * sps] * symbols[m];
        }
        out[k] = acc;
    }

    double power = 0.0;
    for (const cplx& v : out) power += std::norm(v);
    power /= static_cast<double>(n);
    const double scale = std::sqrt(dbm_to_mw(rx_power_dbm) / power);
    for (cplx& v : out) v *= scale;
    return Burst(std::move(out), cfg.sample_rate_hz);
}

/// Circularly symmetric complex Gaussian with expected power 10^(floor_dbm/10) mW.
/// floor_dbm = -inf yields an all-zero burst.
inline Burst synthesize_noise(double floor_dbm, std::size_t n, std::uint64_t rng_seed, double fs = 10e6) {
    if (n < 1) {
        throw std::invalid_argument("synthesize_noise: n must be at least 1");
    }
    if (std::isnan(floor_dbm) || floor_dbm == std::numeric_limits<double>::infinity()) {
        throw std::invalid_argument("synthesize_noise: floor must be finite or -inf");
    }
    std::vector<cplx> out(n);
    if (floor_dbm == -std::numeric_limits<double>::infinity()) {
        return Burst(std::move(out), fs);
    }
    const double sigma = std::sqrt(dbm_to_mw(floor_dbm) / 2.0);
    Rng rng(rng_seed);
    for (cplx& v : out) {
        const double re = rng.normal();
        const double im = rng.normal();
        v = cplx(sigma * re, sigma * im);
    }
    return Burst(std::move(out), fs);
}

inline Burst mix(std::span<const Burst> bursts) {
    if (bursts.empty()) {
        throw std::invalid_argument("mix: need at least one burst");
    }
    const std::size_t n = bursts.front().size();
    const double fs = bursts.front().sample_rate_hz();
    std::vector<cplx> out(n);
    for (const Burst& b : bursts) {
        if (b.size() != n || b.sample_rate_hz() != fs) {
            throw std::invalid_argument("mix: bursts differ in length or sample rate");
        }
        for (std::size_t k = 0; k < n; ++k) out[k] += b[k];
    }
    return Burst(std::move(out), fs);
}

inline Burst mix(std::initializer_list<Burst> bursts) {
    return mix(std::span<const Burst>(bursts.begin(), bursts.size()));
}

inline Burst frequency_shift(const Burst& burst, double delta_hz) {
    const double fs = burst.sample_rate_hz();
    if (!std::isfinite(delta_hz) || std::abs(delta_hz) >= fs / 2.0) {
        throw std::invalid_argument("frequency_shift: shift must lie strictly inside Nyquist");
    }
    const double f = delta_hz / fs;
    std::vector<cplx> out(burst.size());
    for (std::size_t k = 0; k < burst.size(); ++k) {
        out[k] = burst[k] * std::polar(1.0, detail::cycle_phase(f, k));
    }
    return Burst(std::move(out), fs);
}

}  // namespace cwpower
