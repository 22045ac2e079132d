#pragma once

// Classical estimators: the Hann-windowed complex-gain extractor used for ground truth, a
// radix-2 FFT, the FFT 3-bin tone power baseline and a Welch PSD for figure data.

#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "cwpower/signal.hpp"

namespace cwpower {

struct GainEstimate {
    cplx gain;
    double power_mw = 0.0;
    double power_dbm = -std::numeric_limits<double>::infinity();

    static GainEstimate from_gain(cplx g) {
        GainEstimate e{g, std::norm(g), 0.0};
        e.power_dbm = std::isnan(e.power_mw) ? e.power_mw
                      : e.power_mw > 0.0     ? mw_to_dbm(e.power_mw)
                                             : -std::numeric_limits<double>::infinity();
        return e;
    }
};

enum class WindowKind { hann, rectangular };

struct Spectrum {
    std::vector<cplx> bins;
    double bin_width_hz = 0.0;
    WindowKind window = WindowKind::hann;
};

inline constexpr std::size_t kBaselineFftSize = 4096;

/// Symmetric Hann window, endpoints zero.
inline std::vector<double> hann_window(std::size_t n) {
    if (n < 2) {
        throw std::invalid_argument("hann_window: n must be at least 2");
    }
    std::vector<double> w(n);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / denom));
    }
    // Force exact symmetry; cos() is not exactly symmetric about pi.
    for (std::size_t k = 0; k < n / 2; ++k) {
        w[n - 1 - k] = w[k];
    }
    return w;
}

/// g = <w, x w> / <w, w> over the whole burst. The burst must already be shifted so the tone
/// sits at 0 Hz.
inline GainEstimate extract_gain(std::span<const cplx> x) {
    if (x.empty()) {
        throw std::invalid_argument("extract_gain: empty burst");
    }
    if (x.size() <= 2) {  // the Hann window is all zeros here
        cplx sum{};
        for (const cplx& v : x) sum += v;
        return GainEstimate::from_gain(sum / static_cast<double>(x.size()));
    }
    const std::vector<double> w = hann_window(x.size());
    cplx num{};
    double den = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double w2 = w[k] * w[k];
        num += w2 * x[k];
        den += w2;
    }
    return GainEstimate::from_gain(num / den);
}

inline GainEstimate extract_gain(const Burst& burst) { return extract_gain(burst.samples()); }

/// In-place iterative radix-2 DIT FFT, X[k] = sum x[n] e^{-j 2 pi k n / M}, unnormalized.
inline void fft_inplace(std::span<cplx> x) {
    const std::size_t m = x.size();
    if (m == 0 || !std::has_single_bit(m)) {
        throw std::invalid_argument("fft: length must be a power of two");
    }
    for (std::size_t i = 1, j = 0; i < m; ++i) {
        std::size_t bit = m >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    // Twiddles evaluated directly (no recurrence) to keep the error at a few ulps.
    std::vector<cplx> twiddle(m / 2);
    for (std::size_t k = 0; k < m / 2; ++k) {
        twiddle[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m));
    }
    for (std::size_t len = 2; len <= m; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = m / len;
        for (std::size_t base = 0; base < m; base += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cplx t = twiddle[k * stride] * x[base + k + half];
                const cplx u = x[base + k];
                x[base + k] = u + t;
                x[base + k + half] = u - t;
            }
        }
    }
}

inline std::vector<cplx> fft(std::span<const cplx> x) {
    std::vector<cplx> out(x.begin(), x.end());
    fft_inplace(out);
    return out;
}

/// Hann-windowed, zero-padded spectrum of a burst.
inline Spectrum spectrum(const Burst& burst, std::size_t fft_size = kBaselineFftSize) {
    if (!std::has_single_bit(fft_size)) {
        throw std::invalid_argument("spectrum: FFT size must be a power of two");
    }
    if (burst.size() > fft_size) {
        throw std::invalid_argument("spectrum: burst longer than FFT size");
    }
    if (burst.size() < 2) {
        throw std::invalid_argument("spectrum: burst needs at least two samples");
    }
    const std::vector<double> w = hann_window(burst.size());
    Spectrum s;
    s.bins.assign(fft_size, cplx{});
    for (std::size_t k = 0; k < burst.size(); ++k) s.bins[k] = w[k] * burst[k];
    fft_inplace(s.bins);
    s.bin_width_hz = burst.sample_rate_hz() / static_cast<double>(fft_size);
    s.window = WindowKind::hann;
    return s;
}

namespace detail {

// Windowed DTFT magnitude squared at a fractional bin offset of an M-point grid.
inline double window_response(std::span<const double> w, double bins, std::size_t m) {
    cplx acc{};
    for (std::size_t n = 0; n < w.size(); ++n) {
        acc += w[n] * std::polar(1.0, -2.0 * std::numbers::pi * bins * static_cast<double>(n) / static_cast<double>(m));
    }
    return std::norm(acc);
}

}  // namespace detail

/// Calibration constant of the 3-bin estimator: a clean unit tone exactly on a bin returns 1.
inline double fft_3bin_calibration(std::size_t burst_len, std::size_t fft_size = kBaselineFftSize) {
    const std::vector<double> w = hann_window(burst_len);
    const double sum = detail::window_response(w, -1.0, fft_size) + detail::window_response(w, 0.0, fft_size) +
                       detail::window_response(w, 1.0, fft_size);
    return 3.0 / sum;
}

/// Average of |X[k]|^2 over the three bins nearest f_cw_hz, calibrated to tone power.
inline GainEstimate fft_3bin_estimate(const Burst& burst, double f_cw_hz, std::size_t fft_size = kBaselineFftSize) {
    const double fs = burst.sample_rate_hz();
    if (!std::isfinite(f_cw_hz) || std::abs(f_cw_hz) >= fs / 2.0) {
        throw std::invalid_argument("fft_3bin_estimate: tone frequency outside Nyquist");
    }
    const Spectrum s = spectrum(burst, fft_size);
    const auto m = static_cast<long long>(fft_size);
    const auto k0 = static_cast<long long>(std::llround(f_cw_hz / s.bin_width_hz));
    const auto wrap = [m](long long k) { return static_cast<std::size_t>(((k % m) + m) % m); };

    double acc = 0.0;
    for (long long d = -1; d <= 1; ++d) acc += std::norm(s.bins[wrap(k0 + d)]);
    const double power = fft_3bin_calibration(burst.size(), fft_size) * acc / 3.0;

    const cplx center = s.bins[wrap(k0)];
    const double mag = std::abs(center);
    const cplx g = mag > 0.0 ? center * (std::sqrt(power) / mag) : cplx(std::sqrt(power), 0.0);
    GainEstimate e{g, power, power > 0.0 ? mw_to_dbm(power) : -std::numeric_limits<double>::infinity()};
    return e;
}

inline constexpr double kPsdFloorDb = -400.0;

struct WelchPsd {
    /// Per-bin power in dBm, FFT order (bin 0 = DC, upper half = negative frequencies).
    std::vector<double> power_dbm;
    double bin_width_hz = 0.0;
    std::size_t averages = 0;

    double frequency_of(std::size_t bin) const {
        const auto m = static_cast<long long>(power_dbm.size());
        const auto k = static_cast<long long>(bin);
        return static_cast<double>(k < (m + 1) / 2 ? k : k - m) * bin_width_hz;
    }
};

/// Hann-windowed averaged periodogram. Bins sum (in mW) to the burst's mean power for
/// stationary input. Segments shorter than a power of two are zero-padded.
inline WelchPsd welch_psd(const Burst& burst, std::size_t segment = 1024, double overlap = 0.5) {
    if (segment < 2 || segment > burst.size()) {
        throw std::invalid_argument("welch_psd: segment must be in [2, burst length]");
    }
    if (!(overlap >= 0.0) || !(overlap < 1.0)) {
        throw std::invalid_argument("welch_psd: overlap must be in [0, 1)");
    }
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(segment * (1.0 - overlap))));
    const std::size_t m = std::bit_ceil(segment);
    const std::vector<double> w = hann_window(segment);
    double wsum2 = 0.0;
    for (double v : w) wsum2 += v * v;

    std::vector<double> acc(m, 0.0);
    std::vector<cplx> buf(m);
    std::size_t count = 0;
    for (std::size_t start = 0; start + segment <= burst.size(); start += hop) {
        std::fill(buf.begin(), buf.end(), cplx{});
        for (std::size_t k = 0; k < segment; ++k) buf[k] = w[k] * burst[start + k];
        fft_inplace(buf);
        for (std::size_t k = 0; k < m; ++k) acc[k] += std::norm(buf[k]);
        ++count;
    }

    WelchPsd psd;
    psd.bin_width_hz = burst.sample_rate_hz() / static_cast<double>(m);
    psd.averages = count;
    psd.power_dbm.resize(m);
    const double norm = 1.0 / (static_cast<double>(count) * static_cast<double>(m) * wsum2);
    for (std::size_t k = 0; k < m; ++k) {
        const double p = acc[k] * norm;
        psd.power_dbm[k] = p > 0.0 ? std::max(kPsdFloorDb, mw_to_dbm(p)) : kPsdFloorDb;
    }
    return psd;
}

}  // namespace cwpower
