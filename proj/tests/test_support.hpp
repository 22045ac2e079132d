#pragma once

// Independent reference implementations shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

namespace cwtest {

using cplx = std::complex<double>;

/// O(M^2) DFT, X[k] = sum x[n] e^{-j 2 pi k n / M}.
inline std::vector<cplx> naive_dft(std::span<const cplx> x) {
    const std::size_t m = x.size();
    std::vector<cplx> out(m);
    for (std::size_t k = 0; k < m; ++k) {
        cplx acc{};
        for (std::size_t n = 0; n < m; ++n) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * n) % m) / static_cast<double>(m);
            acc += x[n] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

/// Central finite-difference gradient of f at x, step h.
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// ||a - b|| / max(||a||, ||b||); zero when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Linear-interpolation quantile from plotting positions i / (n - 1): locate the bracketing
/// pair by search instead of by index arithmetic.
inline double quantile_by_positions(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 1) return v[0];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double lo = static_cast<double>(i) / static_cast<double>(n - 1);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n - 1);
        if (p >= lo && p <= hi) return v[i] + (p - lo) / (hi - lo) * (v[i + 1] - v[i]);
    }
    return v.back();
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("cwpower_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace cwtest
