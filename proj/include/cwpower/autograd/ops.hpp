#pragma once

// Differentiable ops used by the CW power regressors. Long reductions (time sums in conv
// weight gradients, pooling, losses) accumulate in double regardless of T.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cwpower/autograd/tensor.hpp"

namespace cwpower::ag {

using Acc = double;

// ---------------------------------------------------------------------------------------------
// conv1d, stride 1, symmetric zero padding

template <typename T>
struct Conv1dContext {
    std::shared_ptr<const Node<T>> input;
    std::shared_ptr<const Node<T>> weight;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 0;
    std::size_t length = 0;
    std::size_t padding = 0;

    bool valid() const noexcept { return input && weight && kernel > 0 && length > 0; }
};

template <typename T>
struct Conv1dGrads {
    std::vector<T> input;
    std::vector<T> weight;
    std::vector<T> bias;
};

namespace detail {

// Output index t reads input index t + k - padding; returns the t-range where that is valid.
inline std::pair<std::size_t, std::size_t> conv_valid_range(std::size_t k, std::size_t padding, std::size_t length) {
    const auto off = static_cast<long long>(k) - static_cast<long long>(padding);
    const auto n = static_cast<long long>(length);
    const long long lo = std::max(0LL, -off);
    const long long hi = std::min(n, n - off);
    if (hi <= lo) return {0, 0};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// col[(i K + k), t] = x[i, t + k - padding], zero outside the input.
template <typename T>
RowMatrix<T> im2col(const T* x, std::size_t ci, std::size_t kk, std::size_t n, std::size_t padding) {
    RowMatrix<T> col = RowMatrix<T>::Zero(static_cast<Eigen::Index>(ci * kk), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < ci; ++i) {
        for (std::size_t k = 0; k < kk; ++k) {
            const auto [lo, hi] = conv_valid_range(k, padding, n);
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(padding);
            T* row = col.row(static_cast<Eigen::Index>(i * kk + k)).data();
            for (std::size_t t = lo; t < hi; ++t) row[t] = x[i * n + t + off];
        }
    }
    return col;
}

}  // namespace detail

template <typename T>
Conv1dGrads<T> conv1d_backward(std::span<const T> grad_out, const Conv1dContext<T>& ctx, bool want_input = true) {
    if (!ctx.valid()) {
        throw std::logic_error("conv1d_backward: no cached forward context");
    }
    const std::size_t ci = ctx.in_channels, co = ctx.out_channels, kk = ctx.kernel, n = ctx.length;
    if (grad_out.size() != co * n) {
        throw std::invalid_argument("conv1d_backward: grad_out has wrong size");
    }
    using Mat = detail::RowMatrix<T>;
    using MatD = detail::RowMatrix<Acc>;
    const auto rows_w = static_cast<Eigen::Index>(co), cols_w = static_cast<Eigen::Index>(ci * kk);
    const Eigen::Map<const Mat> go(grad_out.data(), rows_w, static_cast<Eigen::Index>(n));
    const Eigen::Map<const Mat> w(ctx.weight->values.data(), rows_w, cols_w);
    const Mat col = detail::im2col(ctx.input->values.data(), ci, kk, n, ctx.padding);

    Conv1dGrads<T> g;
    g.bias.resize(co);
    for (std::size_t c = 0; c < co; ++c) {
        Acc acc = 0;
        for (std::size_t t = 0; t < n; ++t) acc += grad_out[c * n + t];
        g.bias[c] = static_cast<T>(acc);
    }

    // Weight gradient reduces over the whole time axis: done in double.
    g.weight.resize(co * ci * kk);
    const MatD gw = go.template cast<Acc>() * col.template cast<Acc>().transpose();
    Eigen::Map<Mat>(g.weight.data(), rows_w, cols_w) = gw.template cast<T>();

    if (want_input) {
        const Mat gcol = w.transpose() * go;
        g.input.assign(ci * n, T{0});
        for (std::size_t i = 0; i < ci; ++i) {
            T* gi = g.input.data() + i * n;
            for (std::size_t k = 0; k < kk; ++k) {
                const auto [lo, hi] = detail::conv_valid_range(k, ctx.padding, n);
                const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(ctx.padding);
                const T* row = gcol.row(static_cast<Eigen::Index>(i * kk + k)).data();
                for (std::size_t t = lo; t < hi; ++t) gi[t + off] += row[t];
            }
        }
    }
    return g;
}

/// out[c, t] = bias[c] + sum_{i,k} weight[c, i, k] * input_padded[i, t + k].
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t padding) {
    if (input.rank() != 2 || weight.rank() != 3 || bias.rank() != 1) {
        throw std::invalid_argument("conv1d: expected input [C_in x T], weight [C_out x C_in x K], bias [C_out]");
    }
    const std::size_t ci = input.dim(0), n = input.dim(1);
    const std::size_t co = weight.dim(0), kk = weight.dim(2);
    if (weight.dim(1) != ci || bias.dim(0) != co) {
        throw std::invalid_argument("conv1d: channel mismatch between input " + shape_str(input.shape()) +
                                    ", weight " + shape_str(weight.shape()) + " and bias " +
                                    shape_str(bias.shape()));
    }
    if (kk % 2 == 0 || padding != (kk - 1) / 2) {
        throw std::invalid_argument("conv1d: kernel must be odd with padding (K-1)/2");
    }
    using Mat = detail::RowMatrix<T>;
    const Mat col = detail::im2col(input.values().data(), ci, kk, n, padding);
    const Eigen::Map<const Mat> w(weight.values().data(), static_cast<Eigen::Index>(co),
                                  static_cast<Eigen::Index>(ci * kk));
    std::vector<T> out(co * n);
    Eigen::Map<Mat> y(out.data(), static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(n));
    y.noalias() = w * col;
    const auto b = bias.values();
    for (std::size_t c = 0; c < co; ++c) y.row(static_cast<Eigen::Index>(c)).array() += b[c];

    Conv1dContext<T> ctx{input.node(), weight.node(), ci, co, kk, n, padding};
    const bool input_grad = input.requires_grad();
    return Tensor<T>::from_op({co, n}, std::move(out), {input, weight, bias},
                              [ctx, input_grad](Node<T>& self) {
                                  Conv1dGrads<T> g = conv1d_backward<T>(self.grad, ctx, input_grad);
                                  if (input_grad) self.parents[0]->accumulate_grad(g.input);
                                  if (self.parents[1]->requires_grad) self.parents[1]->accumulate_grad(g.weight);
                                  if (self.parents[2]->requires_grad) self.parents[2]->accumulate_grad(g.bias);
                              });
}

// ---------------------------------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    std::vector<T> out(x.size());
    const auto v = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] > T{0} ? v[i] : T{0};
    return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [](Node<T>& self) {
        const auto& in = self.parents[0]->values;
        std::vector<T> g(in.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = in[i] > T{0} ? self.grad[i] : T{0};
        self.parents[0]->accumulate_grad(g);
    });
}

namespace detail {

inline std::size_t pool_begin(std::size_t b, std::size_t n, std::size_t out) { return (b * n) / out; }
inline std::size_t pool_end(std::size_t b, std::size_t n, std::size_t out) { return ((b + 1) * n + out - 1) / out; }

}  // namespace detail

/// Bin b averages input indices [floor(b T / out_t), ceil((b + 1) T / out_t)).
template <typename T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x, std::size_t out_t) {
    if (x.rank() != 2) throw std::invalid_argument("adaptive_avg_pool: expected [C x T]");
    const std::size_t c = x.dim(0), n = x.dim(1);
    if (out_t < 1 || out_t > n) {
        throw std::invalid_argument("adaptive_avg_pool: output length must be in [1, T]");
    }
    std::vector<T> out(c * out_t);
    const auto v = x.values();
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t b = 0; b < out_t; ++b) {
            const std::size_t lo = detail::pool_begin(b, n, out_t), hi = detail::pool_end(b, n, out_t);
            Acc acc = 0;
            for (std::size_t t = lo; t < hi; ++t) acc += v[ch * n + t];
            out[ch * out_t + b] = static_cast<T>(acc / static_cast<Acc>(hi - lo));
        }
    }
    return Tensor<T>::from_op({c, out_t}, std::move(out), {x}, [c, n, out_t](Node<T>& self) {
        std::vector<T> g(c * n, T{0});
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t b = 0; b < out_t; ++b) {
                const std::size_t lo = detail::pool_begin(b, n, out_t), hi = detail::pool_end(b, n, out_t);
                const T share = static_cast<T>(static_cast<Acc>(self.grad[ch * out_t + b]) / static_cast<Acc>(hi - lo));
                for (std::size_t t = lo; t < hi; ++t) g[ch * n + t] += share;
            }
        }
        self.parents[0]->accumulate_grad(g);
    });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (shape_size(shape) != x.size()) {
        throw std::invalid_argument("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
    }
    std::vector<T> v(x.values().begin(), x.values().end());
    return Tensor<T>::from_op(std::move(shape), std::move(v), {x},
                              [](Node<T>& self) { self.parents[0]->accumulate_grad(self.grad); });
}

/// weight [F_out x F_in] times x [F_in] plus bias [F_out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
    if (x.rank() != 1 || weight.rank() != 2 || bias.rank() != 1 || weight.dim(1) != x.dim(0) ||
        bias.dim(0) != weight.dim(0)) {
        throw std::invalid_argument("linear: shape mismatch (x " + shape_str(x.shape()) + ", weight " +
                                    shape_str(weight.shape()) + ", bias " + shape_str(bias.shape()) + ")");
    }
    const std::size_t fi = weight.dim(1), fo = weight.dim(0);
    const auto xv = x.values();
    const auto wv = weight.values();
    const auto bv = bias.values();
    std::vector<T> out(fo);
    for (std::size_t o = 0; o < fo; ++o) {
        Acc acc = bv[o];
        for (std::size_t i = 0; i < fi; ++i) acc += static_cast<Acc>(wv[o * fi + i]) * static_cast<Acc>(xv[i]);
        out[o] = static_cast<T>(acc);
    }
    return Tensor<T>::from_op({fo}, std::move(out), {x, weight, bias}, [fi, fo](Node<T>& self) {
        const auto& xin = self.parents[0]->values;
        const auto& w = self.parents[1]->values;
        if (self.parents[0]->requires_grad) {
            std::vector<T> gx(fi);
            for (std::size_t i = 0; i < fi; ++i) {
                Acc acc = 0;
                for (std::size_t o = 0; o < fo; ++o) acc += static_cast<Acc>(w[o * fi + i]) * self.grad[o];
                gx[i] = static_cast<T>(acc);
            }
            self.parents[0]->accumulate_grad(gx);
        }
        if (self.parents[1]->requires_grad) {
            std::vector<T> gw(fo * fi);
            for (std::size_t o = 0; o < fo; ++o)
                for (std::size_t i = 0; i < fi; ++i) gw[o * fi + i] = self.grad[o] * xin[i];
            self.parents[1]->accumulate_grad(gw);
        }
        if (self.parents[2]->requires_grad) self.parents[2]->accumulate_grad(self.grad);
    });
}

/// Scalar view of element i.
template <typename T>
Tensor<T> element(const Tensor<T>& x, std::size_t i) {
    if (i >= x.size()) throw std::invalid_argument("element: index out of range");
    return Tensor<T>::from_op({}, {x.values()[i]}, {x}, [i](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        g[i] += self.grad[0];
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
    std::vector<T> out(x.values().begin(), x.values().end());
    for (T& v : out) v *= factor;
    return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [factor](Node<T>& self) {
        std::vector<T> g(self.grad);
        for (T& v : g) v *= factor;
        self.parents[0]->accumulate_grad(g);
    });
}

// ---------------------------------------------------------------------------------------------
// Power and loss

inline constexpr double kPowerFloorMw = 1e-12;

/// 10 log10(max(re^2 + im^2, floor)). Zero gradient while clamped.
template <typename T>
Tensor<T> power_db(const Tensor<T>& re, const Tensor<T>& im, double floor_mw = kPowerFloorMw) {
    if (re.size() != 1 || im.size() != 1) throw std::invalid_argument("power_db: expects scalar tensors");
    const Acc r = re.item(), i = im.item();
    const Acc p = r * r + i * i;
    const bool clamped = !(p > floor_mw);
    const Acc val = 10.0 * std::log10(clamped ? floor_mw : p);
    return Tensor<T>::from_op({}, {static_cast<T>(val)}, {re, im}, [r, i, p, clamped](Node<T>& self) {
        if (clamped) return;
        const Acc k = 10.0 / std::numbers::ln10 * 2.0 / p * static_cast<Acc>(self.grad[0]);
        if (self.parents[0]->requires_grad) self.parents[0]->ensure_grad()[0] += static_cast<T>(k * r);
        if (self.parents[1]->requires_grad) self.parents[1]->ensure_grad()[0] += static_cast<T>(k * i);
    });
}

/// (1/B) sum (x_i - target_i)^2 over scalar tensors.
template <typename T>
Tensor<T> mean_squared_error(std::span<const Tensor<T>> xs, std::span<const double> targets) {
    if (xs.empty() || xs.size() != targets.size()) {
        throw std::invalid_argument("mean_squared_error: batch must be non-empty and match targets");
    }
    const std::size_t b = xs.size();
    std::vector<Acc> resid(b);
    Acc acc = 0;
    for (std::size_t k = 0; k < b; ++k) {
        if (xs[k].size() != 1) throw std::invalid_argument("mean_squared_error: expects scalar predictions");
        resid[k] = static_cast<Acc>(xs[k].item()) - targets[k];
        acc += resid[k] * resid[k];
    }
    std::vector<Tensor<T>> parents(xs.begin(), xs.end());
    return Tensor<T>::from_op({}, {static_cast<T>(acc / static_cast<Acc>(b))}, std::move(parents),
                              [resid = std::move(resid), b](Node<T>& self) {
                                  const Acc up = self.grad[0];
                                  for (std::size_t k = 0; k < b; ++k) {
                                      auto& p = *self.parents[k];
                                      if (!p.requires_grad) continue;
                                      p.ensure_grad()[0] += static_cast<T>(2.0 * resid[k] / static_cast<Acc>(b) * up);
                                  }
                              });
}

/// Mean squared error between predicted and true CW power in dB. Each prediction is a
/// [2] tensor (re, im) in sqrt(mW).
template <typename T>
Tensor<T> mse_db_loss(std::span<const Tensor<T>> pred_gains, std::span<const double> true_dbm,
                      double floor_mw = kPowerFloorMw) {
    if (pred_gains.empty()) throw std::invalid_argument("mse_db_loss: empty batch");
    if (pred_gains.size() != true_dbm.size()) throw std::invalid_argument("mse_db_loss: batch size mismatch");
    std::vector<Tensor<T>> powers;
    powers.reserve(pred_gains.size());
    for (const Tensor<T>& g : pred_gains) {
        if (g.size() != 2) throw std::invalid_argument("mse_db_loss: predictions must be (re, im) pairs");
        powers.push_back(power_db(element(g, 0), element(g, 1), floor_mw));
    }
    return mean_squared_error<T>(powers, true_dbm);
}

}  // namespace cwpower::ag
