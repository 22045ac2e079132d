#pragma once

// Mini-batch training of the CW power regressors: seeded shuffling, dB-domain MSE, AdamW, and
// best-validation checkpoint selection.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cwpower/autograd/adamw.hpp"
#include "cwpower/autograd/ops.hpp"
#include "cwpower/dataset.hpp"
#include "cwpower/errors.hpp"
#include "cwpower/model.hpp"
#include "cwpower/rng.hpp"

namespace cwpower {

struct TrainConfig {
    std::uint32_t epochs = 200;
    std::uint32_t batch_size = 16;
    double lr = 2e-4;
    double weight_decay = 1e-2;
    std::uint64_t seed = 0;
    std::optional<std::uint32_t> early_stop_patience;
    Variant variant = Variant::dc_cnn;
    bool desk_scale = false;

    static TrainConfig paper(Variant v = Variant::dc_cnn) {
        TrainConfig c;
        c.variant = v;
        return c;
    }
    static TrainConfig desk(Variant v = Variant::dc_cnn) {
        TrainConfig c;
        c.variant = v;
        c.epochs = 50;
        c.desk_scale = true;
        return c;
    }

    void validate() const {
        if (epochs < 1 || batch_size < 1) throw std::invalid_argument("train config: epochs and batch size must be >= 1");
        if (!(lr > 0.0) || !std::isfinite(lr) || !(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
            throw std::invalid_argument("train config: learning rate must be positive, weight decay non-negative");
        }
    }
};

struct TrainResult {
    ModelWeights<float> weights;  // best-validation weights; meta carries the full history
    std::vector<EpochLoss> history;
    std::uint32_t best_epoch = 0;
    double best_val_db2 = std::numeric_limits<double>::infinity();
};

using EpochCallback = std::function<void(std::uint32_t epoch, const EpochLoss&)>;

inline std::uint64_t init_seed_for(std::uint64_t train_seed) { return derive_seed(train_seed, 0xA11CE); }

/// Loss graph for one mini-batch; the caller runs backward on it.
template <typename T>
ag::Tensor<T> batch_loss(const ModelWeights<T>& w, const Corpus& corpus, std::span<const std::size_t> batch) {
    const bool dc = expects_dc_representation(w.spec.variant);
    std::vector<ag::Tensor<T>> preds;
    std::vector<double> targets;
    preds.reserve(batch.size());
    targets.reserve(batch.size());
    for (std::size_t idx : batch) {
        const CorpusRecord& r = corpus.records.at(idx);
        preds.push_back(forward(w, burst_to_input<T>(r.representation(dc), w.spec.input_scale)));
        targets.push_back(r.label.cw_rx_dbm);
    }
    return ag::mse_db_loss<T>(preds, targets);
}

/// Mean squared dB error over a record set, forward only.
template <typename T>
double evaluate_loss(ModelWeights<T>& w, const Corpus& corpus, std::span<const std::size_t> indices) {
    if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
    w.set_requires_grad(false);
    const bool dc = expects_dc_representation(w.spec.variant);
    double acc = 0.0;
    for (std::size_t idx : indices) {
        const CorpusRecord& r = corpus.records.at(idx);
        const GainEstimate g = predict_gain(w, r.representation(dc));
        const double p = 10.0 * std::log10(std::max(g.power_mw, ag::kPowerFloorMw));
        acc += (p - r.label.cw_rx_dbm) * (p - r.label.cw_rx_dbm);
    }
    w.set_requires_grad(true);
    return acc / static_cast<double>(indices.size());
}

inline TrainResult train(const Corpus& corpus, const ModelSpec& spec, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
    cfg.validate();
    spec.validate();
    if (spec.variant != cfg.variant) throw std::invalid_argument("train: model spec and train config disagree on variant");
    if (spec.input_length != corpus.rf.burst_len) {
        throw std::invalid_argument("train: corpus burst length does not match the model input length");
    }
    std::vector<std::size_t> train_idx = corpus.indices(Split::train);
    const std::vector<std::size_t> val_idx = corpus.indices(Split::val);
    if (train_idx.empty()) throw std::invalid_argument("train: corpus has no training split");

    ModelWeights<float> w = build_model<float>(spec, init_seed_for(cfg.seed));
    w.meta.seed = cfg.seed;
    const std::vector<std::string> names = w.names();
    std::vector<ag::Tensor<float>> params;
    for (const auto& p : w.params) params.push_back(p.tensor);

    ag::AdamWState opt;
    opt.config.lr = cfg.lr;
    opt.config.weight_decay = cfg.weight_decay;

    TrainResult result;
    result.weights = w.clone();
    std::uint32_t since_best = 0;
    for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, epoch, 0xB47C4));
        rng.shuffle(std::span<std::size_t>(train_idx));

        double epoch_acc = 0.0;
        for (std::size_t start = 0, b = 0; start < train_idx.size(); start += cfg.batch_size, ++b) {
            const std::size_t len = std::min<std::size_t>(cfg.batch_size, train_idx.size() - start);
            const std::span<const std::size_t> batch(train_idx.data() + start, len);
            w.zero_grad();
            const ag::Tensor<float> loss = batch_loss(w, corpus, batch);
            const double value = loss.item();
            if (!std::isfinite(value)) {
                throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                     std::to_string(b + 1));
            }
            ag::backward(loss);
            ag::adamw_step<float>(params, opt, names);
            epoch_acc += value * static_cast<double>(len);
        }

        EpochLoss e;
        e.train_db2 = epoch_acc / static_cast<double>(train_idx.size());
        e.val_db2 = val_idx.empty() ? e.train_db2 : evaluate_loss(w, corpus, val_idx);
        if (!std::isfinite(e.val_db2)) {
            throw NumericalError("train: non-finite validation loss at epoch " + std::to_string(epoch));
        }
        result.history.push_back(e);
        if (on_epoch) on_epoch(epoch, e);

        if (e.val_db2 < result.best_val_db2) {
            result.best_val_db2 = e.val_db2;
            result.best_epoch = epoch;
            result.weights = w.clone();
            since_best = 0;
        } else if (cfg.early_stop_patience && ++since_best > *cfg.early_stop_patience) {
            break;
        }
    }
    result.weights.meta.epoch = result.best_epoch;
    result.weights.meta.seed = cfg.seed;
    result.weights.meta.loss_history = result.history;
    return result;
}

}  // namespace cwpower
