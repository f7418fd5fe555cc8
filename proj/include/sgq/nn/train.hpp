#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "sgq/nn/model.hpp"

namespace sgq::nn {

struct TrainConfig {
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 10;
    double lr = 1e-4;
    std::uint64_t seed = 0;
};

struct EpochRow {
    int epoch = 0;  // 1-based
    double train_mse = 0.0;
    double val_mse = 0.0;
    bool best = false;
};

struct TrainHistory {
    std::vector<EpochRow> rows;
    int best_epoch = 0;
    double best_val_mse = 0.0;
};

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

// Shared mini-batch MSE/Adam/early-stopping protocol. Model must expose
// params(), input_elems(), forward(x, n, Cache&) and backward(...) -> loss.
// Epochs iterate seeded shuffles of the train set; the best-validation
// parameter vector is restored into the model on return.
template <class Model, class T>
TrainHistory train_model(Model& model, const std::vector<T>& x_train, const std::vector<double>& y_train,
                         const std::vector<T>& x_val, const std::vector<double>& y_val, const TrainConfig& cfg) {
    const std::size_t row = model.input_elems();
    const std::size_t n_train = y_train.size();
    const std::size_t n_val = y_val.size();
    if (n_train == 0 || n_val == 0) throw std::invalid_argument("train/val sets must be non-empty");
    if (x_train.size() != n_train * row || x_val.size() != n_val * row)
        throw std::invalid_argument("input tensor size does not match target count");

    const int bs = cfg.batch_size;
    typename Model::Cache cache;
    std::vector<T> grads;
    std::vector<T> batch_x(static_cast<std::size_t>(bs) * row);
    std::vector<double> batch_y(static_cast<std::size_t>(bs));
    Adam<T> adam(cfg.lr);

    auto eval_mse = [&](const std::vector<T>& x, const std::vector<double>& y) {
        double sum = 0.0;
        for (std::size_t start = 0; start < y.size(); start += static_cast<std::size_t>(bs)) {
            std::size_t n = std::min(static_cast<std::size_t>(bs), y.size() - start);
            model.forward(x.data() + start * row, static_cast<int>(n), cache);
            for (std::size_t i = 0; i < n; ++i) {
                double r = static_cast<double>(cache.pred[i]) - y[start + i];
                sum += r * r;
            }
        }
        return sum / static_cast<double>(y.size());
    };

    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    TrainHistory history;
    std::vector<T> best_params = model.params();
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng rng(sub_seed(cfg.seed, "train/epoch/" + std::to_string(epoch)));
        rng.shuffle(order);

        double train_sum = 0.0;
        for (std::size_t start = 0; start < n_train; start += static_cast<std::size_t>(bs)) {
            std::size_t n = std::min(static_cast<std::size_t>(bs), n_train - start);
            for (std::size_t i = 0; i < n; ++i) {
                std::copy_n(x_train.data() + order[start + i] * row, row, batch_x.data() + i * row);
                batch_y[i] = y_train[order[start + i]];
            }
            model.forward(batch_x.data(), static_cast<int>(n), cache);
            double loss = model.backward(batch_x.data(), batch_y.data(), static_cast<int>(n), cache, grads);
            adam.step(model.params(), grads);
            train_sum += loss * static_cast<double>(n);
        }
        double train_mse = train_sum / static_cast<double>(n_train);
        double val_mse = eval_mse(x_val, y_val);

        bool improved = val_mse < best_val;
        if (improved) {
            best_val = val_mse;
            best_params = model.params();
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
        }
        history.rows.push_back({epoch, train_mse, val_mse, improved});
        if (since_best > cfg.patience) break;
    }

    model.params() = best_params;
    history.best_val_mse = best_val;
    return history;
}

}  // namespace sgq::nn
