#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cfo/dataset.hpp"
#include "cfo/error.hpp"
#include "cfo/nn/model.hpp"

namespace cfo::nn {

struct TrainConfig {
    int epochs = 20;
    double base_lr = 0.02;
    std::vector<int> lr_drop_epochs{5, 10};
    double lr_drop_factor = 0.1;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;

    void validate() const;
    /// Learning rate in effect during `epoch` (1-indexed): base_lr times the
    /// drop factor once per drop epoch <= epoch.
    double lr_for_epoch(int epoch) const;
};

struct EpochRecord {
    int epoch = 0;  // 1-indexed
    double lr = 0.0;
    double train_loss = 0.0;  // size-weighted mean of batch losses
    double eval_mse = 0.0;    // NaN when no eval set was given
    std::size_t steps = 0;
};

/// Thrown when the loss or a gradient becomes non-finite; carries the epochs
/// completed so far plus the partial one.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, std::vector<EpochRecord> history)
        : Error(ErrorKind::Divergence, what), history_(std::move(history)) {}
    const std::vector<EpochRecord>& history() const noexcept { return history_; }

private:
    std::vector<EpochRecord> history_;
};

struct TrainResult {
    Model<float> model;
    std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Single-threaded, bit-deterministic given (config, data, seed). The model is
/// initialised from a stream derived from `train_config.seed`, and each epoch
/// reshuffles with (seed, epoch).
TrainResult train(const ModelConfig& model_config, const data::DatasetView& train_data,
                  const data::DatasetView* eval_data, const TrainConfig& train_config,
                  const EpochCallback& on_epoch = {});

/// EVAL-mode predictions in view order.
std::vector<double> predict(Model<float>& model, const data::DatasetView& view, std::size_t batch_size = 256);

/// Mean squared error of EVAL-mode predictions against labels.
double evaluate_mse(Model<float>& model, const data::DatasetView& view, std::size_t batch_size = 256);

}  // namespace cfo::nn
