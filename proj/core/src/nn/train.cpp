#include "cfo/nn/train.hpp"

#include <cmath>
#include <limits>

#include "cfo/nn/adam.hpp"
#include "cfo/rng.hpp"

namespace cfo::nn {

void TrainConfig::validate() const {
    std::string bad;
    if (epochs < 1) bad += " epochs";
    if (!(base_lr > 0.0)) bad += " base_lr";
    if (!(lr_drop_factor > 0.0)) bad += " lr_drop_factor";
    if (batch_size < 1) bad += " batch_size";
    for (int e : lr_drop_epochs)
        if (e < 1 || e > epochs) bad += " lr_drop_epochs";
    if (!bad.empty()) fail(ErrorKind::Validation, "invalid train config:" + bad);
}

double TrainConfig::lr_for_epoch(int epoch) const {
    double lr = base_lr;
    for (int e : lr_drop_epochs)
        if (e <= epoch) lr *= lr_drop_factor;
    return lr;
}

std::vector<double> predict(Model<float>& model, const data::DatasetView& view, std::size_t batch_size) {
    std::vector<double> out;
    out.reserve(view.size());
    data::BatchIterator it(view, batch_size, std::nullopt, 0, Mode::Eval);
    while (auto batch = it.next()) {
        const auto pred = model_forward(model, batch->input, Mode::Eval);
        for (std::size_t k = 0; k < pred.size(); ++k) out.push_back(pred[k]);
    }
    return out;
}

double evaluate_mse(Model<float>& model, const data::DatasetView& view, std::size_t batch_size) {
    if (view.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto pred = predict(model, view, batch_size);
    double acc = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = view[k].cfo - pred[k];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

TrainResult train(const ModelConfig& model_config, const data::DatasetView& train_data,
                  const data::DatasetView* eval_data, const TrainConfig& tc, const EpochCallback& on_epoch) {
    model_config.validate();
    tc.validate();
    if (train_data.empty()) fail(ErrorKind::Length, "train: empty training set");
    for (const auto* view : {&train_data, eval_data}) {
        if (!view) continue;
        for (std::size_t k = 0; k < view->size(); ++k)
            if ((*view)[k].frame.size() != model_config.input_length && model_config.head == Head::Flatten)
                fail(ErrorKind::Shape, "train: frame length " + std::to_string((*view)[k].frame.size()) +
                                           " does not match model input length " +
                                           std::to_string(model_config.input_length));
    }

    TrainResult result{make_model<float>(model_config, derive_seed({tc.seed, 0x494E4954ull})), {}};
    auto& model = result.model;
    auto adam = AdamState<float>::fresh(model);
    const std::uint64_t shuffle_seed = derive_seed({tc.seed, 0x53485546ull});
    ForwardCache<float> cache;

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = tc.lr_for_epoch(epoch);
        rec.eval_mse = std::numeric_limits<double>::quiet_NaN();
        double loss_sum = 0.0;
        std::size_t seen = 0;

        data::BatchIterator it(train_data, tc.batch_size, shuffle_seed, static_cast<std::uint64_t>(epoch));
        while (auto batch = it.next()) {
            const auto pred = model_forward(model, batch->input, Mode::Train, &cache);
            auto loss = mse_loss(pred, batch->target);
            if (!std::isfinite(loss.loss)) {
                rec.train_loss = loss.loss;
                result.history.push_back(rec);
                throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                                           std::to_string(rec.steps + 1),
                                       result.history);
            }
            const auto grads = model_backward(model, cache, loss.grad);
            try {
                adam_step(model, grads, adam, rec.lr);
            } catch (const Error& e) {
                rec.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(seen, 1));
                result.history.push_back(rec);
                throw TrainingDiverged(e.what(), result.history);
            }
            ++rec.steps;
            loss_sum += loss.loss * static_cast<double>(pred.size());
            seen += pred.size();
        }
        rec.train_loss = loss_sum / static_cast<double>(seen);
        if (eval_data && !eval_data->empty()) rec.eval_mse = evaluate_mse(model, *eval_data);
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return result;
}

}  // namespace cfo::nn
