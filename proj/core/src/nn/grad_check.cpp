#include "cfo/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cfo/rng.hpp"

namespace cfo::nn {

namespace {

// Sign pattern of every ReLU input; a finite-difference probe is only valid if
// it leaves the pattern unchanged.
std::vector<bool> relu_pattern(const ForwardCache<double>& cache) {
    std::vector<bool> bits;
    for (const auto& b : cache.blocks) {
        for (double v : b.pre_relu1.values()) bits.push_back(v > 0.0);
        for (double v : b.pre_relu_out.values()) bits.push_back(v > 0.0);
    }
    return bits;
}

}  // namespace

GradCheckReport grad_check(const GradCheckOptions& options) {
    Rng rng(derive_seed({options.seed, 0x4752414Dull}));
    Model<double> model = make_model<double>(options.config, derive_seed({options.seed, 1}));
    // Non-trivial affine BN parameters and biases so every path carries gradient.
    for_each_tensor(model, [&](const std::string&, Tensor<double>& t, ParamKind kind) {
        if (kind == ParamKind::BnGamma)
            for (auto& v : t.values()) v = rng.uniform(0.5, 1.5);
        else if (kind == ParamKind::BnBeta || kind == ParamKind::ConvBias || kind == ParamKind::HeadBias)
            for (auto& v : t.values()) v = rng.uniform(-0.3, 0.3);
    });

    const std::size_t len = options.config.input_length;
    Tensor<double> input({options.batch, ModelConfig::kInputChannels, len});
    for (auto& v : input.values()) v = rng.normal();
    Tensor<double> target({options.batch, 1});
    for (auto& v : target.values()) v = rng.uniform(-0.2, 0.2);

    ForwardCache<double> cache;
    const auto pred = model_forward(model, input, Mode::Train, &cache);
    const auto loss = mse_loss(pred, target);
    const auto grads = model_backward(model, cache, loss.grad);
    const auto base_pattern = relu_pattern(cache);

    auto probe = [&](bool& kink) {
        ForwardCache<double> c;
        const double l = mse_loss(model_forward(model, input, Mode::Train, &c), target).loss;
        if (relu_pattern(c) != base_pattern) kink = true;
        return l;
    };

    std::vector<std::pair<Tensor<double>*, const Tensor<double>*>> slots;
    std::vector<std::string> names;
    std::vector<ParamKind> kinds;
    for_each_tensor(model, [&](const std::string& name, Tensor<double>& t, ParamKind kind) {
        if (!is_learnable(kind)) return;
        slots.push_back({&t, nullptr});
        names.push_back(name);
        kinds.push_back(kind);
    });
    std::size_t k = 0;
    for_each_tensor(grads, [&](const std::string&, const Tensor<double>& t, ParamKind kind) {
        if (is_learnable(kind)) slots[k++].second = &t;
    });

    GradCheckReport report;
    // Oversample per tensor; small tensors are exhausted early.
    const std::size_t per_tensor = 2 * ((options.min_coordinates + slots.size() - 1) / slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) {
        auto& param = *slots[s].first;
        const auto& grad = *slots[s].second;
        const std::size_t want = std::min(per_tensor, param.size());
        std::size_t checked = 0, attempts = 0;
        while (checked < want && attempts < 8 * want + 16) {
            ++attempts;
            const std::size_t idx = param.size() <= want ? (attempts - 1) % param.size() : rng.below(param.size());
            const double saved = param[idx];
            bool kink = false;
            param[idx] = saved + options.eps;
            const double up = probe(kink);
            param[idx] = saved - options.eps;
            const double down = probe(kink);
            param[idx] = saved;
            if (kink) {
                ++report.kink_skips;
                if (param.size() <= want && attempts >= 2 * param.size()) break;
                continue;
            }
            const double numeric = (up - down) / (2.0 * options.eps);
            const double analytic = grad[idx];
            const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), options.abs_floor);
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_tensor = names[s] + "[" + std::to_string(idx) + "]";
            }
            ++checked;
            ++report.coordinates;
            ++report.per_kind[kinds[s]];
        }
    }
    return report;
}

}  // namespace cfo::nn
