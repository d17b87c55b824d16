#include "cfo/nn/adam.hpp"

#include <cmath>
#include <vector>

#include "cfo/error.hpp"

namespace cfo::nn {

template <typename T>
void adam_step(Model<T>& params, const Model<T>& grads, AdamState<T>& state, double lr) {
    if (!(lr > 0.0)) fail(ErrorKind::Domain, "adam_step: learning rate must be positive");

    struct Slot {
        Tensor<T>* p;
        const Tensor<T>* g;
        Tensor<T>* m;
        Tensor<T>* v;
    };
    std::vector<Slot> slots;
    for_each_tensor(params, [&](const std::string&, Tensor<T>& t, ParamKind kind) {
        if (is_learnable(kind)) slots.push_back({&t, nullptr, nullptr, nullptr});
    });
    std::size_t k = 0;
    for_each_tensor(grads, [&](const std::string& name, const Tensor<T>& t, ParamKind kind) {
        if (!is_learnable(kind)) return;
        if (k >= slots.size() || t.shape() != slots[k].p->shape())
            fail(ErrorKind::Shape, "adam_step: gradient structure mismatch at " + name);
        if (!t.all_finite()) fail(ErrorKind::Divergence, "adam_step: non-finite gradient in " + name);
        slots[k++].g = &t;
    });
    if (k != slots.size()) fail(ErrorKind::Shape, "adam_step: gradient structure mismatch");
    k = 0;
    for_each_tensor(state.first_moment, [&](const std::string&, Tensor<T>& t, ParamKind kind) {
        if (is_learnable(kind)) slots.at(k++).m = &t;
    });
    k = 0;
    for_each_tensor(state.second_moment, [&](const std::string&, Tensor<T>& t, ParamKind kind) {
        if (is_learnable(kind)) slots.at(k++).v = &t;
    });

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (auto& s : slots) {
        for (std::size_t i = 0; i < s.p->size(); ++i) {
            const double g = (*s.g)[i];
            const double m = state.beta1 * (*s.m)[i] + (1.0 - state.beta1) * g;
            const double v = state.beta2 * (*s.v)[i] + (1.0 - state.beta2) * g * g;
            (*s.m)[i] = static_cast<T>(m);
            (*s.v)[i] = static_cast<T>(v);
            const double update = lr * (m / c1) / (std::sqrt(v / c2) + state.eps);
            (*s.p)[i] = static_cast<T>((*s.p)[i] - update);
        }
    }
    ++params.version;
}

template void adam_step(Model<float>&, const Model<float>&, AdamState<float>&, double);
template void adam_step(Model<double>&, const Model<double>&, AdamState<double>&, double);

}  // namespace cfo::nn
