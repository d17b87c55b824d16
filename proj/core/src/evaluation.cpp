#include "cfo/evaluation.hpp"

#include "cfo/error.hpp"

namespace cfo::est {

MetricsReport evaluate_estimator(const data::DatasetView& view, const FrameEstimator& estimator,
                                 const std::string& method, bool by_modulation) {
    if (view.empty()) fail(ErrorKind::Length, "evaluate_estimator: empty dataset");
    std::vector<double> estimates(view.size());
    for (std::size_t k = 0; k < view.size(); ++k) estimates[k] = estimator(view[k].frame);
    return mse_by_snr(view, estimates, method, by_modulation);
}

MetricsReport evaluate_estimator(const data::DatasetView& view, const EstimatorSpec& spec, bool by_modulation) {
    return evaluate_estimator(
        view, [&](const IQFrame& f) { return estimate(f, spec).cfo_hat; }, spec.name(), by_modulation);
}

}  // namespace cfo::est
