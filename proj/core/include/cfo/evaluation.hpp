#pragma once

#include <functional>
#include <string>

#include "cfo/dataset.hpp"
#include "cfo/estimators.hpp"
#include "cfo/metrics.hpp"

namespace cfo::est {

using FrameEstimator = std::function<double(const IQFrame&)>;

/// Per-SNR MSE of an arbitrary per-frame estimator over a labeled collection.
/// Throws Length on an empty view.
MetricsReport evaluate_estimator(const data::DatasetView& view, const FrameEstimator& estimator,
                                 const std::string& method, bool by_modulation = false);

MetricsReport evaluate_estimator(const data::DatasetView& view, const EstimatorSpec& spec, bool by_modulation = false);

}  // namespace cfo::est
