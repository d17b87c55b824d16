#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cfo/nn/model.hpp"

namespace cfo::nn {

struct GradCheckOptions {
    ModelConfig config = ModelConfig::tiny();
    std::uint64_t seed = 1;
    double eps = 1e-4;
    std::size_t batch = 4;
    std::size_t min_coordinates = 200;
    /// Denominator floor. Conv biases ahead of BN have an exactly zero gradient,
    /// so their central differences are pure roundoff of order 1e-12.
    double abs_floor = 1e-6;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::size_t coordinates = 0;
    /// Coordinates skipped because the +-eps probe flipped a ReLU.
    std::size_t kink_skips = 0;
    std::map<ParamKind, std::size_t> per_kind;
};

/// Relative error |a - n| / max(|a| + |n|, abs_floor) between analytic and central
/// finite-difference gradients of the TRAIN-mode MSE on a random double-precision
/// model and batch; coordinates are spread over every learnable tensor.
GradCheckReport grad_check(const GradCheckOptions& options = {});

}  // namespace cfo::nn
