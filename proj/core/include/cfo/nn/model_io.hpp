#pragma once

#include <filesystem>

#include "cfo/nn/model.hpp"

namespace cfo::nn {

/// Writes the CFON container: magic, u16 version, config block, then every
/// tensor as little-endian f32 in `for_each_tensor` order. The stem width is
/// not stored; it must equal the first block's channel count.
void save_model(const Model<float>& model, const std::filesystem::path& path);

/// Reads a CFON file. Format errors name the offending field or byte offset;
/// nothing is returned on failure.
Model<float> load_model(const std::filesystem::path& path);

/// As above, and additionally throws Shape naming the first layer whose
/// geometry differs from `expected`.
Model<float> load_model(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace cfo::nn
