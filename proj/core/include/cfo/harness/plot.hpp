#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "cfo/metrics.hpp"

namespace cfo::harness {

struct PlotOptions {
    std::string title = "MSE vs SNR";
    int width = 720;
    int height = 480;
};

/// MSE-versus-SNR chart with a log10 y axis, one polyline per method and a
/// legend. Output depends only on the rows and options. Throws Format when the
/// merged input has no rows.
std::string render_svg(std::span<const MetricsReport> reports, const PlotOptions& options = {});

/// Renders first, then writes, so a failed render leaves no file behind.
void write_svg(const std::filesystem::path& path, std::span<const MetricsReport> reports,
               const PlotOptions& options = {});

}  // namespace cfo::harness
