#include "cfo/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "cfo/error.hpp"

namespace cfo::harness {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(std::span<const MetricsReport> reports, const PlotOptions& options) {
    MetricsReport merged;
    for (const auto& r : reports) merged.append(r);
    if (merged.rows.empty()) fail(ErrorKind::Format, "plot: no metrics rows to draw");
    merged.validate();
    merged.sort();

    std::map<std::string, std::vector<std::pair<double, double>>> series;
    std::set<double> snrs;
    double min_positive = INFINITY;
    for (const auto& row : merged.rows) {
        series[row.method].emplace_back(row.snr_db, row.mse);
        snrs.insert(row.snr_db);
        if (row.mse > 0.0) min_positive = std::min(min_positive, row.mse);
    }
    // Exact zeros (noiseless fixtures) sit one decade below the smallest positive value.
    const double zero_level = std::isfinite(min_positive) ? min_positive / 10.0 : 1e-30;
    auto ly = [&](double mse) { return std::log10(std::max(mse, zero_level)); };

    double x_lo = *snrs.begin(), x_hi = *snrs.rbegin();
    if (x_hi == x_lo) {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    double y_lo = INFINITY, y_hi = -INFINITY;
    for (const auto& row : merged.rows) {
        y_lo = std::min(y_lo, ly(row.mse));
        y_hi = std::max(y_hi, ly(row.mse));
    }
    y_lo = std::floor(y_lo);
    y_hi = std::ceil(y_hi);
    if (y_hi == y_lo) y_hi += 1.0;

    const double left = 80, right = 170, top = 40, bottom = 50;
    const double pw = options.width - left - right;
    const double ph = options.height - top - bottom;
    auto px = [&](double snr) { return left + (snr - x_lo) / (x_hi - x_lo) * pw; };
    auto py = [&](double mse) { return top + (y_hi - ly(mse)) / (y_hi - y_lo) * ph; };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(options.width) + "\" height=\"" +
           std::to_string(options.height) + "\" viewBox=\"0 0 " + std::to_string(options.width) + " " +
           std::to_string(options.height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           escape(options.title) + "</text>\n";
    svg += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) + "\" height=\"" +
           fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int e = static_cast<int>(y_lo); e <= static_cast<int>(y_hi); ++e) {
        const double y = top + (y_hi - e) / (y_hi - y_lo) * ph;
        svg += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left + pw) + "\" y2=\"" +
               fixed(y) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(y + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">1e" + std::to_string(e) + "</text>\n";
    }
    const std::size_t stride = snrs.size() > 13 ? 2 : 1;
    std::size_t tick = 0;
    for (double s : snrs) {
        if (tick++ % stride != 0) continue;
        svg += "<text x=\"" + fixed(px(s)) + "\" y=\"" + fixed(top + ph + 16) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + format_real(s) + "</text>\n";
    }
    svg += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(options.height - 10.0) +
           "\" text-anchor=\"middle\" font-size=\"12\">SNR (dB)</text>\n";
    svg += "<text x=\"18\" y=\"" + fixed(top + ph / 2) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 " +
           fixed(top + ph / 2) + ")\">MSE</text>\n";

    std::size_t k = 0;
    for (const auto& [method, pts] : series) {
        const char* color = kPalette[k % std::size(kPalette)];
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) svg += ' ';
            svg += fixed(px(pts[i].first)) + "," + fixed(py(pts[i].second));
        }
        svg += "\"/>\n";
        const double ly0 = top + 14 + 18.0 * static_cast<double>(k);
        svg += "<line x1=\"" + fixed(left + pw + 12) + "\" y1=\"" + fixed(ly0) + "\" x2=\"" + fixed(left + pw + 36) +
               "\" y2=\"" + fixed(ly0) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fixed(left + pw + 42) + "\" y=\"" + fixed(ly0 + 4) + "\" font-size=\"12\">" +
               escape(method) + "</text>\n";
        ++k;
    }
    svg += "</svg>\n";
    return svg;
}

void write_svg(const std::filesystem::path& path, std::span<const MetricsReport> reports, const PlotOptions& options) {
    const std::string svg = render_svg(reports, options);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << svg;
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace cfo::harness
