#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfo/dataset.hpp"

namespace cfo {

struct MetricsRow {
    double snr_db = 0.0;
    std::string method;
    double mse = 0.0;  // (cycles/sample)^2
    std::size_t count = 0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Per-(SNR, method) mean squared errors. Metadata travels in manifests, not in the CSV.
struct MetricsReport {
    std::vector<MetricsRow> rows;
    std::map<std::string, std::string> metadata;

    /// Ascending SNR, then method name.
    void sort();
    /// Throws Validation on duplicate (snr, method), negative mse or zero count.
    void validate() const;
    void append(const MetricsReport& other);
};

/// Shortest decimal text that reads back to the same double.
std::string format_real(double value);

/// `snr_db,method,mse,count` header, one LF-terminated line per row.
std::string to_csv(const MetricsReport& report);
MetricsReport parse_csv(std::string_view text);

/// Order-independent-by-construction summation (pairwise, fixed split points).
double pairwise_sum(std::span<const double> values);

/// Groups `estimates[k]` against `view[k].cfo` by SNR (and optionally
/// modulation, as "method/modulation"), returning mean squared errors.
MetricsReport mse_by_snr(const data::DatasetView& view, std::span<const double> estimates, const std::string& method,
                         bool by_modulation = false);

}  // namespace cfo
