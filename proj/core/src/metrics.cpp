#include "cfo/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "cfo/error.hpp"

namespace cfo {

void MetricsReport::sort() {
    std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
        if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
        return a.method < b.method;
    });
}

void MetricsReport::validate() const {
    std::set<std::pair<double, std::string>> seen;
    for (const auto& r : rows) {
        if (!seen.emplace(r.snr_db, r.method).second)
            fail(ErrorKind::Validation, "duplicate metrics row (" + format_real(r.snr_db) + ", " + r.method + ")");
        if (!(r.mse >= 0.0)) fail(ErrorKind::Validation, "negative or NaN mse for method " + r.method);
        if (r.count < 1) fail(ErrorKind::Validation, "metrics row with zero count");
    }
}

void MetricsReport::append(const MetricsReport& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    for (const auto& [k, v] : other.metadata) metadata.emplace(k, v);
}

std::string format_real(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string to_csv(const MetricsReport& report) {
    std::string out = "snr_db,method,mse,count\n";
    for (const auto& r : report.rows) {
        out += format_real(r.snr_db);
        out += ',';
        out += r.method;
        out += ',';
        out += format_real(r.mse);
        out += ',';
        out += std::to_string(r.count);
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        parts.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line_no) {
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        fail(ErrorKind::Format, "csv line " + std::to_string(line_no) + ": bad number '" + std::string(text) + "'");
    return value;
}

}  // namespace

MetricsReport parse_csv(std::string_view text) {
    MetricsReport report;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "snr_db,method,mse,count")
                fail(ErrorKind::Format, "csv header must be 'snr_db,method,mse,count', got '" + std::string(line) + "'");
            header_seen = true;
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != 4)
            fail(ErrorKind::Format, "csv line " + std::to_string(line_no) + ": expected 4 columns, got " +
                                        std::to_string(cols.size()));
        report.rows.push_back({parse_number<double>(cols[0], line_no), std::string(cols[1]),
                               parse_number<double>(cols[2], line_no), parse_number<std::size_t>(cols[3], line_no)});
    }
    if (!header_seen) fail(ErrorKind::Format, "csv is empty");
    return report;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MetricsReport mse_by_snr(const data::DatasetView& view, std::span<const double> estimates, const std::string& method,
                         bool by_modulation) {
    if (estimates.size() != view.size()) fail(ErrorKind::Length, "mse_by_snr: estimate count does not match dataset");
    std::map<std::pair<double, std::string>, std::vector<double>> groups;
    for (std::size_t k = 0; k < view.size(); ++k) {
        const auto& r = view[k];
        std::string name = method;
        if (by_modulation) name += "/" + std::string(to_string(r.modulation));
        const double d = r.cfo - estimates[k];
        groups[{r.snr_db, name}].push_back(d * d);
    }
    MetricsReport report;
    for (const auto& [key, errs] : groups) {
        if (errs.empty()) continue;
        report.rows.push_back({key.first, key.second, pairwise_sum(errs) / static_cast<double>(errs.size()), errs.size()});
    }
    report.sort();
    return report;
}

}  // namespace cfo
