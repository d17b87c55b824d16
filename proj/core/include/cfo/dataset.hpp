#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfo/nn/layers.hpp"
#include "cfo/nn/tensor.hpp"
#include "cfo/waveform.hpp"

namespace cfo::data {

enum class CfoUnit : std::uint8_t {
    CyclesPerSample,
    CyclesPerSymbol,  // range is divided by the oversampling ratio before drawing
};

/// Evenly spaced grid from `lo` to `hi` inclusive.
std::vector<double> arithmetic_grid(double lo, double hi, double step);

struct DatasetSpec {
    std::vector<Modulation> modulations{Modulation::Bpsk};
    std::vector<double> snr_grid_db = arithmetic_grid(-20.0, 30.0, 2.0);
    std::size_t frames_per_cell = 1;
    std::size_t length = 1024;
    int oversampling = 8;
    Channel channel = Channel::Awgn;
    double cfo_min = -0.2;
    double cfo_max = 0.2;
    CfoUnit cfo_unit = CfoUnit::CyclesPerSample;
    double rolloff_min = 0.2;
    double rolloff_max = 0.7;
    std::uint64_t master_seed = 0;

    /// Throws Validation listing every offending field.
    void validate() const;
    std::size_t cell_count() const noexcept { return modulations.size() * snr_grid_db.size(); }
    std::size_t total_records() const noexcept { return cell_count() * frames_per_cell; }
    /// Canonical JSON text; the sidecar payload.
    std::string to_json() const;
    static DatasetSpec from_json(const std::string& text);
    /// Exact integer below 2^53 derived from the master seed and canonical spec text.
    double header_digest() const;
};

/// One labeled burst. All real-valued fields hold float-representable values so
/// the 32-bit container round-trips them exactly.
struct FrameRecord {
    IQFrame frame;
    double cfo = 0.0;  // cycles per sample
    double snr_db = 0.0;
    Modulation modulation = Modulation::Bpsk;
    Channel channel = Channel::Awgn;
    double rolloff = 0.0;
    int oversampling = 0;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

using Dataset = std::vector<FrameRecord>;

/// Record k of cell c is drawn from a stream seeded by (master_seed, c, k), so the
/// result is identical for any thread count. `threads == 0` reads CFO_THREADS
/// (default 1).
Dataset generate(const DatasetSpec& spec, unsigned threads = 0);

/// Parses the CFO_THREADS environment variable; 1 when unset or malformed.
unsigned default_thread_count();

struct DatasetHeader {
    std::uint16_t version = 1;
    std::uint32_t record_count = 0;
    std::uint32_t length = 0;
    Channel channel = Channel::Awgn;
    std::uint16_t oversampling = 0;
    double digest = 0.0;
};

struct DatasetFile {
    DatasetHeader header;
    Dataset records;
};

inline constexpr std::size_t kDatasetHeaderBytes = 25;
std::size_t record_bytes(std::size_t length);

/// Writes the binary container. With a spec, also writes `<stem>.json` next to it.
void write_dataset(const std::filesystem::path& path, std::span<const FrameRecord> records,
                   const DatasetSpec* spec = nullptr);
/// Validates magic, version and declared sizes; Format errors name the byte offset.
DatasetFile read_dataset(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Ordered selection of records from a dataset that outlives the view.
class DatasetView {
public:
    DatasetView() = default;
    DatasetView(const Dataset& base) : base_(&base), index_(base.size()) {  // NOLINT: implicit on purpose
        for (std::size_t k = 0; k < index_.size(); ++k) index_[k] = k;
    }
    DatasetView(const Dataset& base, std::vector<std::size_t> index) : base_(&base), index_(std::move(index)) {}

    std::size_t size() const noexcept { return index_.size(); }
    bool empty() const noexcept { return index_.empty(); }
    const FrameRecord& operator[](std::size_t k) const { return (*base_)[index_[k]]; }
    const std::vector<std::size_t>& indices() const noexcept { return index_; }
    const Dataset* base() const noexcept { return base_; }

private:
    const Dataset* base_ = nullptr;
    std::vector<std::size_t> index_;
};

using RecordPredicate = std::function<bool(const FrameRecord&)>;

/// Stable-order selection; an empty result is returned as an empty view.
DatasetView filter_split(const DatasetView& view, const RecordPredicate& keep);

struct Batch {
    nn::Tensor<float> input;   // (B, 2, L)
    nn::Tensor<float> target;  // (B, 1), offsets in cycles per sample
    std::vector<std::size_t> positions;  // positions within the view
};

/// Packs view positions into a batch tensor.
Batch make_batch(const DatasetView& view, std::span<const std::size_t> positions);

/// Deterministic mini-batch stream. The visiting order is a pure function of
/// (shuffle_seed, epoch); no seed keeps view order. In TRAIN mode a trailing
/// single-record batch is merged into the previous batch so batch norm always
/// sees at least two frames.
class BatchIterator {
public:
    BatchIterator(const DatasetView& view, std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed,
                  std::uint64_t epoch, nn::Mode mode = nn::Mode::Train);

    std::optional<Batch> next();
    std::size_t batch_count() const noexcept { return bounds_.size() - 1; }
    const std::vector<std::size_t>& order() const noexcept { return order_; }

private:
    DatasetView view_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> bounds_;
    std::size_t cursor_ = 0;
};

/// Fisher-Yates permutation of [0, n) from (seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

}  // namespace cfo::data
