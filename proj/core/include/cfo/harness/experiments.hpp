#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfo/dataset.hpp"
#include "cfo/estimators.hpp"
#include "cfo/harness/config.hpp"
#include "cfo/metrics.hpp"
#include "cfo/nn/model.hpp"
#include "cfo/nn/train.hpp"

namespace cfo::harness {

using Logger = std::function<void(const std::string&)>;

inline constexpr std::string_view kNetworkMethod = "iq-resnet";

struct GenerateOutcome {
    std::size_t records = 0;
    std::uint64_t digest = 0;  // FNV-1a of the container file
};

/// Generates `spec` and writes the container plus its JSON sidecar.
GenerateOutcome generate_dataset_file(const data::DatasetSpec& spec, const std::filesystem::path& path,
                                      unsigned threads = 0);

/// Reads a container and rejects an empty one with Length.
data::Dataset load_records(const std::filesystem::path& path);

/// Per-SNR MSE of a classical estimator on a stored dataset.
MetricsReport baseline_report(const data::DatasetView& view, const est::EstimatorSpec& spec, bool by_modulation = false);

/// Per-SNR MSE of a trained network, BN in EVAL mode, method `iq-resnet`.
MetricsReport network_report(nn::Model<float>& model, const data::DatasetView& view, bool by_modulation = false);

/// `epoch,lr,train_loss,eval_mse`; an absent eval set is written as `nan`.
std::string history_csv(const std::vector<nn::EpochRecord>& history);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

struct TrainJob {
    std::filesystem::path train_path;
    std::optional<std::filesystem::path> eval_path;
    nn::ModelConfig model;  // input_length 0 means "take it from the data"
    nn::TrainConfig train;
    std::filesystem::path model_out;
    std::filesystem::path history_out;
};

struct TrainOutcome {
    std::vector<nn::EpochRecord> history;
    std::uint64_t model_digest = 0;
    bool diverged = false;
    std::string message;
};

/// Trains and writes model + history. On divergence the partial history is still
/// written, no model file is produced and `diverged` is set. A length mismatch
/// between data and model config throws Shape before any training step.
TrainOutcome run_training(const TrainJob& job, const Logger& log = {});

enum class SweepKind { Oversampling, Length, Channel, Adaptability };

std::string_view to_string(SweepKind kind) noexcept;
SweepKind parse_sweep_kind(std::string_view name);

/// Everything a sweep varies around.
struct SweepBase {
    data::DatasetSpec train_spec;
    std::size_t test_per_cell = 1;
    nn::ModelConfig model;
    nn::TrainConfig train;
    std::uint64_t seed = 0;

    /// Reads the recognised keys of an experiment config over library defaults.
    static SweepBase from_config(const ExperimentConfig& config);
};

struct SweepVariant {
    std::string name;
    data::DatasetSpec train_spec;
    data::DatasetSpec test_spec;
    nn::ModelConfig model;
    nn::TrainConfig train;
    std::string train_file;  // relative to the sweep directory
    std::string test_file;
};

/// Variant list with all seeds fixed; a pure function of (kind, base).
std::vector<SweepVariant> plan_sweep(SweepKind kind, const SweepBase& base);

/// Methods evaluated for every variant, in CSV emission order.
const std::vector<std::string>& sweep_methods();

struct VariantOutcome {
    std::string name;
    bool ok = false;
    std::string error;
    std::string train_digest;
    std::string test_digest;
    std::string model_digest;
    std::string model_file;
    std::string history_file;
    std::map<std::string, std::string> csv_files;  // method -> relative path
};

struct SweepOutcome {
    std::vector<VariantOutcome> variants;
    std::filesystem::path manifest;
    bool all_ok() const;
};

/// Materialises missing datasets, runs baselines and train/eval per variant and
/// writes `manifest.json`. A failing variant is recorded and the rest continue.
SweepOutcome run_sweep(SweepKind kind, const SweepBase& base, const std::filesystem::path& out_dir,
                       const Logger& log = {});

}  // namespace cfo::harness
