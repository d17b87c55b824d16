#include "cfo/harness/experiments.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cfo/digest.hpp"
#include "cfo/error.hpp"
#include "cfo/evaluation.hpp"
#include "cfo/nn/model_io.hpp"
#include "cfo/rng.hpp"

namespace cfo::harness {

namespace fs = std::filesystem;

GenerateOutcome generate_dataset_file(const data::DatasetSpec& spec, const fs::path& path, unsigned threads) {
    const auto records = data::generate(spec, threads);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    data::write_dataset(path, records, &spec);
    return {records.size(), file_digest(path)};
}

data::Dataset load_records(const fs::path& path) {
    auto file = data::read_dataset(path);
    if (file.records.empty()) fail(ErrorKind::Length, "dataset " + path.string() + " has no records");
    return std::move(file.records);
}

MetricsReport baseline_report(const data::DatasetView& view, const est::EstimatorSpec& spec, bool by_modulation) {
    return est::evaluate_estimator(view, spec, by_modulation);
}

MetricsReport network_report(nn::Model<float>& model, const data::DatasetView& view, bool by_modulation) {
    if (view.empty()) fail(ErrorKind::Length, "evaluation: empty dataset");
    const auto pred = nn::predict(model, view);
    return mse_by_snr(view, pred, std::string(kNetworkMethod), by_modulation);
}

std::string history_csv(const std::vector<nn::EpochRecord>& history) {
    std::string out = "epoch,lr,train_loss,eval_mse\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + "," + format_real(r.lr) + "," + format_real(r.train_loss) + "," +
               format_real(r.eval_mse) + "\n";
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TrainOutcome run_training(const TrainJob& job, const Logger& log) {
    const auto train_set = load_records(job.train_path);
    std::optional<data::Dataset> eval_set;
    if (job.eval_path) eval_set = load_records(*job.eval_path);

    nn::ModelConfig mc = job.model;
    const std::size_t data_len = train_set.front().frame.size();
    if (mc.input_length == 0) mc.input_length = data_len;
    if (mc.input_length != data_len)
        fail(ErrorKind::Shape, "model input length " + std::to_string(mc.input_length) +
                                   " does not match training data length " + std::to_string(data_len));
    if (eval_set && eval_set->front().frame.size() != mc.input_length && mc.head == nn::Head::Flatten)
        fail(ErrorKind::Shape, "eval data length " + std::to_string(eval_set->front().frame.size()) +
                                   " does not match model input length " + std::to_string(mc.input_length));

    const data::DatasetView eval_view = eval_set ? data::DatasetView(*eval_set) : data::DatasetView();
    auto on_epoch = [&](const nn::EpochRecord& r) {
        if (log)
            log("epoch " + std::to_string(r.epoch) + " lr " + format_real(r.lr) + " train_loss " +
                format_real(r.train_loss) + " eval_mse " + format_real(r.eval_mse));
    };

    TrainOutcome out;
    try {
        auto result = nn::train(mc, train_set, eval_set ? &eval_view : nullptr, job.train, on_epoch);
        out.history = std::move(result.history);
        write_text(job.history_out, history_csv(out.history));
        if (job.model_out.has_parent_path()) fs::create_directories(job.model_out.parent_path());
        nn::save_model(result.model, job.model_out);
        out.model_digest = file_digest(job.model_out);
    } catch (const nn::TrainingDiverged& e) {
        out.history = e.history();
        out.diverged = true;
        out.message = e.what();
        write_text(job.history_out, history_csv(out.history));
    }
    return out;
}

std::string_view to_string(SweepKind kind) noexcept {
    switch (kind) {
        case SweepKind::Oversampling: return "oversampling";
        case SweepKind::Length: return "length";
        case SweepKind::Channel: return "channel";
        case SweepKind::Adaptability: return "adaptability";
    }
    return "?";
}

SweepKind parse_sweep_kind(std::string_view name) {
    for (auto k : {SweepKind::Oversampling, SweepKind::Length, SweepKind::Channel, SweepKind::Adaptability})
        if (name == to_string(k)) return k;
    fail(ErrorKind::Usage, "unknown sweep kind '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

SweepBase SweepBase::from_config(const ExperimentConfig& c) {
    SweepBase b;
    auto& s = b.train_spec;
    if (auto mods = c.get("mods")) {
        s.modulations.clear();
        for (const auto& m : split_list(*mods)) s.modulations.push_back(parse_modulation(m));
    }
    s.snr_grid_db = data::arithmetic_grid(c.get_real("snr_min", -20.0), c.get_real("snr_max", 30.0),
                                          c.get_real("snr_step", 2.0));
    s.frames_per_cell = static_cast<std::size_t>(c.get_int("per_cell", 100));
    s.length = static_cast<std::size_t>(c.get_int("len", 1024));
    s.oversampling = static_cast<int>(c.get_int("os", 8));
    s.channel = parse_channel(c.get_or("channel", "awgn"));
    s.cfo_min = c.get_real("cfo_min", -0.2);
    s.cfo_max = c.get_real("cfo_max", 0.2);
    const auto unit = c.get_or("cfo_unit", "sample");
    if (unit == "sample") s.cfo_unit = data::CfoUnit::CyclesPerSample;
    else if (unit == "symbol") s.cfo_unit = data::CfoUnit::CyclesPerSymbol;
    else fail(ErrorKind::Validation, "config key cfo_unit: expected sample or symbol, got '" + unit + "'");
    s.rolloff_min = c.get_real("rolloff_min", 0.2);
    s.rolloff_max = c.get_real("rolloff_max", 0.7);
    b.seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
    b.test_per_cell = static_cast<std::size_t>(c.get_int("test_per_cell", static_cast<long long>((s.frames_per_cell + 3) / 4)));

    const auto head = c.get_or("head", "flatten");
    if (head == "flatten") b.model.head = nn::Head::Flatten;
    else if (head == "pool") b.model.head = nn::Head::GlobalAvgPool;
    else fail(ErrorKind::Validation, "config key head: expected flatten or pool, got '" + head + "'");

    b.train.epochs = static_cast<int>(c.get_int("epochs", b.train.epochs));
    b.train.batch_size = static_cast<std::size_t>(c.get_int("batch", static_cast<long long>(b.train.batch_size)));
    b.train.base_lr = c.get_real("lr", b.train.base_lr);
    b.train.lr_drop_factor = c.get_real("lr_factor", b.train.lr_drop_factor);
    if (auto drops = c.get("lr_drops")) {
        b.train.lr_drop_epochs.clear();
        for (const auto& d : split_list(*drops)) {
            ExperimentConfig tmp;
            tmp.set("epochs", d);
            b.train.lr_drop_epochs.push_back(static_cast<int>(tmp.get_int("epochs", 0)));
        }
    } else {
        std::erase_if(b.train.lr_drop_epochs, [&](int e) { return e > b.train.epochs; });
    }
    return b;
}

std::vector<SweepVariant> plan_sweep(SweepKind kind, const SweepBase& base) {
    struct Change {
        std::string name;
        std::function<void(data::DatasetSpec&)> apply;
    };
    std::vector<Change> changes;
    switch (kind) {
        case SweepKind::Oversampling:
            for (int r : {4, 8, 16})
                changes.push_back({"os" + std::to_string(r), [r](data::DatasetSpec& s) { s.oversampling = r; }});
            break;
        case SweepKind::Length:
            for (std::size_t l : {512u, 1024u, 2048u})
                changes.push_back({"len" + std::to_string(l), [l](data::DatasetSpec& s) { s.length = l; }});
            break;
        case SweepKind::Channel:
            for (Channel ch : {Channel::Awgn, Channel::FlatRayleigh})
                changes.push_back({std::string(to_string(ch)), [ch](data::DatasetSpec& s) { s.channel = ch; }});
            break;
        case SweepKind::Adaptability: {
            using M = Modulation;
            const std::vector<std::pair<std::string, std::vector<M>>> sets{
                {"bpsk-bpsk", {M::Bpsk}},
                {"2fsk-bpsk", {M::Fsk2}},
                {"16qam-bpsk", {M::Qam16}},
                {"4pam-bpsk", {M::Pam4}},
                {"all-bpsk", {M::Bpsk, M::Fsk2, M::Qam16, M::Pam4}},
                {"nobpsk-bpsk", {M::Fsk2, M::Qam16, M::Pam4}},
            };
            for (const auto& [name, mods] : sets)
                changes.push_back({name, [mods](data::DatasetSpec& s) { s.modulations = mods; }});
            break;
        }
    }

    const auto tag = static_cast<std::uint64_t>(kind);
    std::vector<SweepVariant> out;
    for (std::size_t v = 0; v < changes.size(); ++v) {
        SweepVariant var;
        var.name = changes[v].name;
        var.train_spec = base.train_spec;
        changes[v].apply(var.train_spec);
        var.train_spec.master_seed = derive_seed({base.seed, tag, v, 1});
        var.test_spec = var.train_spec;
        var.test_spec.frames_per_cell = base.test_per_cell;
        var.model = base.model;
        var.model.input_length = var.train_spec.length;
        var.train = base.train;
        var.train.seed = derive_seed({base.seed, tag, v, 3});
        var.train_file = "data/" + var.name + ".train.cfod";
        if (kind == SweepKind::Adaptability) {
            // Every model is scored on one shared BPSK-only test set.
            var.test_spec.modulations = {Modulation::Bpsk};
            var.test_spec.master_seed = derive_seed({base.seed, tag, 2});
            var.test_file = "data/bpsk.test.cfod";
        } else {
            var.test_spec.master_seed = derive_seed({base.seed, tag, v, 2});
            var.test_file = "data/" + var.name + ".test.cfod";
        }
        out.push_back(std::move(var));
    }
    return out;
}

const std::vector<std::string>& sweep_methods() {
    static const std::vector<std::string> methods{"kay", "kay2", std::string(kNetworkMethod)};
    return methods;
}

bool SweepOutcome::all_ok() const {
    for (const auto& v : variants)
        if (!v.ok) return false;
    return true;
}

namespace {

// Reuses an existing container only when its sidecar describes the same spec.
std::string materialize(const data::DatasetSpec& spec, const fs::path& path, const Logger& log) {
    const auto side = data::sidecar_path(path);
    if (fs::exists(path) && fs::exists(side) && read_text(side) == spec.to_json()) {
        if (log) log("reusing " + path.string());
        return hex_digest(file_digest(path));
    }
    if (log) log("generating " + path.string());
    return hex_digest(generate_dataset_file(spec, path).digest);
}

nlohmann::ordered_json spec_seeds(const SweepVariant& v) {
    nlohmann::ordered_json j;
    j["train_data"] = v.train_spec.master_seed;
    j["test_data"] = v.test_spec.master_seed;
    j["training"] = v.train.seed;
    return j;
}

}  // namespace

SweepOutcome run_sweep(SweepKind kind, const SweepBase& base, const fs::path& out_dir, const Logger& log) {
    const auto variants = plan_sweep(kind, base);
    fs::create_directories(out_dir);
    SweepOutcome outcome;
    for (const auto& v : variants) {
        VariantOutcome vo;
        vo.name = v.name;
        try {
            if (log) log("variant " + v.name);
            vo.train_digest = materialize(v.train_spec, out_dir / v.train_file, log);
            vo.test_digest = materialize(v.test_spec, out_dir / v.test_file, log);
            const auto test_set = load_records(out_dir / v.test_file);
            const data::DatasetView test_view(test_set);

            for (const auto& m : sweep_methods()) {
                if (m == kNetworkMethod) continue;
                const auto rel = "csv/" + v.name + "." + m + ".csv";
                write_text(out_dir / rel, to_csv(baseline_report(test_view, est::parse_estimator(m))));
                vo.csv_files[m] = rel;
            }

            TrainJob job;
            job.train_path = out_dir / v.train_file;
            job.eval_path = out_dir / v.test_file;
            job.model = v.model;
            job.train = v.train;
            vo.model_file = "models/" + v.name + ".cfon";
            vo.history_file = "history/" + v.name + ".history.csv";
            job.model_out = out_dir / vo.model_file;
            job.history_out = out_dir / vo.history_file;
            const auto trained = run_training(job, log);
            if (trained.diverged) fail(ErrorKind::Divergence, trained.message);
            vo.model_digest = hex_digest(trained.model_digest);

            auto model = nn::load_model(job.model_out, v.model);
            const auto rel = "csv/" + v.name + "." + std::string(kNetworkMethod) + ".csv";
            write_text(out_dir / rel, to_csv(network_report(model, test_view)));
            vo.csv_files[std::string(kNetworkMethod)] = rel;
            vo.ok = true;
        } catch (const Error& e) {
            vo.error = e.what();
            if (log) log("variant " + v.name + " failed: " + vo.error);
        }
        outcome.variants.push_back(std::move(vo));
    }

    nlohmann::ordered_json manifest;
    manifest["sweep"] = std::string(to_string(kind));
    manifest["base_seed"] = base.seed;
    manifest["methods"] = sweep_methods();
    auto& list = manifest["variants"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < variants.size(); ++k) {
        const auto& v = variants[k];
        const auto& vo = outcome.variants[k];
        nlohmann::ordered_json j;
        j["name"] = v.name;
        j["status"] = vo.ok ? "ok" : "failed";
        if (!vo.ok) j["error"] = vo.error;
        j["seeds"] = spec_seeds(v);
        j["train_data"] = {{"path", v.train_file}, {"digest", vo.train_digest}};
        j["test_data"] = {{"path", v.test_file}, {"digest", vo.test_digest}};
        j["model"] = {{"path", vo.model_file}, {"digest", vo.model_digest}};
        j["history"] = vo.history_file;
        nlohmann::ordered_json csv;
        for (const auto& m : sweep_methods())
            if (auto it = vo.csv_files.find(m); it != vo.csv_files.end()) csv[m] = it->second;
        j["csv"] = csv;
        list.push_back(std::move(j));
    }
    outcome.manifest = out_dir / "manifest.json";
    write_text(outcome.manifest, manifest.dump(2) + "\n");
    return outcome;
}

}  // namespace cfo::harness
