#include "cfo_tools/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "cfo/digest.hpp"
#include "cfo/error.hpp"
#include "cfo/harness/config.hpp"
#include "cfo/harness/experiments.hpp"
#include "cfo/harness/plot.hpp"
#include "cfo/nn/grad_check.hpp"
#include "cfo/nn/model_io.hpp"

namespace cfo::tools {

namespace {

namespace fs = std::filesystem;
using namespace cfo::harness;

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

nn::Head parse_head(const std::string& name) {
    if (name == "flatten") return nn::Head::Flatten;
    if (name == "pool") return nn::Head::GlobalAvgPool;
    fail(ErrorKind::Usage, "unknown head '" + name + "' (expected flatten or pool)");
}

data::DatasetView select_snr(const data::Dataset& records, std::optional<double> snr) {
    data::DatasetView view(records);
    if (!snr) return view;
    const double want = static_cast<float>(*snr);
    view = data::filter_split(view, [want](const data::FrameRecord& r) { return r.snr_db == want; });
    if (view.empty()) fail(ErrorKind::Length, "no records at SNR " + format_real(*snr) + " dB");
    return view;
}

void emit_csv(const MetricsReport& report, const std::string& out_path, std::ostream& out) {
    report.validate();
    const auto text = to_csv(report);
    if (out_path.empty()) out << text;
    else write_text(out_path, text);
}

struct GenerateArgs {
    std::string mods = "bpsk";
    double snr_min = -20, snr_max = 30, snr_step = 2;
    std::size_t per_cell = 1, len = 1024;
    int os = 8;
    std::string channel = "awgn";
    std::string cfo_unit = "sample";
    double cfo_max = 0.2;
    double rolloff_min = 0.2, rolloff_max = 0.7;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    data::DatasetSpec spec;
    spec.modulations.clear();
    for (const auto& m : split_commas(a.mods)) spec.modulations.push_back(parse_modulation(m));
    spec.snr_grid_db = data::arithmetic_grid(a.snr_min, a.snr_max, a.snr_step);
    spec.frames_per_cell = a.per_cell;
    spec.length = a.len;
    spec.oversampling = a.os;
    spec.channel = parse_channel(a.channel);
    if (a.cfo_unit == "sample") spec.cfo_unit = data::CfoUnit::CyclesPerSample;
    else if (a.cfo_unit == "symbol") spec.cfo_unit = data::CfoUnit::CyclesPerSymbol;
    else fail(ErrorKind::Usage, "--cfo-unit must be sample or symbol");
    spec.cfo_min = -a.cfo_max;
    spec.cfo_max = a.cfo_max;
    spec.rolloff_min = a.rolloff_min;
    spec.rolloff_max = a.rolloff_max;
    spec.master_seed = a.seed;
    try {
        spec.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Usage, e.what());
    }
    const auto res = generate_dataset_file(spec, a.out);
    out << "records " << res.records << " digest " << hex_digest(res.digest) << "\n";
    return 0;
}

struct BaselineArgs {
    std::string data, method, out, weighting = "parabolic";
    std::optional<int> power;
    int lag = 1, zero_pad = 8;
    std::optional<double> snr;
    bool by_mod = false;
};

int cmd_baseline(const BaselineArgs& a, std::ostream& out) {
    auto spec = est::parse_estimator(a.method);
    if (a.power) {
        if (spec.method != est::Method::KayPow) fail(ErrorKind::Usage, "--power applies to kay2 only");
        if (*a.power < 1) fail(ErrorKind::Usage, "--power must be >= 1");
        spec.power = *a.power;
    }
    if (a.weighting == "uniform") spec.weighting = est::KayWeighting::Uniform;
    else if (a.weighting != "parabolic") fail(ErrorKind::Usage, "--weighting must be parabolic or uniform");
    spec.lag = a.lag;
    spec.zero_pad = a.zero_pad;
    const auto records = load_records(a.data);
    emit_csv(baseline_report(select_snr(records, a.snr), spec, a.by_mod), a.out, out);
    return 0;
}

struct TrainArgs {
    std::string train, eval, out, history;
    int epochs = 20;
    std::size_t batch = 64;
    double lr = 0.02, lr_factor = 0.1;
    std::string lr_drops = "5,10";
    bool lr_drops_given = false;
    std::uint64_t seed = 0;
    std::string head = "flatten";
    std::size_t len = 0;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    TrainJob job;
    job.train_path = a.train;
    if (!a.eval.empty()) job.eval_path = a.eval;
    job.model.input_length = a.len;
    job.model.head = parse_head(a.head);
    job.train.epochs = a.epochs;
    job.train.batch_size = a.batch;
    job.train.base_lr = a.lr;
    job.train.lr_drop_factor = a.lr_factor;
    job.train.lr_drop_epochs.clear();
    for (const auto& d : split_commas(a.lr_drops)) {
        int e = 0;
        const auto res = std::from_chars(d.data(), d.data() + d.size(), e);
        if (res.ec != std::errc() || res.ptr != d.data() + d.size()) fail(ErrorKind::Usage, "bad --lr-drops entry " + d);
        // Default drops past a short run are simply not reached.
        if (a.lr_drops_given || e <= a.epochs) job.train.lr_drop_epochs.push_back(e);
    }
    job.train.seed = a.seed;
    try {
        job.train.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Usage, e.what());
    }
    job.model_out = a.out;
    job.history_out = a.history.empty() ? fs::path(a.out).replace_extension(".history.csv") : fs::path(a.history);
    const auto res = run_training(job, [&](const std::string& line) { err << line << "\n"; });
    if (res.diverged) {
        err << "training diverged: " << res.message << " (history kept in " << job.history_out.string() << ")\n";
        return 1;
    }
    out << "model " << a.out << " digest " << hex_digest(res.model_digest) << "\n";
    return 0;
}

struct EvalArgs {
    std::string model, data, out;
    std::optional<double> snr;
    bool by_mod = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    auto model = nn::load_model(a.model);
    const auto records = load_records(a.data);
    if (model.config.head == nn::Head::Flatten && records.front().frame.size() != model.config.input_length)
        fail(ErrorKind::Shape, "model input length " + std::to_string(model.config.input_length) +
                                   " does not match data length " + std::to_string(records.front().frame.size()));
    emit_csv(network_report(model, select_snr(records, a.snr), a.by_mod), a.out, out);
    return 0;
}

struct SweepArgs {
    std::string kind, config, out_dir;
    std::vector<std::string> overrides;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    const auto kind = parse_sweep_kind(a.kind);
    ExperimentConfig cfg;
    try {
        if (!a.config.empty()) cfg = ExperimentConfig::load(a.config);
        for (const auto& kv : a.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) fail(ErrorKind::Usage, "--set expects key=value, got " + kv);
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!a.out_dir.empty()) cfg.set("out_dir", a.out_dir);
        if (!cfg.has("out_dir")) fail(ErrorKind::Usage, "sweep needs --out-dir or out_dir in the config");
        cfg.validate();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Validation) fail(ErrorKind::Usage, e.what());
        throw;
    }
    const auto base = SweepBase::from_config(cfg);
    const auto res = run_sweep(kind, base, *cfg.get("out_dir"), [&](const std::string& line) { err << line << "\n"; });
    for (const auto& v : res.variants) out << v.name << " " << (v.ok ? "ok" : "failed") << "\n";
    out << "manifest " << res.manifest.string() << "\n";
    return res.all_ok() ? 0 : 1;
}

struct PlotArgs {
    std::vector<std::string> inputs;
    std::string out, title = "MSE vs SNR";
};

int cmd_plot(const PlotArgs& a) {
    std::vector<MetricsReport> reports;
    for (const auto& p : a.inputs) reports.push_back(parse_csv(read_text(p)));
    PlotOptions opt;
    opt.title = a.title;
    write_svg(a.out, reports, opt);
    return 0;
}

struct GradcheckArgs {
    std::uint64_t seed = 1;
    double eps = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
    if (!(a.eps > 0.0)) fail(ErrorKind::Usage, "--eps must be positive");
    nn::GradCheckOptions opt;
    opt.seed = a.seed;
    opt.eps = a.eps;
    const auto rep = nn::grad_check(opt);
    const bool pass = rep.max_rel_error < 1e-4;
    out << "max_rel_error " << format_real(rep.max_rel_error) << " coordinates " << rep.coordinates << " kink_skips "
        << rep.kink_skips << " worst " << rep.worst_tensor << " " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Carrier frequency offset estimation workbench"};
    app.require_subcommand(1);

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "Synthesize a labeled dataset file");
    gen->add_option("--mods", ga.mods, "Comma-separated modulations: bpsk,2fsk,16qam,4pam");
    gen->add_option("--snr-min", ga.snr_min);
    gen->add_option("--snr-max", ga.snr_max);
    gen->add_option("--snr-step", ga.snr_step);
    gen->add_option("--per-cell", ga.per_cell, "Frames per (modulation, SNR) cell")->required();
    gen->add_option("--len", ga.len, "Frame length L");
    gen->add_option("--os", ga.os, "Oversampling ratio");
    gen->add_option("--channel", ga.channel, "awgn or rayleigh");
    gen->add_option("--cfo-unit", ga.cfo_unit, "sample (default) or symbol");
    gen->add_option("--cfo-max", ga.cfo_max, "Offsets drawn from [-max, max]");
    gen->add_option("--rolloff-min", ga.rolloff_min);
    gen->add_option("--rolloff-max", ga.rolloff_max);
    gen->add_option("--seed", ga.seed);
    gen->add_option("--out", ga.out)->required();

    BaselineArgs ba;
    auto* base = app.add_subcommand("baseline", "Evaluate a classical estimator");
    base->add_option("--data", ba.data)->required();
    base->add_option("--method", ba.method, "kay, kay2, autocorr or ml")->required();
    base->add_option("--power", ba.power, "Power for kay2");
    base->add_option("--lag", ba.lag, "Lag for autocorr");
    base->add_option("--zero-pad", ba.zero_pad, "Zero padding factor for ml");
    base->add_option("--weighting", ba.weighting, "Kay weights: parabolic or uniform");
    base->add_option("--snr", ba.snr, "Keep only records at this SNR");
    base->add_flag("--by-modulation", ba.by_mod);
    base->add_option("--out", ba.out, "CSV path (stdout if omitted)");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train the network");
    tr->add_option("--train", ta.train)->required();
    tr->add_option("--eval", ta.eval);
    tr->add_option("--epochs", ta.epochs);
    tr->add_option("--batch", ta.batch);
    tr->add_option("--lr", ta.lr);
    tr->add_option("--lr-drops", ta.lr_drops, "Comma-separated epochs entering a drop");
    tr->add_option("--lr-factor", ta.lr_factor);
    tr->add_option("--seed", ta.seed);
    tr->add_option("--head", ta.head, "flatten or pool");
    tr->add_option("--len", ta.len, "Expected input length (0: from data)");
    tr->add_option("--out", ta.out)->required();
    tr->add_option("--history", ta.history, "History CSV (default: <out>.history.csv)");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Evaluate a trained model");
    ev->add_option("--model", ea.model)->required();
    ev->add_option("--data", ea.data)->required();
    ev->add_option("--snr", ea.snr, "Keep only records at this SNR");
    ev->add_flag("--by-modulation", ea.by_mod);
    ev->add_option("--out", ea.out, "CSV path (stdout if omitted)");

    SweepArgs sa;
    auto* sw = app.add_subcommand("sweep", "Run a parameter sweep");
    sw->add_option("--kind", sa.kind, "oversampling, length, channel or adaptability")->required();
    sw->add_option("--config", sa.config, "Flat key = value base config");
    sw->add_option("--out-dir", sa.out_dir);
    sw->add_option("--set", sa.overrides, "key=value override, repeatable");

    PlotArgs pa;
    auto* pl = app.add_subcommand("plot", "Render metrics CSVs as SVG");
    pl->add_option("--in", pa.inputs, "Metrics CSV, repeatable")->required();
    pl->add_option("--out", pa.out)->required();
    pl->add_option("--title", pa.title);

    GradcheckArgs ca;
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    gc->add_option("--seed", ca.seed);
    gc->add_option("--eps", ca.eps);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }
    ta.lr_drops_given = tr->count("--lr-drops") > 0;

    try {
        if (*gen) return cmd_generate(ga, out);
        if (*base) return cmd_baseline(ba, out);
        if (*tr) return cmd_train(ta, out, err);
        if (*ev) return cmd_eval(ea, out);
        if (*sw) return cmd_sweep(sa, out, err);
        if (*pl) return cmd_plot(pa);
        if (*gc) return cmd_gradcheck(ca, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return e.kind() == ErrorKind::Usage ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace cfo::tools
