#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "cfo/dataset.hpp"
#include "cfo/harness/experiments.hpp"
#include "cfo/metrics.hpp"
#include "cfo/nn/layers.hpp"
#include "cfo_tools/cli.hpp"
#include "support.hpp"

namespace cfo::tools {
namespace {

namespace fs = std::filesystem;
using test::slurp;
using test::spit;
using test::TempDir;

struct CliRun {
    int code = 0;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "cfo");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string digest_of(const std::string& out) {
    const auto pos = out.find("digest ");
    return pos == std::string::npos ? std::string{} : out.substr(pos + 7, out.find('\n', pos) - pos - 7);
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

CliRun generate(const fs::path& out, const std::string& per_cell, const std::string& len, const std::string& snrs,
             const std::string& seed) {
    return cli({"generate", "--mods", "bpsk", "--snr-min", snrs.substr(0, snrs.find(':')), "--snr-max",
                snrs.substr(snrs.find(':') + 1), "--snr-step", "10", "--per-cell", per_cell, "--len", len, "--seed",
                seed, "--out", out.string()});
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"generate", "--out", "x.cfod"}).code, 2);
    EXPECT_EQ(cli({"generate", "--per-cell", "1", "--os", "5", "--out", "x.cfod"}).code, 2);
    EXPECT_EQ(cli({"generate", "--per-cell", "1", "--mods", "8psk", "--out", "x.cfod"}).code, 2);
    EXPECT_EQ(cli({"train", "--train", "x.cfod", "--out", "m.cfon", "--head", "dense"}).code, 2);
    EXPECT_EQ(cli({"sweep", "--kind", "snr", "--out-dir", "x"}).code, 2);
    EXPECT_EQ(cli({"gradcheck", "--eps", "0"}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, GenerateIsDeterministic) {
    TempDir dir;
    const auto a = cli({"generate", "--mods", "bpsk", "--snr-min", "0", "--snr-max", "0", "--per-cell", "100",
                        "--len", "64", "--seed", "7", "--out", (dir / "a.cfod").string()});
    const auto b = cli({"generate", "--mods", "bpsk", "--snr-min", "0", "--snr-max", "0", "--per-cell", "100",
                        "--len", "64", "--seed", "7", "--out", (dir / "b.cfod").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_NE(a.out.find("records 100 "), std::string::npos);
    EXPECT_EQ(digest_of(a.out), digest_of(b.out));
    EXPECT_EQ(slurp(dir / "a.cfod"), slurp(dir / "b.cfod"));
    EXPECT_TRUE(fs::exists(dir / "a.json"));
    EXPECT_EQ(data::read_dataset(dir / "a.cfod").records.size(), 100u);
}

TEST(Cli, GenerateIoFailureExitsOne) {
    TempDir dir;
    spit(dir / "file", "x");
    const auto r = generate(dir / "file" / "d.cfod", "1", "64", "0:0", "1");
    EXPECT_EQ(r.code, 1);
}

TEST(Cli, BaselineOnNoiselessTones) {
    TempDir dir;
    data::Dataset recs;
    for (int k = 0; k < 20; ++k) {
        // Dyadic offsets survive the float32 label field exactly.
        const double f = (k - 10) / 64.0;
        data::FrameRecord r;
        r.frame = IQFrame(2048);
        for (std::size_t n = 0; n < 2048; ++n) {
            r.frame.i[n] = static_cast<float>(std::cos(2 * std::numbers::pi * f * static_cast<double>(n)));
            r.frame.q[n] = static_cast<float>(std::sin(2 * std::numbers::pi * f * static_cast<double>(n)));
        }
        r.cfo = f;
        r.snr_db = 30;
        r.oversampling = 8;
        r.rolloff = 0.35;
        recs.push_back(r);
    }
    data::write_dataset(dir / "tones.cfod", recs);
    const auto r = cli({"baseline", "--data", (dir / "tones.cfod").string(), "--method", "kay"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = parse_csv(r.out);
    ASSERT_EQ(rep.rows.size(), 1u);
    EXPECT_LT(rep.rows[0].mse, 1e-18);
    EXPECT_EQ(rep.rows[0].count, 20u);
    EXPECT_EQ(cli({"baseline", "--data", (dir / "tones.cfod").string(), "--method", "music"}).code, 2);
    EXPECT_EQ(cli({"baseline", "--data", (dir / "tones.cfod").string(), "--method", "kay", "--power", "2"}).code, 2);
    EXPECT_EQ(cli({"baseline", "--data", (dir / "tones.cfod").string(), "--method", "kay", "--snr", "10"}).code, 1);
}

TEST(Cli, BaselineEmptyDatasetWritesNoCsv) {
    TempDir dir;
    // Header declaring zero records of length 64; the writer itself refuses empty input.
    std::string header = "CFOD";
    header += std::string("\x01\x00", 2) + std::string(4, '\0') + std::string("\x40\x00\x00\x00", 4);
    header += std::string(1, '\0') + std::string("\x08\x00", 2) + std::string(8, '\0');
    ASSERT_EQ(header.size(), data::kDatasetHeaderBytes);
    spit(dir / "empty.cfod", header);
    const auto r = cli({"baseline", "--data", (dir / "empty.cfod").string(), "--method", "kay", "--out",
                        (dir / "out.csv").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("empty"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "out.csv"));
    EXPECT_EQ(cli({"baseline", "--data", (dir / "missing.cfod").string(), "--method", "kay"}).code, 1);
}

TEST(Cli, PowerLawKayBeatsKayAtHighSnr) {
    TempDir dir;
    ASSERT_EQ(generate(dir / "d.cfod", "200", "512", "20:20", "11").code, 0);
    const auto kay = parse_csv(cli({"baseline", "--data", (dir / "d.cfod").string(), "--method", "kay"}).out);
    const auto kay2 = parse_csv(cli({"baseline", "--data", (dir / "d.cfod").string(), "--method", "kay2"}).out);
    ASSERT_EQ(kay.rows.size(), 1u);
    ASSERT_EQ(kay2.rows.size(), 1u);
    EXPECT_LT(kay2.rows[0].mse, kay.rows[0].mse);
}

class CliTraining : public ::testing::Test {
protected:
    void SetUp() override {
        ASSERT_EQ(generate(dir / "train.cfod", "32", "32", "0:10", "1").code, 0);
        ASSERT_EQ(generate(dir / "test.cfod", "8", "32", "0:10", "2").code, 0);
    }
    CliRun train(const std::string& name, std::vector<std::string> extra = {}) {
        std::vector<std::string> args{"train", "--train", (dir / "train.cfod").string(), "--eval",
                                      (dir / "test.cfod").string(), "--out", (dir / name).string()};
        args.insert(args.end(), extra.begin(), extra.end());
        return cli(args);
    }
    TempDir dir;
};

TEST_F(CliTraining, HistoryFollowsSchedule) {
    const auto r = train("m.cfon", {"--epochs", "12", "--batch", "16", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto hist = slurp(dir / "m.history.csv");
    std::istringstream in(hist);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "epoch,lr,train_loss,eval_mse");
    std::vector<std::string> lrs;
    while (std::getline(in, line)) {
        const auto a = line.find(',');
        lrs.push_back(line.substr(a + 1, line.find(',', a + 1) - a - 1));
    }
    ASSERT_EQ(lrs.size(), 12u);
    EXPECT_EQ(lrs[0], "0.02");
    EXPECT_EQ(lrs[3], "0.02");
    EXPECT_DOUBLE_EQ(std::stod(lrs[4]), 0.002);
    EXPECT_DOUBLE_EQ(std::stod(lrs[8]), 0.002);
    EXPECT_DOUBLE_EQ(std::stod(lrs[9]), 0.0002);
    EXPECT_DOUBLE_EQ(std::stod(lrs[11]), 0.0002);

    const auto again = train("m2.cfon", {"--epochs", "12", "--batch", "16", "--seed", "3"});
    EXPECT_EQ(digest_of(r.out), digest_of(again.out));
    EXPECT_EQ(slurp(dir / "m.cfon"), slurp(dir / "m2.cfon"));
    EXPECT_EQ(hist, slurp(dir / "m2.history.csv"));
}

TEST_F(CliTraining, EvalIsRepeatableAndFilters) {
    ASSERT_EQ(train("m.cfon", {"--epochs", "2", "--batch", "16"}).code, 0);
    const std::vector<std::string> args{"eval", "--model", (dir / "m.cfon").string(), "--data",
                                        (dir / "test.cfod").string()};
    const auto a = cli(args), b = cli(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const auto rep = parse_csv(a.out);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_EQ(rep.rows[0].method, "iq-resnet");
    auto filtered = args;
    filtered.insert(filtered.end(), {"--snr", "10"});
    const auto one = parse_csv(cli(filtered).out);
    ASSERT_EQ(one.rows.size(), 1u);
    EXPECT_EQ(one.rows[0].snr_db, 10.0);

    ASSERT_EQ(generate(dir / "long.cfod", "2", "64", "0:0", "4").code, 0);
    const auto mismatch = cli({"eval", "--model", (dir / "m.cfon").string(), "--data", (dir / "long.cfod").string()});
    EXPECT_EQ(mismatch.code, 1);
    EXPECT_NE(mismatch.err.find("shape"), std::string::npos);
}

TEST_F(CliTraining, LengthMismatchBeforeTraining) {
    const auto r = train("m.cfon", {"--len", "64", "--epochs", "1"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("shape"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "m.cfon"));
}

TEST_F(CliTraining, DivergenceKeepsHistory) {
    const auto r = train("m.cfon", {"--lr", "1e20", "--epochs", "3", "--batch", "16"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("diverged"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "m.cfon"));
    ASSERT_TRUE(fs::exists(dir / "m.history.csv"));
    EXPECT_GE(line_count(slurp(dir / "m.history.csv")), 1u);
}

TEST(Cli, GradcheckExitCodes) {
    const auto a = cli({"gradcheck"});
    EXPECT_EQ(a.code, 0) << a.out;
    EXPECT_NE(a.out.find("PASS"), std::string::npos);
    EXPECT_EQ(cli({"gradcheck", "--eps", "5e-5"}).code, 0);
    nn::testing::set_conv_backward_fault(0.5);
    const auto bad = cli({"gradcheck"});
    nn::testing::set_conv_backward_fault(0.0);
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST(Cli, PlotCases) {
    TempDir dir;
    spit(dir / "kay.csv", "snr_db,method,mse,count\n0,kay,0.01,4\n10,kay,0.001,4\n");
    spit(dir / "net.csv", "snr_db,method,mse,count\n0,iq-resnet,0.004,4\n10,iq-resnet,0.0002,4\n");
    spit(dir / "empty.csv", "snr_db,method,mse,count\n");
    spit(dir / "bad.csv", "snr,method\n0,kay\n");
    const std::vector<std::string> two{"plot", "--in", (dir / "kay.csv").string(), "--in",
                                       (dir / "net.csv").string(), "--out", (dir / "a.svg").string()};
    ASSERT_EQ(cli(two).code, 0);
    auto again = two;
    again.back() = (dir / "b.svg").string();
    ASSERT_EQ(cli(again).code, 0);
    const auto svg = slurp(dir / "a.svg");
    EXPECT_EQ(svg, slurp(dir / "b.svg"));
    std::size_t polylines = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
    EXPECT_EQ(polylines, 2u);

    EXPECT_EQ(cli({"plot", "--in", (dir / "empty.csv").string(), "--out", (dir / "c.svg").string()}).code, 1);
    EXPECT_FALSE(fs::exists(dir / "c.svg"));
    EXPECT_EQ(cli({"plot", "--in", (dir / "bad.csv").string(), "--out", (dir / "d.svg").string()}).code, 1);
    EXPECT_FALSE(fs::exists(dir / "d.svg"));
}

std::vector<std::string> tiny_sweep(const std::string& kind, const fs::path& out) {
    return {"sweep", "--kind", kind, "--out-dir", out.string(), "--set", "snr_min=10", "--set", "snr_max=10",
            "--set", "per_cell=4", "--set", "test_per_cell=2", "--set", "epochs=1", "--set", "batch=4",
            "--set", "len=64", "--set", "seed=9"};
}

TEST(Cli, LengthSweepWritesAllArtefacts) {
    TempDir dir;
    const auto r = cli(tiny_sweep("length", dir / "sw"));
    ASSERT_EQ(r.code, 0) << r.err;
    std::size_t csvs = 0;
    for (const auto& e : fs::directory_iterator(dir / "sw" / "csv")) csvs += e.path().extension() == ".csv";
    EXPECT_EQ(csvs, 9u);
    for (const auto* v : {"len512", "len1024", "len2048"}) {
        EXPECT_TRUE(fs::exists(dir / "sw" / "models" / (std::string(v) + ".cfon")));
        EXPECT_NE(r.out.find(std::string(v) + " ok"), std::string::npos);
    }
    const auto manifest = slurp(dir / "sw" / "manifest.json");
    EXPECT_NE(manifest.find("\"len2048\""), std::string::npos);
    EXPECT_NE(manifest.find("\"sweep\": \"length\""), std::string::npos);
}

TEST(Cli, SweepRecordsFailedVariantAndContinues) {
    TempDir dir;
    harness::SweepBase base;
    base.train_spec.snr_grid_db = {10};
    base.train_spec.frames_per_cell = 4;
    base.test_per_cell = 2;
    base.train.epochs = 1;
    base.train.batch_size = 4;
    base.train.lr_drop_epochs.clear();
    base.seed = 9;
    const auto plan = harness::plan_sweep(harness::SweepKind::Oversampling, base);
    const auto bad = dir / "sw" / plan[1].train_file;
    fs::create_directories(bad.parent_path());
    spit(bad, "not a dataset");
    spit(data::sidecar_path(bad), plan[1].train_spec.to_json());

    const auto out = harness::run_sweep(harness::SweepKind::Oversampling, base, dir / "sw");
    ASSERT_EQ(out.variants.size(), 3u);
    EXPECT_TRUE(out.variants[0].ok) << out.variants[0].error;
    EXPECT_FALSE(out.variants[1].ok);
    EXPECT_TRUE(out.variants[2].ok) << out.variants[2].error;
    EXPECT_FALSE(out.all_ok());
    EXPECT_NE(slurp(out.manifest).find("\"failed\""), std::string::npos);
}

}  // namespace
}  // namespace cfo::tools
