#include "cfo/dataset.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <thread>

#include <json.hpp>

#include "binary_io.hpp"
#include "cfo/digest.hpp"
#include "cfo/error.hpp"
#include "cfo/rng.hpp"

namespace cfo::data {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'O', 'D'};
constexpr std::uint16_t kVersion = 1;

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::string_view unit_name(CfoUnit u) { return u == CfoUnit::CyclesPerSample ? "cycles/sample" : "cycles/symbol"; }

}  // namespace

std::vector<double> arithmetic_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) fail(ErrorKind::Validation, "arithmetic_grid: need step > 0 and hi >= lo");
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < n; ++k) grid.push_back(lo + static_cast<double>(k) * step);
    return grid;
}

void DatasetSpec::validate() const {
    std::string bad;
    if (modulations.empty()) bad += " modulations";
    if (snr_grid_db.empty()) bad += " snr_grid_db";
    for (double s : snr_grid_db)
        if (std::isnan(s)) bad += " snr_grid_db(NaN)";
    if (frames_per_cell < 1) bad += " frames_per_cell";
    if (length < 4 || length % 4 != 0 || length > UINT32_MAX) bad += " length";
    if (oversampling != 4 && oversampling != 8 && oversampling != 16) bad += " oversampling";
    const double cfo_scale = cfo_unit == CfoUnit::CyclesPerSymbol ? 1.0 / oversampling : 1.0;
    if (!(cfo_min <= cfo_max) || std::abs(cfo_min * cfo_scale) > 0.2 || std::abs(cfo_max * cfo_scale) > 0.2)
        bad += " cfo_range";
    if (!(rolloff_min <= rolloff_max) || rolloff_min < 0.2 || rolloff_max > 0.7) bad += " rolloff_range";
    if (total_records() > UINT32_MAX) bad += " total_records";
    if (!bad.empty()) fail(ErrorKind::Validation, "invalid dataset spec:" + bad);
}

std::string DatasetSpec::to_json() const {
    nlohmann::ordered_json j;
    std::vector<std::string> mods;
    for (auto m : modulations) mods.emplace_back(to_string(m));
    j["modulations"] = mods;
    j["snr_grid_db"] = snr_grid_db;
    j["frames_per_cell"] = frames_per_cell;
    j["length"] = length;
    j["oversampling"] = oversampling;
    j["channel"] = std::string(to_string(channel));
    j["cfo_range"] = {cfo_min, cfo_max};
    j["cfo_unit"] = std::string(unit_name(cfo_unit));
    j["rolloff_range"] = {rolloff_min, rolloff_max};
    j["master_seed"] = master_seed;
    j["total_records"] = total_records();
    return j.dump(2) + "\n";
}

DatasetSpec DatasetSpec::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        DatasetSpec s;
        s.modulations.clear();
        for (const auto& m : j.at("modulations")) s.modulations.push_back(parse_modulation(m.get<std::string>()));
        s.snr_grid_db = j.at("snr_grid_db").get<std::vector<double>>();
        s.frames_per_cell = j.at("frames_per_cell").get<std::size_t>();
        s.length = j.at("length").get<std::size_t>();
        s.oversampling = j.at("oversampling").get<int>();
        s.channel = parse_channel(j.at("channel").get<std::string>());
        s.cfo_min = j.at("cfo_range").at(0).get<double>();
        s.cfo_max = j.at("cfo_range").at(1).get<double>();
        s.cfo_unit = j.at("cfo_unit").get<std::string>() == "cycles/symbol" ? CfoUnit::CyclesPerSymbol
                                                                           : CfoUnit::CyclesPerSample;
        s.rolloff_min = j.at("rolloff_range").at(0).get<double>();
        s.rolloff_max = j.at("rolloff_range").at(1).get<double>();
        s.master_seed = j.at("master_seed").get<std::uint64_t>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("dataset sidecar: ") + e.what());
    }
}

double DatasetSpec::header_digest() const {
    Fnv1a h;
    h.update(to_json());
    return static_cast<double>(derive_seed({master_seed, h.value()}) >> 11);
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("CFO_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<unsigned>(v);
    }
    return 1;
}

Dataset generate(const DatasetSpec& spec, unsigned threads) {
    spec.validate();
    if (threads == 0) threads = default_thread_count();
    const std::size_t total = spec.total_records();
    const std::size_t per_cell = spec.frames_per_cell;
    const double cfo_scale = spec.cfo_unit == CfoUnit::CyclesPerSymbol ? 1.0 / spec.oversampling : 1.0;
    Dataset out(total);

    auto make_record = [&](std::size_t index) {
        const std::size_t cell = index / per_cell;
        const std::size_t k = index % per_cell;
        const Modulation mod = spec.modulations[cell / spec.snr_grid_db.size()];
        const double snr = to_f32(spec.snr_grid_db[cell % spec.snr_grid_db.size()]);
        Rng rng(derive_seed({spec.master_seed, cell, k}));

        SynthesisParams p;
        p.modulation = mod;
        p.cfo_norm = to_f32(rng.uniform(spec.cfo_min, spec.cfo_max) * cfo_scale);
        p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        p.rolloff = to_f32(rng.uniform(spec.rolloff_min, spec.rolloff_max));
        p.oversampling = spec.oversampling;
        p.snr_db = snr;
        p.channel = spec.channel;
        p.length = spec.length;
        auto synth = synthesize(p, rng);

        FrameRecord& r = out[index];
        r.frame = std::move(synth.frame);
        for (auto& v : r.frame.i) v = to_f32(v);
        for (auto& v : r.frame.q) v = to_f32(v);
        r.cfo = p.cfo_norm;
        r.snr_db = snr;
        r.modulation = mod;
        r.channel = spec.channel;
        r.rolloff = p.rolloff;
        r.oversampling = spec.oversampling;
    };

    if (threads <= 1 || total < 2) {
        for (std::size_t i = 0; i < total; ++i) make_record(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < total; i = next++) make_record(i);
        });
    pool.clear();
    return out;
}

std::size_t record_bytes(std::size_t length) { return 8 * length + 4 + 4 + 1 + 1 + 4 + 2; }

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p.replace_extension(".json");
    return p;
}

void write_dataset(const std::filesystem::path& path, std::span<const FrameRecord> records, const DatasetSpec* spec) {
    if (records.empty()) fail(ErrorKind::Length, "write_dataset: no records");
    const std::size_t len = records.front().frame.size();
    if (records.size() > UINT32_MAX || len > UINT32_MAX) fail(ErrorKind::Length, "write_dataset: dataset too large");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");

    io::LeWriter w;
    w.bytes(kMagic, 4);
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(records.size()));
    w.u32(static_cast<std::uint32_t>(len));
    w.u8(static_cast<std::uint8_t>(records.front().channel));
    w.u16(static_cast<std::uint16_t>(records.front().oversampling));
    w.f64(spec ? spec->header_digest() : 0.0);
    w.flush_to(out);

    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        if (r.frame.size() != len || r.frame.q.size() != len)
            fail(ErrorKind::Length, "write_dataset: record " + std::to_string(k) + " has length " +
                                        std::to_string(r.frame.size()) + ", expected " + std::to_string(len));
        for (double v : r.frame.i) w.f32(static_cast<float>(v));
        for (double v : r.frame.q) w.f32(static_cast<float>(v));
        w.f32(static_cast<float>(r.cfo));
        w.f32(static_cast<float>(r.snr_db));
        w.u8(static_cast<std::uint8_t>(r.modulation));
        w.u8(static_cast<std::uint8_t>(r.channel));
        w.f32(static_cast<float>(r.rolloff));
        w.u16(static_cast<std::uint16_t>(r.oversampling));
        w.flush_to(out);
    }
    out.close();
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());

    if (spec) {
        std::ofstream side(sidecar_path(path), std::ios::binary | std::ios::trunc);
        if (!side) fail(ErrorKind::Io, "cannot write sidecar for " + path.string());
        side << spec->to_json();
    }
}

DatasetFile read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);

    char head[kDatasetHeaderBytes];
    const std::size_t got = in.read(head, sizeof head) ? sizeof head : static_cast<std::size_t>(in.gcount());
    if (got < sizeof head)
        fail(ErrorKind::Format, "truncated header at byte offset " + std::to_string(got) + ": expected " +
                                    std::to_string(kDatasetHeaderBytes) + " bytes, found " + std::to_string(got));
    io::LeReader hr(head, sizeof head);
    char magic[4];
    hr.bytes(magic, 4);
    if (std::string_view(magic, 4) != std::string_view(kMagic, 4))
        fail(ErrorKind::Format, "bad magic at byte offset 0: not a CFOD dataset");
    DatasetFile f;
    f.header.version = hr.u16();
    if (f.header.version != kVersion)
        fail(ErrorKind::Format, "unsupported version " + std::to_string(f.header.version) + " at byte offset 4");
    f.header.record_count = hr.u32();
    f.header.length = hr.u32();
    if (f.header.length < 2)
        fail(ErrorKind::Format, "invalid frame length " + std::to_string(f.header.length) + " at byte offset 10");
    const auto ch = hr.u8();
    if (ch > 1) fail(ErrorKind::Format, "invalid channel kind " + std::to_string(ch) + " at byte offset 14");
    f.header.channel = static_cast<Channel>(ch);
    f.header.oversampling = hr.u16();
    f.header.digest = hr.f64();

    const std::uint64_t rec = record_bytes(f.header.length);
    const std::uint64_t expected = kDatasetHeaderBytes + rec * f.header.record_count;
    if (file_size != expected)
        fail(ErrorKind::Format, std::string(file_size < expected ? "truncated payload" : "trailing bytes") +
                                    " at byte offset " + std::to_string(std::min(file_size, expected)) +
                                    ": expected " + std::to_string(expected) + " bytes, found " +
                                    std::to_string(file_size));

    const std::size_t len = f.header.length;
    std::vector<char> buf(rec);
    f.records.resize(f.header.record_count);
    for (std::size_t k = 0; k < f.header.record_count; ++k) {
        const std::uint64_t base = kDatasetHeaderBytes + rec * k;
        if (!in.read(buf.data(), static_cast<std::streamsize>(rec)))
            fail(ErrorKind::Format, "read failure at byte offset " + std::to_string(base));
        io::LeReader r(buf.data(), buf.size(), base);
        FrameRecord& out = f.records[k];
        out.frame = IQFrame(len);
        for (auto& v : out.frame.i) v = r.f32();
        for (auto& v : out.frame.q) v = r.f32();
        out.cfo = r.f32();
        out.snr_db = r.f32();
        const auto mod_offset = r.offset();
        const auto mod = r.u8();
        if (mod > 3) fail(ErrorKind::Format, "invalid modulation id " + std::to_string(mod) + " at byte offset " +
                                                 std::to_string(mod_offset));
        out.modulation = static_cast<Modulation>(mod);
        const auto ch_offset = r.offset();
        const auto rch = r.u8();
        if (rch > 1) fail(ErrorKind::Format, "invalid channel id " + std::to_string(rch) + " at byte offset " +
                                                 std::to_string(ch_offset));
        out.channel = static_cast<Channel>(rch);
        out.rolloff = r.f32();
        out.oversampling = r.u16();
    }
    return f;
}

DatasetView filter_split(const DatasetView& view, const RecordPredicate& keep) {
    if (!view.base()) return view;
    std::vector<std::size_t> picked;
    for (std::size_t k = 0; k < view.size(); ++k)
        if (keep(view[k])) picked.push_back(view.indices()[k]);
    return DatasetView(*view.base(), std::move(picked));
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = k;
    Rng rng(derive_seed({seed, epoch, 0x5348554646ull}));
    for (std::size_t k = n; k > 1; --k) std::swap(p[k - 1], p[rng.below(k)]);
    return p;
}

Batch make_batch(const DatasetView& view, std::span<const std::size_t> positions) {
    if (positions.empty()) fail(ErrorKind::Length, "make_batch: empty batch");
    const std::size_t len = view[positions.front()].frame.size();
    Batch b{nn::Tensor<float>({positions.size(), 2, len}), nn::Tensor<float>({positions.size(), 1}),
            std::vector<std::size_t>(positions.begin(), positions.end())};
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const auto& r = view[positions[k]];
        if (r.frame.size() != len)
            fail(ErrorKind::Shape, "make_batch: mixed frame lengths " + std::to_string(len) + " and " +
                                       std::to_string(r.frame.size()));
        float* i_row = &b.input.at(k, 0, 0);
        float* q_row = &b.input.at(k, 1, 0);
        for (std::size_t n = 0; n < len; ++n) {
            i_row[n] = static_cast<float>(r.frame.i[n]);
            q_row[n] = static_cast<float>(r.frame.q[n]);
        }
        b.target[k] = static_cast<float>(r.cfo);
    }
    return b;
}

BatchIterator::BatchIterator(const DatasetView& view, std::size_t batch_size,
                             std::optional<std::uint64_t> shuffle_seed, std::uint64_t epoch, nn::Mode mode)
    : view_(view) {
    if (batch_size < 1) fail(ErrorKind::Domain, "batch size must be >= 1");
    const std::size_t n = view.size();
    if (mode == nn::Mode::Train && n < 2)
        fail(ErrorKind::Degenerate, "TRAIN-mode batches need at least 2 records, dataset has " + std::to_string(n));
    if (shuffle_seed) {
        order_ = epoch_permutation(n, *shuffle_seed, epoch);
    } else {
        order_.resize(n);
        for (std::size_t k = 0; k < n; ++k) order_[k] = k;
    }
    for (std::size_t start = 0; start < n; start += batch_size) bounds_.push_back(start);
    bounds_.push_back(n);
    if (mode == nn::Mode::Train && bounds_.size() > 2 && n - bounds_[bounds_.size() - 2] == 1)
        bounds_.erase(bounds_.end() - 2);
}

std::optional<Batch> BatchIterator::next() {
    if (cursor_ + 1 >= bounds_.size()) return std::nullopt;
    const std::size_t lo = bounds_[cursor_], hi = bounds_[cursor_ + 1];
    ++cursor_;
    return make_batch(view_, std::span(order_).subspan(lo, hi - lo));
}

}  // namespace cfo::data
