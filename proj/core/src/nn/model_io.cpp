#include "cfo/nn/model_io.hpp"

#include <fstream>
#include <iterator>
#include <vector>

#include "binary_io.hpp"
#include "cfo/error.hpp"

namespace cfo::nn {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'O', 'N'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void save_model(const Model<float>& model, const std::filesystem::path& path) {
    const auto& cfg = model.config;
    cfg.validate();
    if (cfg.stem_channels != cfg.block_channels.front())
        fail(ErrorKind::Format, "save_model: stem channels must equal the first block's channels");
    if (cfg.input_length > UINT32_MAX || cfg.block_channels.size() > 255)
        fail(ErrorKind::Format, "save_model: configuration exceeds the container's field widths");

    io::LeWriter w;
    w.bytes(kMagic, 4);
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(cfg.input_length));
    w.u8(static_cast<std::uint8_t>(cfg.head));
    w.u8(static_cast<std::uint8_t>(cfg.kernel_size));
    w.u8(static_cast<std::uint8_t>(cfg.block_channels.size()));
    for (std::size_t b = 0; b < cfg.block_channels.size(); ++b) {
        w.u16(static_cast<std::uint16_t>(cfg.block_channels[b]));
        w.u8(static_cast<std::uint8_t>(cfg.block_strides[b]));
    }
    for_each_tensor(model, [&](const std::string&, const Tensor<float>& t, ParamKind) {
        for (float v : t.values()) w.f32(v);
    });

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    w.flush_to(out);
    out.close();
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

Model<float> load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    io::LeReader r(bytes.data(), bytes.size());

    char magic[4] = {};
    r.bytes(magic, 4);
    if (std::string_view(magic, 4) != std::string_view(kMagic, 4))
        fail(ErrorKind::Format, "model file: bad magic at byte offset 0");
    const auto version = r.u16();
    if (version != kVersion) fail(ErrorKind::Format, "model file: unsupported version " + std::to_string(version));

    ModelConfig cfg;
    cfg.input_length = r.u32();
    const auto head_offset = r.offset();
    const auto head = r.u8();
    if (head > 1) fail(ErrorKind::Format, "model file: invalid head kind at byte offset " + std::to_string(head_offset));
    cfg.head = static_cast<Head>(head);
    cfg.kernel_size = r.u8();
    const auto blocks = r.u8();
    cfg.block_channels.clear();
    cfg.block_strides.clear();
    for (int b = 0; b < blocks; ++b) {
        cfg.block_channels.push_back(r.u16());
        cfg.block_strides.push_back(r.u8());
    }
    if (blocks > 0) cfg.stem_channels = cfg.block_channels.front();
    try {
        cfg.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Format, std::string("model file: config block: ") + e.what());
    }

    const std::size_t expected = parameter_count(cfg) * 4;
    if (r.remaining() != expected)
        fail(ErrorKind::Format, "model file: parameter payload at byte offset " + std::to_string(r.offset()) +
                                    " holds " + std::to_string(r.remaining()) + " bytes, expected " +
                                    std::to_string(expected));

    Model<float> model = make_model<float>(cfg, 0);
    for_each_tensor(model, [&](const std::string&, Tensor<float>& t, ParamKind) {
        for (auto& v : t.values()) v = r.f32();
    });
    for (const auto& blk : model.blocks)
        for (const auto* bn : {&blk.bn1, &blk.bn2, &blk.proj_bn})
            for (float v : bn->running_var.values())
                if (!(v > 0.0f)) fail(ErrorKind::Format, "model file: non-positive batch-norm running variance");
    return model;
}

Model<float> load_model(const std::filesystem::path& path, const ModelConfig& expected) {
    Model<float> model = load_model(path);
    const auto& got = model.config;
    if (got.input_length != expected.input_length)
        fail(ErrorKind::Shape, "model input length " + std::to_string(got.input_length) + " != expected " +
                                   std::to_string(expected.input_length) + " (layer head.weight)");
    if (got.head != expected.head) fail(ErrorKind::Shape, "model head kind differs (layer head)");
    if (got.kernel_size != expected.kernel_size)
        fail(ErrorKind::Shape, "model kernel size " + std::to_string(got.kernel_size) + " != expected " +
                                   std::to_string(expected.kernel_size) + " (layer stem)");
    if (got.stem_channels != expected.stem_channels)
        fail(ErrorKind::Shape, "layer stem: channels " + std::to_string(got.stem_channels) + " != expected " +
                                   std::to_string(expected.stem_channels));
    if (got.block_channels.size() != expected.block_channels.size())
        fail(ErrorKind::Shape, "model has " + std::to_string(got.block_channels.size()) + " residual blocks, expected " +
                                   std::to_string(expected.block_channels.size()));
    for (std::size_t b = 0; b < got.block_channels.size(); ++b) {
        const std::string layer = "layer res" + std::to_string(b + 1);
        if (got.block_channels[b] != expected.block_channels[b])
            fail(ErrorKind::Shape, layer + ": channels " + std::to_string(got.block_channels[b]) + " != expected " +
                                       std::to_string(expected.block_channels[b]));
        if (got.block_strides[b] != expected.block_strides[b])
            fail(ErrorKind::Shape, layer + ": stride " + std::to_string(got.block_strides[b]) + " != expected " +
                                       std::to_string(expected.block_strides[b]));
    }
    return model;
}

}  // namespace cfo::nn
