#include "swis/synthetic.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "json.hpp"

#include "swis/errors.hpp"

namespace swis {

namespace {

// Box-Muller over the fully specified mt19937_64 stream, so the draw sequence
// does not depend on the standard library's distribution implementation
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = double(rng_() >> 11) * 0x1.0p-53;
        } while (u1 <= 0.0);
        const double u2 = double(rng_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

LayerSpec conv(std::string name, int out_ch, int in_ch, int k, int input, int stride) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::conv;
    l.out_channels = out_ch;
    l.in_channels = in_ch;
    l.kernel_h = k;
    l.kernel_w = k;
    l.input_h = input;
    l.input_w = input;
    l.stride = stride;
    return l;
}

LayerSpec dwconv(std::string name, int channels, int k, int input, int stride) {
    LayerSpec l = conv(std::move(name), channels, 1, k, input, stride);
    l.kind = LayerKind::depthwise_conv;
    return l;
}

// valid convolutions sized so output maps match the usual 224-input stages
std::vector<LayerSpec> resnet18_layers() {
    std::vector<LayerSpec> ls;
    ls.push_back(conv("conv1", 64, 3, 7, 229, 2));
    for (int b = 0; b < 2; ++b)
        for (int c = 1; c <= 2; ++c)
            ls.push_back(conv("layer1." + std::to_string(b) + ".conv" + std::to_string(c), 64,
                              64, 3, 58, 1));
    const int widths[3] = {128, 256, 512};
    const int strided_in[3] = {57, 29, 15};
    const int rest_in[3] = {30, 16, 9};
    const int down_in[3] = {55, 27, 13};
    for (int s = 0; s < 3; ++s) {
        const std::string stage = "layer" + std::to_string(s + 2);
        ls.push_back(conv(stage + ".0.conv1", widths[s], widths[s] / 2, 3, strided_in[s], 2));
        ls.push_back(conv(stage + ".0.conv2", widths[s], widths[s], 3, rest_in[s], 1));
        ls.push_back(conv(stage + ".0.downsample", widths[s], widths[s] / 2, 1, down_in[s], 2));
        ls.push_back(conv(stage + ".1.conv1", widths[s], widths[s], 3, rest_in[s], 1));
        ls.push_back(conv(stage + ".1.conv2", widths[s], widths[s], 3, rest_in[s], 1));
    }
    return ls;
}

std::vector<LayerSpec> mobilenetv2_layers() {
    std::vector<LayerSpec> ls;
    ls.push_back(conv("stem", 32, 3, 3, 225, 2));
    ls.push_back(dwconv("b1.dw", 32, 3, 114, 1));
    ls.push_back(conv("b1.project", 16, 32, 1, 112, 1));
    ls.push_back(conv("b2.expand", 96, 16, 1, 112, 1));
    ls.push_back(dwconv("b2.dw", 96, 3, 113, 2));
    ls.push_back(conv("b2.project", 24, 96, 1, 56, 1));
    ls.push_back(conv("b3.expand", 144, 24, 1, 56, 1));
    ls.push_back(dwconv("b3.dw", 144, 3, 58, 1));
    ls.push_back(conv("b3.project", 32, 144, 1, 56, 1));
    ls.push_back(conv("b4.expand", 192, 32, 1, 56, 1));
    ls.push_back(dwconv("b4.dw", 192, 3, 57, 2));
    ls.push_back(conv("b4.project", 64, 192, 1, 28, 1));
    ls.push_back(conv("head", 320, 64, 1, 28, 1));
    return ls;
}

std::vector<LayerSpec> vgg16_layers() {
    std::vector<LayerSpec> ls;
    const struct {
        int out, in, input, count;
    } stages[] = {
        {64, 3, 226, 1},   {64, 64, 226, 1},  {128, 64, 114, 1}, {128, 128, 114, 1},
        {256, 128, 58, 1}, {256, 256, 58, 2}, {512, 256, 30, 1}, {512, 512, 30, 2},
        {512, 512, 16, 3},
    };
    int index = 1;
    for (const auto& s : stages)
        for (int c = 0; c < s.count; ++c)
            ls.push_back(conv("conv" + std::to_string(index++), s.out, s.in, 3, s.input, 1));
    return ls;
}

const char* kind_name(LayerKind kind) {
    return kind == LayerKind::depthwise_conv ? "depthwise-conv" : "conv";
}

} // namespace

std::vector<std::string> synthetic_archs() { return {"resnet18", "mobilenetv2", "vgg16"}; }

SyntheticModel make_synthetic(const std::string& arch, std::uint64_t seed) {
    std::vector<LayerSpec> layers;
    if (arch == "resnet18")
        layers = resnet18_layers();
    else if (arch == "mobilenetv2")
        layers = mobilenetv2_layers();
    else if (arch == "vgg16")
        layers = vgg16_layers();
    else
        throw RangeError("unknown synthetic architecture '" + arch + "'");

    SyntheticModel model;
    model.manifest.model_name = arch + "-synthetic";
    std::uint64_t offset = 0;
    for (LayerSpec& l : layers) {
        l.weight_offset = offset;
        l.weight_len = std::uint64_t(l.weight_count()) * 4;
        offset += l.weight_len;
    }
    model.weights.resize(offset / 4);

    Gaussian gauss(seed);
    for (const LayerSpec& l : layers) {
        const double sigma = std::sqrt(2.0 / double(l.reduction_size()));
        float* out = model.weights.data() + l.weight_offset / 4;
        for (int i = 0; i < l.weight_count(); ++i) out[i] = float(gauss.next() * sigma);
    }
    model.manifest.layers = std::move(layers);
    return model;
}

std::vector<LayerTensor> synthetic_tensors(const SyntheticModel& model, int bits) {
    std::vector<LayerTensor> tensors;
    tensors.reserve(model.manifest.layers.size());
    for (const LayerSpec& spec : model.manifest.layers) {
        const std::span<const float> raw(model.weights.data() + spec.weight_offset / 4,
                                         std::size_t(spec.weight_count()));
        QuantizedWeights q = reference_quantize(raw, bits);
        LayerTensor t;
        t.spec = spec;
        t.weights = std::move(q.weights);
        t.scale = q.scale;
        t.bits = bits;
        tensors.push_back(std::move(t));
    }
    return tensors;
}

void save_synthetic(const SyntheticModel& model, const std::filesystem::path& manifest_path,
                    const std::filesystem::path& data_path) {
    {
        std::ofstream out(data_path, std::ios::binary);
        if (!out) throw ParseError("cannot write data file " + data_path.string());
        for (float v : model.weights) {
            const auto u = std::bit_cast<std::uint32_t>(v);
            const char bytes[4] = {char(u & 0xff), char((u >> 8) & 0xff), char((u >> 16) & 0xff),
                                   char((u >> 24) & 0xff)};
            out.write(bytes, 4);
        }
        if (!out) throw ParseError("short write to data file " + data_path.string());
    }

    nlohmann::json j;
    j["model_name"] = model.manifest.model_name;
    j["data_file"] = data_path.filename().string();
    j["layers"] = nlohmann::json::array();
    for (const LayerSpec& l : model.manifest.layers) {
        nlohmann::json jl;
        jl["name"] = l.name;
        jl["kind"] = kind_name(l.kind);
        jl["out_channels"] = l.out_channels;
        jl["in_channels"] = l.in_channels;
        jl["kernel_h"] = l.kernel_h;
        jl["kernel_w"] = l.kernel_w;
        jl["input_h"] = l.input_h;
        jl["input_w"] = l.input_w;
        jl["stride"] = l.stride;
        jl["weight_offset"] = l.weight_offset;
        jl["weight_len"] = l.weight_len;
        j["layers"].push_back(std::move(jl));
    }
    std::ofstream out(manifest_path);
    if (!out) throw ParseError("cannot write manifest " + manifest_path.string());
    out << j.dump(2) << '\n';
}

} // namespace swis
