#include "swis/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "swis/errors.hpp"

namespace swis {

namespace {

LayerKind parse_kind(const std::string& s) {
    if (s == "conv") return LayerKind::conv;
    if (s == "depthwise-conv") return LayerKind::depthwise_conv;
    throw ParseError("unknown layer kind '" + s + "'");
}

void validate_layer(const LayerSpec& l, std::uint64_t blob_size) {
    auto fail = [&](const std::string& what) {
        throw RangeError("layer '" + l.name + "': " + what);
    };
    if (l.name.empty()) throw ParseError("layer with empty name");
    if (l.out_channels <= 0 || l.in_channels <= 0) fail("channel counts must be positive");
    if (l.kernel_h <= 0 || l.kernel_w <= 0) fail("kernel dims must be positive");
    if (l.input_h < l.kernel_h || l.input_w < l.kernel_w) fail("input smaller than kernel");
    if (l.stride <= 0) fail("stride must be positive");
    if (l.kind == LayerKind::depthwise_conv && l.in_channels != 1)
        fail("depthwise layer must have in_channels == 1 per filter");
    const auto count = static_cast<std::uint64_t>(l.weight_count());
    if (l.weight_len != count * 4) fail("weight_len does not match dimensions");
    if (l.weight_offset > blob_size || blob_size - l.weight_offset < l.weight_len)
        fail("weight range exceeds data file");
}

} // namespace

ModelManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest " + path.string());

    nlohmann::json j;
    ModelManifest m;
    try {
        j = nlohmann::json::parse(in);
        m.model_name = j.at("model_name").get<std::string>();
        m.data_file = path.parent_path() / j.at("data_file").get<std::string>();
        for (const auto& jl : j.at("layers")) {
            LayerSpec l;
            l.name = jl.at("name").get<std::string>();
            l.kind = parse_kind(jl.at("kind").get<std::string>());
            l.out_channels = jl.at("out_channels").get<int>();
            l.in_channels = jl.at("in_channels").get<int>();
            l.kernel_h = jl.at("kernel_h").get<int>();
            l.kernel_w = jl.at("kernel_w").get<int>();
            l.input_h = jl.at("input_h").get<int>();
            l.input_w = jl.at("input_w").get<int>();
            l.stride = jl.at("stride").get<int>();
            l.weight_offset = jl.at("weight_offset").get<std::uint64_t>();
            l.weight_len = jl.at("weight_len").get<std::uint64_t>();
            m.layers.push_back(std::move(l));
        }
        if (j.contains("scale_policy")) {
            for (const auto& [name, js] : j.at("scale_policy").items())
                m.scale_policy[name] = js.get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }

    if (m.layers.empty()) throw ParseError("manifest has no layers");

    std::error_code ec;
    const auto blob_size = std::filesystem::file_size(m.data_file, ec);
    if (ec) throw ParseError("cannot stat data file " + m.data_file.string());

    std::set<std::string> names;
    for (const auto& l : m.layers) {
        if (!names.insert(l.name).second)
            throw ParseError("duplicate layer name '" + l.name + "'");
        validate_layer(l, blob_size);
    }
    for (const auto& [name, s] : m.scale_policy) {
        if (!names.count(name)) throw ParseError("scale for unknown layer '" + name + "'");
        if (!(s > 0.0) || !std::isfinite(s))
            throw RangeError("scale for layer '" + name + "' must be finite and positive");
    }
    return m;
}

QuantizedWeights reference_quantize(std::span<const float> values, int bits, double scale) {
    if (bits < 2 || bits > 8) throw RangeError("weight bit width must be in [2, 8]");
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw RangeError("quantization scale must be finite and positive");
    const int qmax = (1 << (bits - 1)) - 1;
    QuantizedWeights out;
    out.scale = scale;
    out.weights.reserve(values.size());
    for (float v : values) {
        if (!std::isfinite(v)) throw RangeError("non-finite weight value");
        const double mag = std::floor(std::abs(double(v)) / scale + 0.5);
        SignMagWeight w;
        w.sign = v < 0.0f ? -1 : 1;
        w.magnitude = static_cast<std::uint8_t>(std::min(mag, double(qmax)));
        out.weights.push_back(w);
    }
    return out;
}

QuantizedWeights reference_quantize(std::span<const float> values, int bits) {
    double maxabs = 0.0;
    for (float v : values) {
        if (!std::isfinite(v)) throw RangeError("non-finite weight value");
        maxabs = std::max(maxabs, std::abs(double(v)));
    }
    if (bits < 2 || bits > 8) throw RangeError("weight bit width must be in [2, 8]");
    const int qmax = (1 << (bits - 1)) - 1;
    const double scale = maxabs == 0.0 ? 1.0 : maxabs / qmax;
    return reference_quantize(values, bits, scale);
}

std::vector<float> read_layer_floats(const ModelManifest& manifest, const LayerSpec& spec) {
    std::ifstream in(manifest.data_file, std::ios::binary);
    if (!in) throw ParseError("cannot open data file " + manifest.data_file.string());
    in.seekg(static_cast<std::streamoff>(spec.weight_offset));
    std::vector<unsigned char> raw(spec.weight_len);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw ParseError("short read in data file for layer '" + spec.name + "'");

    std::vector<float> out(raw.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = std::uint32_t(raw[4 * i]) | std::uint32_t(raw[4 * i + 1]) << 8 |
                          std::uint32_t(raw[4 * i + 2]) << 16 | std::uint32_t(raw[4 * i + 3]) << 24;
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

LayerTensor load_layer_tensor(const ModelManifest& manifest, std::size_t layer_index, int bits) {
    if (layer_index >= manifest.layers.size())
        throw RangeError("layer index out of range");
    const LayerSpec& spec = manifest.layers[layer_index];
    const auto floats = read_layer_floats(manifest, spec);

    QuantizedWeights q;
    if (auto it = manifest.scale_policy.find(spec.name); it != manifest.scale_policy.end())
        q = reference_quantize(floats, bits, it->second);
    else
        q = reference_quantize(floats, bits);

    LayerTensor t;
    t.spec = spec;
    t.weights = std::move(q.weights);
    t.scale = q.scale;
    t.bits = bits;
    return t;
}

std::vector<LayerTensor> load_all_tensors(const ModelManifest& manifest, int bits) {
    std::vector<LayerTensor> out;
    out.reserve(manifest.layers.size());
    for (std::size_t i = 0; i < manifest.layers.size(); ++i)
        out.push_back(load_layer_tensor(manifest, i, bits));
    return out;
}

} // namespace swis
