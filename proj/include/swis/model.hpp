#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "swis/signmag.hpp"

namespace swis {

enum class LayerKind { conv, depthwise_conv };

/// Geometry of one convolutional layer plus the byte range of its raw
/// (real-valued, little-endian float32) tensor inside the model data blob.
/// Tensor element order is out_channel-major, then kernel row, kernel column,
/// input channel fastest, so depthwise groups are contiguous.
struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::conv;
    int out_channels = 0;
    int in_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int input_h = 0;
    int input_w = 0;
    int stride = 1;
    std::uint64_t weight_offset = 0;
    std::uint64_t weight_len = 0;

    std::int64_t weight_count() const {
        return std::int64_t(out_channels) * in_channels * kernel_h * kernel_w;
    }
    int reduction_size() const { return in_channels * kernel_h * kernel_w; }
    int out_h() const { return (input_h - kernel_h) / stride + 1; }
    int out_w() const { return (input_w - kernel_w) / stride + 1; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelManifest {
    std::string model_name;
    std::filesystem::path data_file; // resolved relative to the manifest
    std::vector<LayerSpec> layers;
    std::map<std::string, double> scale_policy; // optional fixed per-layer scale
};

/// Parses and validates a manifest JSON file. Throws ParseError on schema
/// problems or duplicate layer names, RangeError when a tensor byte range
/// falls outside the data blob or dimensions are inconsistent.
ModelManifest load_manifest(const std::filesystem::path& path);

/// One layer's weights in the integer sign-magnitude domain. scale is the
/// dequantization factor: real weight ~= scale * sign * magnitude.
struct LayerTensor {
    LayerSpec spec;
    std::vector<SignMagWeight> weights; // spec.weight_count() entries
    double scale = 1.0;
    int bits = kDefaultBits;
};

struct QuantizedWeights {
    std::vector<SignMagWeight> weights;
    double scale = 1.0;
};

/// Symmetric linear quantization of a real tensor into sign-magnitude form.
/// scale = max|w| / (2^(bits-1) - 1); magnitudes round half away from zero
/// and clamp at 2^(bits-1) - 1. An all-zero tensor gets scale 1.0.
QuantizedWeights reference_quantize(std::span<const float> values, int bits = kDefaultBits);

/// As reference_quantize but with a caller-supplied positive scale.
QuantizedWeights reference_quantize(std::span<const float> values, int bits, double scale);

/// Reads one layer's float tensor from the manifest's data blob and
/// quantizes it (using the manifest's fixed scale when one is given).
LayerTensor load_layer_tensor(const ModelManifest& manifest, std::size_t layer_index,
                              int bits = kDefaultBits);

std::vector<LayerTensor> load_all_tensors(const ModelManifest& manifest, int bits = kDefaultBits);

/// Raw float payload of one layer (little-endian float32 blob section).
std::vector<float> read_layer_floats(const ModelManifest& manifest, const LayerSpec& spec);

} // namespace swis
