#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swis/model.hpp"

namespace swis {

// Gaussian-weight stand-ins for common conv nets, so every report can be
// produced without shipping trained weights. A (name, seed) pair fully
// determines the tensor contents.
struct SyntheticModel {
    ModelManifest manifest;
    std::vector<float> weights; // concatenated per-layer blobs
};

std::vector<std::string> synthetic_archs(); // resnet18, mobilenetv2, vgg16

SyntheticModel make_synthetic(const std::string& arch, std::uint64_t seed);

std::vector<LayerTensor> synthetic_tensors(const SyntheticModel& model, int bits = kDefaultBits);

// writes the manifest JSON and the raw float32 blob it points at
void save_synthetic(const SyntheticModel& model, const std::filesystem::path& manifest_path,
                    const std::filesystem::path& data_path);

} // namespace swis
