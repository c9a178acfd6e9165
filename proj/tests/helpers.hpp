#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "swis/model.hpp"
#include "swis/signmag.hpp"

namespace swis::test {

inline std::vector<SignMagWeight> sm(std::initializer_list<int> values) {
    std::vector<SignMagWeight> out;
    out.reserve(values.size());
    for (int v : values) out.push_back(signmag_from_int(v));
    return out;
}

inline LayerSpec make_spec(std::string name, int out_ch, int in_ch, int kh, int kw,
                           int input_h = 0, int input_w = 0, int stride = 1,
                           LayerKind kind = LayerKind::conv) {
    LayerSpec spec;
    spec.name = std::move(name);
    spec.kind = kind;
    spec.out_channels = out_ch;
    spec.in_channels = in_ch;
    spec.kernel_h = kh;
    spec.kernel_w = kw;
    spec.input_h = input_h ? input_h : kh; // default: a single output pixel
    spec.input_w = input_w ? input_w : kw;
    spec.stride = stride;
    spec.weight_len = std::uint64_t(spec.weight_count()) * 4;
    return spec;
}

/// Tensor with explicit integer weights in element order (filter-major,
/// kernel position, then input channel fastest).
inline LayerTensor make_tensor(LayerSpec spec, std::vector<int> values, double scale = 1.0) {
    LayerTensor t;
    t.weights.reserve(values.size());
    for (int v : values) t.weights.push_back(signmag_from_int(v));
    t.spec = std::move(spec);
    t.scale = scale;
    return t;
}

inline LayerTensor random_tensor(LayerSpec spec, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> dist(-255, 255);
    std::vector<int> values(std::size_t(spec.weight_count()));
    for (int& v : values) v = dist(rng);
    return make_tensor(std::move(spec), std::move(values));
}

inline std::vector<SignMagWeight> random_group(int size, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> dist(-255, 255);
    std::vector<SignMagWeight> g(static_cast<std::size_t>(size));
    for (auto& w : g) w = signmag_from_int(dist(rng));
    return g;
}

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("swis-test-" + tag + "-" + std::to_string(++counter) + "-" +
                 std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace swis::test
