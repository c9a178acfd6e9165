#include "doctest.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "swis/errors.hpp"
#include "swis/model.hpp"
#include "swis/synthetic.hpp"

using namespace swis;
using swis::test::TempDir;

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

void write_blob(const std::filesystem::path& path, std::size_t floats) {
    std::ofstream out(path, std::ios::binary);
    for (std::size_t i = 0; i < floats; ++i) {
        const float v = 0.25f * (float(i % 7) - 3.0f);
        char bytes[4];
        std::memcpy(bytes, &v, 4);
        out.write(bytes, 4);
    }
}

std::string manifest_json(const std::string& layers, const std::string& extra = "") {
    return std::string("{\"model_name\":\"tiny\",\"data_file\":\"weights.bin\",") + extra +
           "\"layers\":[" + layers + "]}";
}

std::string layer_json(const std::string& name, int out_ch, int in_ch, int k, int input,
                       std::uint64_t offset, const std::string& kind = "conv") {
    const std::uint64_t len = std::uint64_t(out_ch) * in_ch * k * k * 4;
    return "{\"name\":\"" + name + "\",\"kind\":\"" + kind +
           "\",\"out_channels\":" + std::to_string(out_ch) +
           ",\"in_channels\":" + std::to_string(in_ch) + ",\"kernel_h\":" + std::to_string(k) +
           ",\"kernel_w\":" + std::to_string(k) + ",\"input_h\":" + std::to_string(input) +
           ",\"input_w\":" + std::to_string(input) + ",\"stride\":1,\"weight_offset\":" +
           std::to_string(offset) + ",\"weight_len\":" + std::to_string(len) + "}";
}

} // namespace

TEST_CASE("layer spec geometry helpers") {
    LayerSpec l = swis::test::make_spec("s", 64, 3, 7, 7, 229, 229, 2);
    CHECK(l.weight_count() == 64 * 3 * 7 * 7);
    CHECK(l.reduction_size() == 3 * 7 * 7);
    CHECK(l.out_h() == 112); // valid conv: (229 - 7) / 2 + 1
    CHECK(l.out_w() == 112);
}

TEST_CASE("reference_quantize picks a symmetric scale and rounds half away") {
    const std::vector<float> values{-1.0f, 0.5f, 1.0f};
    auto q = reference_quantize(values);
    CHECK(q.scale == doctest::Approx(1.0 / 127.0));
    REQUIRE(q.weights.size() == 3);
    CHECK(q.weights[0] == SignMagWeight{-1, 127});
    CHECK(q.weights[1] == SignMagWeight{1, 64}); // 63.5 rounds up
    CHECK(q.weights[2] == SignMagWeight{1, 127});
}

TEST_CASE("reference_quantize handles degenerate and explicit scales") {
    const std::vector<float> zeros{0.0f, 0.0f};
    auto q = reference_quantize(zeros);
    CHECK(q.scale == 1.0);
    CHECK(q.weights[0].magnitude == 0);
    CHECK(q.weights[0].sign == 1);

    // explicit scale clamps out-of-range values at the magnitude ceiling
    const std::vector<float> big{10.0f, -0.5f};
    auto qc = reference_quantize(big, 8, 0.01);
    CHECK(qc.weights[0].magnitude == 127);
    CHECK(qc.weights[1] == SignMagWeight{-1, 50});

    CHECK_THROWS_AS(reference_quantize(big, 1), RangeError);
    CHECK_THROWS_AS(reference_quantize(big, 9), RangeError);
    CHECK_THROWS_AS(reference_quantize(big, 8, 0.0), RangeError);
    const std::vector<float> nan{std::numeric_limits<float>::quiet_NaN()};
    CHECK_THROWS_AS(reference_quantize(nan), RangeError);
}

TEST_CASE("reference_quantize at narrow widths") {
    const std::vector<float> values{-3.0f, 3.0f, 1.0f};
    auto q = reference_quantize(values, 3); // qmax = 3
    CHECK(q.scale == doctest::Approx(1.0));
    CHECK(q.weights[0] == SignMagWeight{-1, 3});
    CHECK(q.weights[2] == SignMagWeight{1, 1});
}

TEST_CASE("load_manifest round-trips a well-formed manifest") {
    TempDir dir("manifest");
    write_blob(dir.path() / "weights.bin", 2 * 3 * 3 * 3 + 4 * 2 * 1 * 1);
    write_file(dir.path() / "m.json",
               manifest_json(layer_json("a", 2, 3, 3, 8, 0) + "," +
                                 layer_json("b", 4, 2, 1, 6, 2 * 3 * 3 * 3 * 4),
                             "\"scale_policy\":{\"b\":0.5},"));

    auto m = load_manifest(dir.path() / "m.json");
    CHECK(m.model_name == "tiny");
    CHECK(m.data_file == dir.path() / "weights.bin");
    REQUIRE(m.layers.size() == 2);
    CHECK(m.layers[0].name == "a");
    CHECK(m.layers[0].kind == LayerKind::conv);
    CHECK(m.layers[0].out_channels == 2);
    CHECK(m.layers[1].weight_offset == 216);
    CHECK(m.scale_policy.at("b") == 0.5);

    // the policy pins layer b's scale; layer a derives its own
    auto tensors = load_all_tensors(m);
    REQUIRE(tensors.size() == 2);
    CHECK(tensors[1].scale == 0.5);
    CHECK(tensors[0].bits == 8);
    CHECK(tensors[0].weights.size() == std::size_t(m.layers[0].weight_count()));

    auto floats = read_layer_floats(m, m.layers[0]);
    CHECK(floats.size() == 54);
    CHECK(floats[0] == doctest::Approx(-0.75)); // first synthetic blob value
}

TEST_CASE("load_manifest rejects schema and range problems") {
    TempDir dir("badmanifest");
    write_blob(dir.path() / "weights.bin", 64);

    write_file(dir.path() / "missing.json", "{\"model_name\":\"x\"}");
    CHECK_THROWS_AS(load_manifest(dir.path() / "missing.json"), ParseError);

    write_file(dir.path() / "nolayers.json", manifest_json(""));
    CHECK_THROWS_AS(load_manifest(dir.path() / "nolayers.json"), ParseError);

    write_file(dir.path() / "dup.json",
               manifest_json(layer_json("a", 1, 2, 2, 4, 0) + "," +
                             layer_json("a", 1, 2, 2, 4, 32)));
    CHECK_THROWS_AS(load_manifest(dir.path() / "dup.json"), ParseError);

    write_file(dir.path() / "kind.json",
               manifest_json(layer_json("a", 1, 2, 2, 4, 0, "linear")));
    CHECK_THROWS_AS(load_manifest(dir.path() / "kind.json"), ParseError);

    // byte range past the end of the blob
    write_file(dir.path() / "range.json", manifest_json(layer_json("a", 4, 4, 2, 4, 64)));
    CHECK_THROWS_AS(load_manifest(dir.path() / "range.json"), RangeError);

    // depthwise layers carry one input channel per filter
    write_file(dir.path() / "dw.json",
               manifest_json(layer_json("a", 2, 3, 2, 4, 0, "depthwise-conv")));
    CHECK_THROWS_AS(load_manifest(dir.path() / "dw.json"), RangeError);

    // input smaller than the kernel leaves no output pixels
    write_file(dir.path() / "small.json", manifest_json(layer_json("a", 1, 2, 4, 3, 0)));
    CHECK_THROWS_AS(load_manifest(dir.path() / "small.json"), RangeError);

    write_file(dir.path() / "scale.json",
               manifest_json(layer_json("a", 1, 2, 2, 4, 0),
                             "\"scale_policy\":{\"ghost\":0.5},"));
    CHECK_THROWS_AS(load_manifest(dir.path() / "scale.json"), ParseError);

    CHECK_THROWS_AS(load_manifest(dir.path() / "absent.json"), ParseError);
}

TEST_CASE("synthetic models are deterministic in (name, seed)") {
    auto a = make_synthetic("mobilenetv2", 7);
    auto b = make_synthetic("mobilenetv2", 7);
    auto c = make_synthetic("mobilenetv2", 8);
    CHECK(a.weights == b.weights);
    CHECK(a.weights != c.weights);
    CHECK(a.manifest.model_name == "mobilenetv2-synthetic");
    CHECK_THROWS_AS(make_synthetic("alexnet", 1), RangeError);
}

TEST_CASE("synthetic architectures have coherent geometry") {
    for (const std::string& arch : synthetic_archs()) {
        auto model = make_synthetic(arch, 1);
        std::uint64_t expected_offset = 0;
        for (const LayerSpec& l : model.manifest.layers) {
            CHECK(l.weight_offset == expected_offset);
            CHECK(l.weight_len == std::uint64_t(l.weight_count()) * 4);
            CHECK(l.out_h() >= 1);
            if (l.kind == LayerKind::depthwise_conv) CHECK(l.in_channels == 1);
            expected_offset += l.weight_len;
        }
        CHECK(model.weights.size() * 4 == expected_offset);
    }

    // first stage output maps match the usual 224-input pyramids
    auto resnet = make_synthetic("resnet18", 1);
    CHECK(resnet.manifest.layers.front().out_h() == 112);
    CHECK(resnet.manifest.layers.size() == 20);
}

TEST_CASE("saved synthetic models reload to identical tensors") {
    TempDir dir("synth");
    auto model = make_synthetic("mobilenetv2", 42);
    save_synthetic(model, dir.path() / "model.json", dir.path() / "model.bin");

    auto manifest = load_manifest(dir.path() / "model.json");
    REQUIRE(manifest.layers.size() == model.manifest.layers.size());
    auto from_disk = load_all_tensors(manifest);
    auto direct = synthetic_tensors(model);
    REQUIRE(from_disk.size() == direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
        CHECK(from_disk[i].weights == direct[i].weights);
        CHECK(from_disk[i].scale == doctest::Approx(direct[i].scale));
        CHECK(from_disk[i].spec == direct[i].spec);
    }
}
