#include "swis/analytics.hpp"

#include <algorithm>
#include <bit>

#include "swis/errors.hpp"

namespace swis {

std::int64_t binomial(int n, int k) {
    if (n < 0 || k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

namespace {

void check_prob_args(int shift_count, int bits) {
    if (bits < 1 || bits > 8) throw RangeError("bit width must be in [1, 8]");
    if (shift_count < 0 || shift_count > bits)
        throw RangeError("shift count must be in [0, bits]");
}

} // namespace

Rational p_swis(int shift_count, int bits) {
    check_prob_args(shift_count, bits);
    std::int64_t num = 0;
    for (int n = 0; n <= shift_count; ++n) num += binomial(bits, n);
    return Rational(num, std::int64_t(1) << bits);
}

Rational p_swisc(int shift_count, int bits) {
    check_prob_args(shift_count, bits);
    if (shift_count == 0) return Rational(1, std::int64_t(1) << bits); // only the zero value
    std::int64_t num = 0;
    for (int n = 0; n <= shift_count; ++n)
        num += binomial(shift_count, n) * (bits + 1 - shift_count) -
               (bits - shift_count) * binomial(shift_count - 1, n);
    return Rational(num, std::int64_t(1) << bits);
}

Rational p_layerwise(int shift_count, int bits) {
    check_prob_args(shift_count, bits);
    std::int64_t num = 0;
    for (int n = 0; n <= shift_count; ++n) num += binomial(shift_count, n);
    return Rational(num, std::int64_t(1) << bits);
}

Rational lossless_probability(QuantMode method, int shift_count, int bits) {
    switch (method) {
    case QuantMode::swis:
        return p_swis(shift_count, bits);
    case QuantMode::swis_c:
        return p_swisc(shift_count, bits);
    case QuantMode::trunc:
        return p_layerwise(shift_count, bits);
    }
    throw RangeError("unknown mode");
}

Rational brute_force_lossless(QuantMode method, int shift_count, int bits) {
    check_prob_args(shift_count, bits);
    const int total = 1 << bits;
    const int low_mask = (1 << (bits - shift_count)) - 1;
    std::int64_t hits = 0;
    for (int v = 0; v < total; ++v) {
        bool ok = false;
        switch (method) {
        case QuantMode::swis:
            ok = std::popcount(unsigned(v)) <= shift_count;
            break;
        case QuantMode::swis_c: {
            if (v == 0) {
                ok = true;
                break;
            }
            const int msb = std::bit_width(unsigned(v)) - 1;
            const int lsb = std::countr_zero(unsigned(v));
            ok = msb - lsb + 1 <= shift_count;
            break;
        }
        case QuantMode::trunc:
            ok = (v & low_mask) == 0;
            break;
        }
        hits += ok;
    }
    return Rational(hits, total);
}

Rational compression_ratio(QuantMode method, int group_size, int shift_count) {
    if (group_size < 1) throw RangeError("group size must be positive");
    if (shift_count < 1 || shift_count > 8) throw RangeError("shift count must be in [1, 8]");
    const std::int64_t m = group_size;
    const std::int64_t n = shift_count;
    switch (method) {
    case QuantMode::swis:
        return Rational(8 * m, m + 3 * n + m * n);
    case QuantMode::swis_c:
        return Rational(8 * m, m + 3 + m * n);
    case QuantMode::trunc:
        return Rational(8 * m, m + m * n);
    }
    throw RangeError("unknown mode");
}

Rational dpred_compression(const LayerTensor& tensor, int group_size) {
    if (group_size < 1) throw RangeError("group size must be positive");
    const LayerSpec& spec = tensor.spec;
    if (tensor.weights.size() != std::size_t(spec.weight_count()))
        throw RangeError("tensor weight count does not match its dimensions");

    const int positions = spec.kernel_h * spec.kernel_w;
    const int chunks = (spec.in_channels + group_size - 1) / group_size;
    std::int64_t stored_bits = 0;
    std::int64_t group_count = 0;
    for (int f = 0; f < spec.out_channels; ++f) {
        for (int pos = 0; pos < positions; ++pos) {
            const std::int64_t base = (std::int64_t(f) * positions + pos) * spec.in_channels;
            for (int chunk = 0; chunk < chunks; ++chunk) {
                int width = 0;
                for (int lane = 0; lane < group_size; ++lane) {
                    const int c = chunk * group_size + lane;
                    if (c >= spec.in_channels) break;
                    width = std::max(
                        width, int(std::bit_width(
                                   unsigned(tensor.weights[std::size_t(base + c)].magnitude))));
                }
                stored_bits += 3 + group_size + std::int64_t(group_size) * width;
                ++group_count;
            }
        }
    }
    return Rational(8 * group_size * group_count, stored_bits);
}

double layer_rmse(const LayerTensor& tensor, const QuantConfig& cfg) {
    return quantize_tensor(tensor, cfg).stats.rmse_int();
}

std::vector<RmseRow> rmse_report(const LayerTensor& tensor, std::span<const QuantConfig> configs) {
    std::vector<RmseRow> out;
    out.reserve(configs.size());
    for (const QuantConfig& cfg : configs) {
        RmseRow row;
        row.cfg = cfg;
        row.rmse_int = layer_rmse(tensor, cfg);
        row.rmse_real = row.rmse_int * tensor.scale;
        out.push_back(row);
    }
    return out;
}

} // namespace swis
