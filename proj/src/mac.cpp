#include "swis/mac.hpp"

#include <cmath>

#include "swis/errors.hpp"

namespace swis {

int eval_swis_mac(const GroupEncoding& enc, std::span<const std::uint8_t> activations) {
    if (activations.size() != std::size_t(enc.group_size()))
        throw RangeError("activation count does not match group size");
    int acc = 0;
    for (int j = 0; j < enc.shift_set.count(); ++j) {
        int column = 0;
        for (std::size_t i = 0; i < activations.size(); ++i) {
            if (enc.masks[i] >> j & 1) column += int(enc.signs[i]) * int(activations[i]);
        }
        acc += column << enc.shift_set.shifts[std::size_t(j)];
    }
    return acc;
}

int eval_swis_mac(const MacGroup& g) {
    return eval_swis_mac(g.encoding, g.activations);
}

std::int64_t eval_reference_mac(std::span<const std::uint8_t> activations,
                                std::span<const int> dequantized_weights) {
    if (activations.size() != dequantized_weights.size())
        throw RangeError("activation count does not match weight count");
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < activations.size(); ++i)
        acc += std::int64_t(dequantized_weights[i]) * std::int64_t(activations[i]);
    return acc;
}

int eval_bitserial_mac(std::span<const std::uint8_t> activations,
                       std::span<const SignMagWeight> weights, int bits) {
    if (activations.size() != weights.size())
        throw RangeError("activation count does not match weight count");
    if (bits < 1 || bits > 8) throw RangeError("bit width must be in [1, 8]");
    int acc = 0;
    for (int b = 0; b < bits; ++b) {
        int column = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i].magnitude >> b & 1) column += int(weights[i].sign) * int(activations[i]);
        }
        acc += column << b;
    }
    return acc;
}

int eval_bitserial_trunc_mac(std::span<const std::uint8_t> activations,
                             std::span<const SignMagWeight> weights, int act_bits) {
    if (activations.size() != weights.size())
        throw RangeError("activation count does not match weight count");
    if (act_bits < 0 || act_bits > 8) throw RangeError("activation bit count must be in [0, 8]");
    int acc = 0;
    for (int b = 8 - act_bits; b < 8; ++b) {
        int column = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (activations[i] >> b & 1) column += weights[i].value();
        }
        acc += column << b;
    }
    return acc;
}

void validate(const PeModel& pe) {
    if (pe.group_size < 1 || pe.group_size > 64)
        throw RangeError("group size must be in [1, 64]");
    if (pe.fill_drain_overhead < 0) throw RangeError("fill/drain overhead must be non-negative");
    if (!(pe.mask_add_pass_pj >= 0.0) || !(pe.shift_accumulate_pj >= 0.0) ||
        !(pe.pe_buffer_rw_pj >= 0.0) || !std::isfinite(pe.mask_add_pass_pj) ||
        !std::isfinite(pe.shift_accumulate_pj) || !std::isfinite(pe.pe_buffer_rw_pj))
        throw RangeError("energy constants must be finite and non-negative");
}

int group_cycles(PeMode mode, int shift_count) {
    if (shift_count < 1 || shift_count > 8) throw RangeError("shift count must be in [1, 8]");
    return mode == PeMode::single_shift ? shift_count : (shift_count + 1) / 2;
}

int group_cycles(const PeModel& pe, int shift_count) {
    return group_cycles(pe.mode, shift_count);
}

} // namespace swis
