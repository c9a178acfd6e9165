#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swis/encoding.hpp"
#include "swis/signmag.hpp"

namespace swis {

/// One group's worth of MAC inputs: unsigned 8-bit activations (post-ReLU
/// convention) against an encoded weight group.
struct MacGroup {
    std::vector<std::uint8_t> activations;
    GroupEncoding encoding;
};

/// Shared-shift group MAC: for each shift, weights whose mask selects it
/// contribute their full activation to a signed column sum, which is then
/// shifted and accumulated. The 32-bit accumulator is exact: the magnitude
/// bound M * 255 * 255 * 8 < 2^31 holds for every valid group (M <= 64).
int eval_swis_mac(const GroupEncoding& enc, std::span<const std::uint8_t> activations);
int eval_swis_mac(const MacGroup& g);

/// Plain integer dot product of activations and decoded weights (oracle).
std::int64_t eval_reference_mac(std::span<const std::uint8_t> activations,
                                std::span<const int> dequantized_weights);

/// Conventional weight-bit-serial MAC over all magnitude bit positions.
int eval_bitserial_mac(std::span<const std::uint8_t> activations,
                       std::span<const SignMagWeight> weights, int bits);

/// Activation-bit-serial MAC over the top act_bits positions only; equals a
/// dot product against activations truncated to act_bits. act_bits 0 gives 0.
int eval_bitserial_trunc_mac(std::span<const std::uint8_t> activations,
                             std::span<const SignMagWeight> weights, int act_bits);

enum class PeMode { single_shift, double_shift };

/// Timing and per-operation energy of one processing element. A double-shift
/// element retires two shifts per cycle, so odd counts waste half a slot.
struct PeModel {
    PeMode mode = PeMode::single_shift;
    int group_size = 4;
    int fill_drain_overhead = 0; // extra cycles per tile beyond the array skew
    double mask_add_pass_pj = 0.0;
    double shift_accumulate_pj = 0.0;
    double pe_buffer_rw_pj = 0.0;
};

void validate(const PeModel& pe);

/// Cycles one processing element needs per group of shift_count shifts.
int group_cycles(PeMode mode, int shift_count);
int group_cycles(const PeModel& pe, int shift_count);

} // namespace swis
