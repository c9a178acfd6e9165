#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "swis/quantize.hpp"

namespace swis {

struct QuantizedModel {
    int bits = kDefaultBits;
    std::vector<QuantizedLayer> layers;
};

/// SWISQ1 container: magic "SWISQ1", u8 format version, u8 bit width,
/// u32 layer count, then per layer the name, geometry, scale, mode, group
/// size, per-filter shift counts and bit-packed group records (shift values
/// in 3 bits each for sparse sets, one 3-bit window offset otherwise, then
/// sign bits and mask bits; each record padded to a byte). All integers
/// little-endian, bit fields LSB-first within a byte.
std::vector<std::uint8_t> encode_quantized(const QuantizedModel& model);
QuantizedModel decode_quantized(std::span<const std::uint8_t> bytes);

void save_quantized(const std::filesystem::path& path, const QuantizedModel& model);

/// Throws VersionError on a bad magic or unsupported version, ParseError on
/// truncation or any inconsistent field (group counts, shift ordering,
/// ranges), naming the offending layer and group where possible.
QuantizedModel load_quantized(const std::filesystem::path& path);

/// Bits of storage one group costs in the accounting the compression ratios
/// use: signs and masks always, 3 bits per shift value for sparse sets, a
/// single 3-bit offset for per-group windows, nothing for the fixed window.
int group_record_bits(QuantMode mode, int group_size, int shift_count);

/// Tight (unpadded) packed size of one layer's groups under that accounting.
std::int64_t packed_weight_bytes(const QuantizedLayer& layer);

} // namespace swis
