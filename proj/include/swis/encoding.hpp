#pragma once

#include <cstdint>
#include <vector>

#include "swis/signmag.hpp"

namespace swis {

enum class ShiftMode { sparse, consecutive };

/// The supporting vector of a weight group: the active bit positions every
/// weight in the group may use. Consecutive mode restricts the positions to a
/// contiguous window so only the window offset has to be stored.
struct ShiftSet {
    std::vector<std::uint8_t> shifts; // strictly increasing, each in [0, bits)
    ShiftMode mode = ShiftMode::sparse;

    int count() const { return static_cast<int>(shifts.size()); }

    friend bool operator==(const ShiftSet&, const ShiftSet&) = default;
};

/// Throws RangeError if the shift list is empty, not strictly increasing,
/// out of [0, bits), or not contiguous in consecutive mode.
void validate(const ShiftSet& set, int bits);

/// One quantized group: shared shift set plus per-weight signs and mask bits.
/// masks[i] bit j selects shift_set.shifts[j] for weight i.
struct GroupEncoding {
    ShiftSet shift_set;
    std::vector<std::int8_t> signs;
    std::vector<std::uint8_t> masks;

    int group_size() const { return static_cast<int>(signs.size()); }

    friend bool operator==(const GroupEncoding&, const GroupEncoding&) = default;
};

void validate(const GroupEncoding& enc, int bits);

/// Magnitude selected by a mask over a shift set: sum of 2^shifts[j] over set
/// mask bits. Always < 2^bits for a valid set.
int decoded_magnitude(const ShiftSet& set, std::uint8_t mask);

/// Reconstructed signed weight values of a group.
std::vector<int> dequant_group(const GroupEncoding& enc);

} // namespace swis
