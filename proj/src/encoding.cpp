#include "swis/encoding.hpp"

#include <string>

namespace swis {

void validate(const ShiftSet& set, int bits) {
    if (set.shifts.empty()) throw RangeError("ShiftSet: empty shift list");
    if (set.count() > bits) throw RangeError("ShiftSet: more shifts than bit positions");
    for (std::size_t j = 0; j < set.shifts.size(); ++j) {
        if (set.shifts[j] >= bits) {
            throw RangeError("ShiftSet: shift " + std::to_string(set.shifts[j]) +
                             " outside [0, " + std::to_string(bits) + ")");
        }
        if (j > 0 && set.shifts[j] <= set.shifts[j - 1]) {
            throw RangeError("ShiftSet: shifts not strictly increasing");
        }
    }
    if (set.mode == ShiftMode::consecutive) {
        for (std::size_t j = 1; j < set.shifts.size(); ++j) {
            if (set.shifts[j] != set.shifts[j - 1] + 1) {
                throw RangeError("ShiftSet: consecutive mode requires a contiguous window");
            }
        }
    }
}

void validate(const GroupEncoding& enc, int bits) {
    validate(enc.shift_set, bits);
    if (enc.signs.empty()) throw RangeError("GroupEncoding: empty group");
    if (enc.signs.size() != enc.masks.size()) {
        throw RangeError("GroupEncoding: signs/masks length mismatch");
    }
    const int n = enc.shift_set.count();
    for (std::size_t i = 0; i < enc.masks.size(); ++i) {
        if (enc.masks[i] >> n) throw RangeError("GroupEncoding: mask uses undefined shift lanes");
        if (enc.signs[i] != 1 && enc.signs[i] != -1) {
            throw RangeError("GroupEncoding: sign must be +1 or -1");
        }
    }
}

int decoded_magnitude(const ShiftSet& set, std::uint8_t mask) {
    int mag = 0;
    for (int j = 0; j < set.count(); ++j) {
        if (mask >> j & 1) mag += 1 << set.shifts[j];
    }
    return mag;
}

std::vector<int> dequant_group(const GroupEncoding& enc) {
    std::vector<int> values(enc.signs.size());
    for (std::size_t i = 0; i < enc.signs.size(); ++i) {
        values[i] = enc.signs[i] * decoded_magnitude(enc.shift_set, enc.masks[i]);
    }
    return values;
}

} // namespace swis
