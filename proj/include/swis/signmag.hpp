#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>

#include "swis/errors.hpp"

namespace swis {

inline constexpr int kDefaultBits = 8;

/// A weight as an explicit sign and a B-bit magnitude. Zero always carries
/// sign +1 so encodings are unique and directly comparable.
struct SignMagWeight {
    std::int8_t sign = 1;       // +1 or -1
    std::uint8_t magnitude = 0; // < 2^bits, bits <= 8

    int value() const { return static_cast<int>(sign) * static_cast<int>(magnitude); }

    friend bool operator==(const SignMagWeight&, const SignMagWeight&) = default;
};

/// Converts a two's-complement integer to sign-magnitude form.
/// Requires |v| <= 2^bits - 1.
inline SignMagWeight signmag_from_int(int v, int bits = kDefaultBits) {
    const int limit = (1 << bits) - 1;
    if (v > limit || v < -limit) {
        throw RangeError("signmag_from_int: value " + std::to_string(v) +
                         " outside [-" + std::to_string(limit) + ", " + std::to_string(limit) + "]");
    }
    SignMagWeight w;
    w.sign = v < 0 ? -1 : 1;
    w.magnitude = static_cast<std::uint8_t>(std::abs(v));
    return w;
}

} // namespace swis
