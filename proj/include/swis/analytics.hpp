#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swis/model.hpp"
#include "swis/quantize.hpp"
#include "swis/rational.hpp"

namespace swis {

/// C(n, k) with the extended convention: 0 whenever k < 0, k > n or n < 0.
std::int64_t binomial(int n, int k);

/// Probability that a uniformly random bits-wide magnitude has at most
/// shift_count set bits (cumulative binomial over bit patterns).
Rational p_swis(int shift_count, int bits = kDefaultBits);

/// Probability that all set bits fit one consecutive window of shift_count
/// positions, counting window placements without double-counting.
Rational p_swisc(int shift_count, int bits = kDefaultBits);

/// Probability that all set bits fall in one fixed window shared layer-wide.
Rational p_layerwise(int shift_count, int bits = kDefaultBits);

/// Dispatch to the closed form for a quantization mode (trunc = fixed window).
Rational lossless_probability(QuantMode method, int shift_count, int bits = kDefaultBits);

/// Same quantity by exhaustive enumeration of all 2^bits magnitudes: a value
/// counts when some admissible shift set covers its set bits.
Rational brute_force_lossless(QuantMode method, int shift_count, int bits = kDefaultBits);

/// Weight storage compression versus 8-bit values, per group of size
/// group_size: one sign bit per weight, 3 bits per shift value (sparse) or
/// 3 bits for the window offset (consecutive), one mask bit per weight per
/// shift. The fixed-window mode stores no per-group shift data.
Rational compression_ratio(QuantMode method, int group_size, int shift_count);

/// Per-group width profiling baseline: each group stores a 3-bit width
/// field, one sign bit per weight and max-magnitude-width bits per weight.
Rational dpred_compression(const LayerTensor& tensor, int group_size);

/// Integer-domain RMSE after quantizing one layer under cfg.
double layer_rmse(const LayerTensor& tensor, const QuantConfig& cfg);

struct RmseRow {
    QuantConfig cfg;
    double rmse_int = 0.0;
    double rmse_real = 0.0; // integer RMSE scaled into the source domain
};

/// Runs the quantizer once per config, rows in the given order.
std::vector<RmseRow> rmse_report(const LayerTensor& tensor, std::span<const QuantConfig> configs);

} // namespace swis
