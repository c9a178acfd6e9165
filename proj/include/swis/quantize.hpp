#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "swis/encoding.hpp"
#include "swis/model.hpp"

namespace swis {

enum class QuantMode { swis, swis_c, trunc };

/// Group error objective. With per-lane errors e_i = original_i - decoded_i,
/// cost = (alpha * (sum e_i)^2 + sum e_i^2) / M; alpha == 0 is plain MSE.
struct Metric {
    double alpha = 1.0;
};

/// Per-lane signed errors, original minus decoded.
std::vector<int> encoding_errors(std::span<const SignMagWeight> group, const GroupEncoding& enc);

std::int64_t signed_error(std::span<const int> errors);
double mse(std::span<const int> errors);
double msepp(std::span<const int> errors, double alpha);
double metric_cost(const Metric& metric, std::span<const int> errors);

std::int64_t signed_error(std::span<const SignMagWeight> group, const GroupEncoding& enc);
double mse(std::span<const SignMagWeight> group, const GroupEncoding& enc);
double msepp(std::span<const SignMagWeight> group, const GroupEncoding& enc, double alpha);

/// All candidate shift sets for a bit width, in lexicographic order of the
/// shift values; consecutive mode yields the sliding windows by offset.
std::vector<ShiftSet> enumerate_shift_sets(int bits, int count, ShiftMode mode);

/// Nearest representable magnitude under a shift set. Ties between two
/// representable values resolve to the smaller one.
std::uint8_t fit_mask(const ShiftSet& set, std::uint8_t magnitude);

/// Encodes a group against a fixed shift set, nearest mask per lane.
GroupEncoding fit_masks(std::span<const SignMagWeight> group, const ShiftSet& set);

/// Precomputed candidate sets and per-magnitude nearest-mask tables for one
/// (bits, count, mode). Shared across the groups of a layer.
class ShiftEnumerator {
public:
    ShiftEnumerator(int bits, int count, ShiftMode mode);

    int bits() const { return bits_; }
    int count() const { return count_; }
    const std::vector<ShiftSet>& candidates() const { return sets_; }
    std::uint8_t best_mask(std::size_t set_index, std::uint8_t magnitude) const {
        return mask_lut_[set_index][magnitude];
    }
    int best_decoded(std::size_t set_index, std::uint8_t magnitude) const {
        return dec_lut_[set_index][magnitude];
    }

private:
    int bits_;
    int count_;
    std::vector<ShiftSet> sets_;
    std::vector<std::array<std::uint8_t, 256>> mask_lut_;
    std::vector<std::array<std::int16_t, 256>> dec_lut_;
};

struct GroupSelection {
    std::size_t set_index = 0;
    GroupEncoding encoding;
    std::vector<int> errors; // original - decoded, per lane
    double cost = 0.0;
};

/// Picks the candidate set minimizing the metric for one group; cost ties
/// keep the earlier candidate (lexicographically smaller set / offset).
GroupSelection select_group_encoding(std::span<const SignMagWeight> group,
                                     const ShiftEnumerator& sets, const Metric& metric);

/// Cost of the best candidate only, no encoding materialized.
double group_cost(std::span<const SignMagWeight> group, const ShiftEnumerator& sets,
                  const Metric& metric);

/// Cost of the fixed MSB window for one group.
double trunc_group_cost(std::span<const SignMagWeight> group, int bits, int count,
                        const Metric& metric);

/// Best encoding over all C(bits, count) sparse shift sets.
GroupEncoding select_shifts_swis(std::span<const SignMagWeight> group, int count,
                                 const Metric& metric, int bits = kDefaultBits);

/// Best encoding over the bits - count + 1 consecutive windows.
GroupEncoding select_shifts_swisc(std::span<const SignMagWeight> group, int count,
                                  const Metric& metric, int bits = kDefaultBits);

/// Rounds an 8-bit-domain magnitude into the top-count bit window by adding
/// half a step and truncating; the result clamps at the window maximum.
std::uint8_t trunc_mask(std::uint8_t magnitude, int bits, int count);

/// Fixed MSB-window encoding of a group (offset bits - count, consecutive).
GroupEncoding trunc_group(std::span<const SignMagWeight> group, int bits, int count);

/// Keeps the top count bits of an 8-bit activation, zeroing the rest.
std::uint8_t truncate_activation(std::uint8_t a, int count);

struct QuantConfig {
    QuantMode mode = QuantMode::swis;
    int shift_count = 2; // N, shifts shared per group
    int group_size = 4;  // M, weights per group
    int bits = kDefaultBits;
    double alpha = 1.0;
};

void validate(const QuantConfig& cfg);

/// Groups within one filter: input channels are chunked group_size at a time
/// at each kernel position, short tails zero-padded.
int groups_per_filter(const LayerSpec& spec, int group_size);
std::vector<SignMagWeight> extract_group(const LayerTensor& tensor, int filter, int group_index,
                                         int group_size);

struct LayerQuantStats {
    std::int64_t signed_error_sum = 0; // sum of (original - decoded)
    std::int64_t squared_error_sum = 0;
    std::int64_t weight_count = 0;

    double rmse_int() const;
    double rmse_real(double scale) const { return rmse_int() * scale; }
};

struct QuantizedLayer {
    LayerSpec spec;
    double scale = 1.0;
    int bits = kDefaultBits;
    QuantMode mode = QuantMode::swis;
    int group_size = 0;
    int groups_per_filter = 0;
    std::vector<std::uint8_t> filter_shifts; // shift count per filter
    std::vector<GroupEncoding> groups;       // filter-major
    LayerQuantStats stats;

    const GroupEncoding& group(int filter, int index) const {
        return groups[std::size_t(filter) * std::size_t(groups_per_filter) + std::size_t(index)];
    }
};

QuantizedLayer quantize_tensor(const LayerTensor& tensor, const QuantConfig& cfg);

/// As above with a per-filter shift budget (one entry per output channel).
QuantizedLayer quantize_tensor(const LayerTensor& tensor, const QuantConfig& cfg,
                               std::span<const int> filter_shift_counts);

/// One fixed MSB window for the whole layer.
QuantizedLayer quantize_layer_trunc(const LayerTensor& tensor, int count, int group_size = 4);

} // namespace swis
