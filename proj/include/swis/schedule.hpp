#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swis/errors.hpp"
#include "swis/mac.hpp"
#include "swis/model.hpp"
#include "swis/quantize.hpp"
#include "swis/rational.hpp"

namespace swis {

/// The requested average shift count cannot be met exactly. what() names the
/// nearest averages that can.
struct InfeasibleTargetError : RangeError {
    using RangeError::RangeError;
};

struct ScheduleTarget {
    Rational target_avg;     // average shifts per weight, exact
    PeMode pe_mode = PeMode::single_shift;
    int sa_cols = 8;         // filters scheduled simultaneously
    std::vector<int> allowed_shifts; // empty picks the defaults for pe_mode
    QuantMode mode = QuantMode::swis;
    int group_size = 4;
    int bits = kDefaultBits;
};

/// Every shift count from 1 to bits, or only the even ones when both halves
/// of a double-shift element must be kept busy.
std::vector<int> default_allowed_shifts(PeMode pe_mode, int bits);

/// Total quantization error of one filter's groups at a given shift count.
double filter_error(const LayerTensor& tensor, int filter, const QuantConfig& cfg);

/// Error increase when one filter drops from from_count to from_count - 1.
double filter_demotion_cost(const LayerTensor& tensor, int filter, int from_count,
                            const QuantConfig& cfg);

/// Phase 1 core on a precomputed cost table: all filters start one allowed
/// level above the target, then the filter whose next demotion costs least
/// drops a level (ties to the lowest filter index, demotions that would
/// overshoot are skipped) until the sum of levels meets the target.
/// filter_costs[f][k] is filter f's error at allowed[k]; allowed is sorted
/// ascending. The result meets the target sum only when reachable by
/// single-level steps; it always provides the demotion ordering.
std::vector<int> greedy_filter_levels(const std::vector<std::vector<double>>& filter_costs,
                                      std::span<const int> allowed, const Rational& target);

/// Phase 1 on a layer: per-filter shift counts from greedy demotion.
std::vector<int> greedy_demote(const LayerTensor& tensor, const ScheduleTarget& target,
                               const Metric& metric);

struct GroupAssignment {
    std::vector<int> levels; // per column group, nondecreasing
    double cost = 0.0;
};

/// Phase 2 core: exact search over nondecreasing level sequences for the
/// column groups, minimizing total error subject to
///   sum_g filter_count[g] * level[g] == target_sum.
/// Cost ties resolve to the lexicographically smallest sequence. Throws
/// InfeasibleTargetError when no sequence meets the sum, naming the nearest
/// achievable averages.
GroupAssignment assign_group_levels(const std::vector<std::vector<double>>& group_costs,
                                    std::span<const int> group_filter_counts,
                                    std::span<const int> allowed, const Rational& target_sum);

struct ScheduleAssignment {
    std::vector<int> filter_order;           // filters sorted by phase-1 level, lowest first
    std::vector<int> per_filtergroup_shifts; // nondecreasing, one per sa_cols-sized group
    Rational achieved_avg;                   // equals the target exactly
    std::vector<int> filter_shifts;          // per output channel, original order
    double total_cost = 0.0;
};

/// Phase 2 on a layer: chunks the given filter order into sa_cols-sized
/// column groups (the last group short counts only its real filters) and
/// assigns exact levels.
ScheduleAssignment assign_filter_groups(const LayerTensor& tensor,
                                        std::span<const int> sorted_filters,
                                        const ScheduleTarget& target, const Metric& metric);

struct ScheduledLayer {
    ScheduleAssignment assignment;
    QuantizedLayer layer;
};

/// Both phases plus quantization under the resulting per-filter counts.
ScheduledLayer schedule_layer(const LayerTensor& tensor, const ScheduleTarget& target,
                              const Metric& metric);

} // namespace swis
