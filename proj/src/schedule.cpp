#include "swis/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace swis {

std::vector<int> default_allowed_shifts(PeMode pe_mode, int bits) {
    if (bits < 1 || bits > 8) throw RangeError("bit width must be in [1, 8]");
    std::vector<int> out;
    const int step = pe_mode == PeMode::double_shift ? 2 : 1;
    for (int n = step; n <= bits; n += step) out.push_back(n);
    if (out.empty()) throw RangeError("no allowed shift counts for this bit width");
    return out;
}

namespace {

void check_allowed(std::span<const int> allowed, int bits) {
    if (allowed.empty()) throw RangeError("no allowed shift counts");
    for (std::size_t k = 0; k < allowed.size(); ++k) {
        if (allowed[k] < 1 || allowed[k] > bits)
            throw RangeError("allowed shift counts must be in [1, bits]");
        if (k > 0 && allowed[k] <= allowed[k - 1])
            throw RangeError("allowed shift counts must be sorted and unique");
    }
}

std::vector<int> resolve_levels(const ScheduleTarget& target) {
    std::vector<int> levels = target.allowed_shifts.empty()
                                  ? default_allowed_shifts(target.pe_mode, target.bits)
                                  : target.allowed_shifts;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    check_allowed(levels, target.bits);
    if (target.pe_mode == PeMode::double_shift) {
        for (int n : levels)
            if (n % 2) throw RangeError("double-shift schedule needs even shift counts");
    }
    if (target.target_avg < Rational(levels.front()) ||
        target.target_avg > Rational(levels.back()))
        throw InfeasibleTargetError("target average " + to_string(target.target_avg) +
                                    " outside allowed range [" + std::to_string(levels.front()) +
                                    ", " + std::to_string(levels.back()) + "]");
    return levels;
}

void check_tensor(const LayerTensor& tensor, const ScheduleTarget& target) {
    if (target.sa_cols < 1) throw RangeError("sa_cols must be positive");
    if (tensor.bits != target.bits) throw RangeError("tensor bit width does not match target");
    if (tensor.weights.size() != std::size_t(tensor.spec.weight_count()))
        throw RangeError("tensor weight count does not match its dimensions");
}

// per-filter error at every allowed level; groups extracted once
std::vector<std::vector<double>> filter_cost_table(const LayerTensor& tensor,
                                                   const ScheduleTarget& target,
                                                   const Metric& metric,
                                                   std::span<const int> levels) {
    const int filters = tensor.spec.out_channels;
    const int count = int(levels.size());
    std::vector<ShiftEnumerator> enums;
    if (target.mode != QuantMode::trunc) {
        const ShiftMode sm =
            target.mode == QuantMode::swis ? ShiftMode::sparse : ShiftMode::consecutive;
        enums.reserve(std::size_t(count));
        for (int n : levels) enums.emplace_back(target.bits, n, sm);
    }
    const int gpf = groups_per_filter(tensor.spec, target.group_size);
    std::vector<std::vector<double>> fc(std::size_t(filters),
                                        std::vector<double>(std::size_t(count), 0.0));
    for (int f = 0; f < filters; ++f) {
        for (int g = 0; g < gpf; ++g) {
            const auto grp = extract_group(tensor, f, g, target.group_size);
            for (int k = 0; k < count; ++k) {
                fc[std::size_t(f)][std::size_t(k)] +=
                    target.mode == QuantMode::trunc
                        ? trunc_group_cost(grp, target.bits, levels[std::size_t(k)], metric)
                        : group_cost(grp, enums[std::size_t(k)], metric);
            }
        }
    }
    return fc;
}

std::vector<int> column_group_counts(int filters, int sa_cols) {
    const int groups = (filters + sa_cols - 1) / sa_cols;
    if (groups > 64) throw RangeError("layer needs more than 64 column groups");
    std::vector<int> counts(static_cast<std::size_t>(groups));
    for (int g = 0; g < groups; ++g)
        counts[std::size_t(g)] = std::min(sa_cols, filters - g * sa_cols);
    return counts;
}

ScheduleAssignment assemble(std::vector<int> order, std::span<const int> counts,
                            GroupAssignment ga, int sa_cols, int filters) {
    ScheduleAssignment out;
    out.filter_order = std::move(order);
    out.per_filtergroup_shifts = std::move(ga.levels);
    out.total_cost = ga.cost;
    out.filter_shifts.assign(std::size_t(filters), 0);
    std::int64_t total = 0;
    for (std::size_t g = 0; g < counts.size(); ++g) {
        for (int i = 0; i < counts[g]; ++i) {
            const int f = out.filter_order[std::size_t(int(g) * sa_cols + i)];
            out.filter_shifts[std::size_t(f)] = out.per_filtergroup_shifts[g];
            total += out.per_filtergroup_shifts[g];
        }
    }
    out.achieved_avg = Rational(total, filters);
    return out;
}

} // namespace

double filter_error(const LayerTensor& tensor, int filter, const QuantConfig& cfg) {
    validate(cfg);
    if (filter < 0 || filter >= tensor.spec.out_channels)
        throw RangeError("filter index out of range");
    const Metric metric{cfg.alpha};
    const int gpf = groups_per_filter(tensor.spec, cfg.group_size);
    double total = 0.0;
    if (cfg.mode == QuantMode::trunc) {
        for (int g = 0; g < gpf; ++g)
            total += trunc_group_cost(extract_group(tensor, filter, g, cfg.group_size), cfg.bits,
                                      cfg.shift_count, metric);
        return total;
    }
    const ShiftMode sm = cfg.mode == QuantMode::swis ? ShiftMode::sparse : ShiftMode::consecutive;
    const ShiftEnumerator sets(cfg.bits, cfg.shift_count, sm);
    for (int g = 0; g < gpf; ++g)
        total += group_cost(extract_group(tensor, filter, g, cfg.group_size), sets, metric);
    return total;
}

double filter_demotion_cost(const LayerTensor& tensor, int filter, int from_count,
                            const QuantConfig& cfg) {
    if (from_count < 2 || from_count > cfg.bits)
        throw RangeError("demotion needs a shift count in [2, bits]");
    QuantConfig lo = cfg;
    lo.shift_count = from_count - 1;
    QuantConfig hi = cfg;
    hi.shift_count = from_count;
    return filter_error(tensor, filter, lo) - filter_error(tensor, filter, hi);
}

std::vector<int> greedy_filter_levels(const std::vector<std::vector<double>>& filter_costs,
                                      std::span<const int> allowed, const Rational& target) {
    const int filters = int(filter_costs.size());
    const int levels = int(allowed.size());
    if (filters == 0) throw RangeError("no filters to schedule");
    check_allowed(allowed, 8);
    for (const auto& row : filter_costs)
        if (int(row.size()) != levels) throw RangeError("cost table shape mismatch");

    for (int k = 0; k < levels; ++k)
        if (Rational(allowed[k]) == target) return std::vector<int>(std::size_t(filters), allowed[k]);

    int start = levels - 1;
    for (int k = 0; k < levels; ++k) {
        if (Rational(allowed[k]) > target) {
            start = k;
            break;
        }
    }

    std::vector<int> idx(std::size_t(filters), start);
    Rational excess = (Rational(allowed[start]) - target) * Rational(filters);
    while (excess > Rational(0)) {
        int best_f = -1;
        double best_delta = std::numeric_limits<double>::infinity();
        for (int f = 0; f < filters; ++f) {
            const int k = idx[std::size_t(f)];
            if (k == 0) continue;
            if (Rational(allowed[k] - allowed[k - 1]) > excess) continue;
            const double delta = filter_costs[std::size_t(f)][std::size_t(k - 1)] -
                                 filter_costs[std::size_t(f)][std::size_t(k)];
            if (delta < best_delta) {
                best_delta = delta;
                best_f = f;
            }
        }
        if (best_f < 0) break; // target not reachable this way; order is still usable
        const int k = idx[std::size_t(best_f)];
        excess -= Rational(allowed[k] - allowed[k - 1]);
        --idx[std::size_t(best_f)];
    }

    std::vector<int> out(static_cast<std::size_t>(filters));
    for (int f = 0; f < filters; ++f) out[std::size_t(f)] = allowed[idx[std::size_t(f)]];
    return out;
}

std::vector<int> greedy_demote(const LayerTensor& tensor, const ScheduleTarget& target,
                               const Metric& metric) {
    check_tensor(tensor, target);
    const auto levels = resolve_levels(target);
    const auto fc = filter_cost_table(tensor, target, metric, levels);
    return greedy_filter_levels(fc, levels, target.target_avg);
}

GroupAssignment assign_group_levels(const std::vector<std::vector<double>>& group_costs,
                                    std::span<const int> group_filter_counts,
                                    std::span<const int> allowed, const Rational& target_sum) {
    const int groups = int(group_costs.size());
    const int levels = int(allowed.size());
    if (groups == 0) throw RangeError("no column groups");
    if (groups > 64) throw RangeError("more than 64 column groups");
    if (int(group_filter_counts.size()) != groups) throw RangeError("cost table shape mismatch");
    check_allowed(allowed, 8);
    std::int64_t filters = 0;
    for (int c : group_filter_counts) {
        if (c < 1) throw RangeError("empty column group");
        filters += c;
    }
    for (const auto& row : group_costs)
        if (int(row.size()) != levels) throw RangeError("cost table shape mismatch");

    std::int64_t max_sum = 0;
    for (int c : group_filter_counts) max_sum += std::int64_t(c) * allowed[std::size_t(levels - 1)];

    // suffix[g][k][s]: min cost of groups g.. at levels >= allowed[k], summing
    // exactly s; the k+1 entry covers "skip this level", so each cell needs
    // only two candidates
    const double inf = std::numeric_limits<double>::infinity();
    const std::int64_t span = max_sum + 1;
    std::vector<double> dp(std::size_t(groups + 1) * std::size_t(levels + 1) * std::size_t(span),
                           inf);
    const auto at = [&](int g, int k, std::int64_t s) -> double& {
        return dp[(std::size_t(g) * std::size_t(levels + 1) + std::size_t(k)) * std::size_t(span) +
                  std::size_t(s)];
    };
    for (int k = 0; k <= levels; ++k) at(groups, k, 0) = 0.0;
    for (int g = groups - 1; g >= 0; --g) {
        for (int k = levels - 1; k >= 0; --k) {
            const std::int64_t used = std::int64_t(group_filter_counts[std::size_t(g)]) *
                                      allowed[std::size_t(k)];
            for (std::int64_t s = 0; s < span; ++s) {
                double best = at(g, k + 1, s);
                if (s >= used) {
                    const double cand =
                        group_costs[std::size_t(g)][std::size_t(k)] + at(g + 1, k, s - used);
                    if (cand < best) best = cand;
                }
                at(g, k, s) = best;
            }
        }
    }

    const bool integral = target_sum.denominator() == 1;
    const std::int64_t want = integral ? target_sum.numerator() : -1;
    if (!integral || want < 0 || want > max_sum || !(at(0, 0, want) < inf)) {
        const Rational target_avg = target_sum / Rational(filters);
        Rational below(-1), above(-1);
        for (std::int64_t s = 0; s <= max_sum; ++s) {
            if (!(at(0, 0, s) < inf)) continue;
            const Rational avg(s, filters);
            if (avg <= target_avg) below = avg;
            if (avg >= target_avg && above < Rational(0)) above = avg;
        }
        std::string near;
        if (below >= Rational(0)) near += " " + to_string(below);
        if (above >= Rational(0) && above != below) near += " " + to_string(above);
        throw InfeasibleTargetError("no level assignment reaches average " +
                                    to_string(target_avg) + "; nearest feasible averages:" +
                                    (near.empty() ? " none" : near));
    }

    GroupAssignment out;
    out.cost = at(0, 0, want);
    out.levels.reserve(std::size_t(groups));
    std::int64_t s = want;
    int k = 0;
    for (int g = 0; g < groups; ++g) {
        bool placed = false;
        for (int kk = k; kk < levels; ++kk) {
            const std::int64_t used = std::int64_t(group_filter_counts[std::size_t(g)]) *
                                      allowed[std::size_t(kk)];
            if (used > s) break;
            const double cand =
                group_costs[std::size_t(g)][std::size_t(kk)] + at(g + 1, kk, s - used);
            if (cand < inf && cand == at(g, k, s)) {
                out.levels.push_back(allowed[std::size_t(kk)]);
                s -= used;
                k = kk;
                placed = true;
                break;
            }
        }
        if (!placed) throw std::logic_error("schedule reconstruction failed");
    }
    return out;
}

ScheduleAssignment assign_filter_groups(const LayerTensor& tensor,
                                        std::span<const int> sorted_filters,
                                        const ScheduleTarget& target, const Metric& metric) {
    check_tensor(tensor, target);
    const auto levels = resolve_levels(target);
    const int filters = tensor.spec.out_channels;
    if (int(sorted_filters.size()) != filters)
        throw RangeError("filter order must cover every output channel");
    std::vector<bool> seen(std::size_t(filters), false);
    for (int f : sorted_filters) {
        if (f < 0 || f >= filters || seen[std::size_t(f)])
            throw RangeError("filter order must be a permutation");
        seen[std::size_t(f)] = true;
    }

    const auto fc = filter_cost_table(tensor, target, metric, levels);
    const auto counts = column_group_counts(filters, target.sa_cols);
    std::vector<std::vector<double>> gc(counts.size(),
                                        std::vector<double>(levels.size(), 0.0));
    for (std::size_t g = 0; g < counts.size(); ++g) {
        for (int i = 0; i < counts[g]; ++i) {
            const int f = sorted_filters[std::size_t(int(g) * target.sa_cols + i)];
            for (std::size_t k = 0; k < levels.size(); ++k)
                gc[g][k] += fc[std::size_t(f)][k];
        }
    }

    GroupAssignment ga;
    try {
        ga = assign_group_levels(gc, counts, levels, target.target_avg * Rational(filters));
    } catch (const InfeasibleTargetError& e) {
        throw InfeasibleTargetError("layer '" + tensor.spec.name + "': " + e.what());
    }
    return assemble(std::vector<int>(sorted_filters.begin(), sorted_filters.end()), counts,
                    std::move(ga), target.sa_cols, filters);
}

ScheduledLayer schedule_layer(const LayerTensor& tensor, const ScheduleTarget& target,
                              const Metric& metric) {
    check_tensor(tensor, target);
    const auto levels = resolve_levels(target);
    const int filters = tensor.spec.out_channels;
    const auto fc = filter_cost_table(tensor, target, metric, levels);

    const auto phase1 = greedy_filter_levels(fc, levels, target.target_avg);
    std::vector<int> order(static_cast<std::size_t>(filters));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return phase1[std::size_t(a)] < phase1[std::size_t(b)];
    });

    const auto counts = column_group_counts(filters, target.sa_cols);
    std::vector<std::vector<double>> gc(counts.size(),
                                        std::vector<double>(levels.size(), 0.0));
    for (std::size_t g = 0; g < counts.size(); ++g) {
        for (int i = 0; i < counts[g]; ++i) {
            const int f = order[std::size_t(int(g) * target.sa_cols + i)];
            for (std::size_t k = 0; k < levels.size(); ++k)
                gc[g][k] += fc[std::size_t(f)][k];
        }
    }

    GroupAssignment ga;
    try {
        ga = assign_group_levels(gc, counts, levels, target.target_avg * Rational(filters));
    } catch (const InfeasibleTargetError& e) {
        throw InfeasibleTargetError("layer '" + tensor.spec.name + "': " + e.what());
    }

    ScheduledLayer out;
    out.assignment = assemble(std::move(order), counts, std::move(ga), target.sa_cols, filters);

    QuantConfig qc;
    qc.mode = target.mode;
    qc.shift_count = levels.front();
    qc.group_size = target.group_size;
    qc.bits = target.bits;
    qc.alpha = metric.alpha;
    out.layer = quantize_tensor(tensor, qc, out.assignment.filter_shifts);
    return out;
}

} // namespace swis
