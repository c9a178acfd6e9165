#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "swis/quantize.hpp"
#include "swis/schedule.hpp"

using namespace swis;
using swis::test::make_spec;
using swis::test::make_tensor;

namespace {

LayerTensor small_layer(int filters, int channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return swis::test::random_tensor(make_spec("unit", filters, channels, 1, 1, 4, 4), rng);
}

ScheduleTarget make_target(const std::string& avg, PeMode pe = PeMode::single_shift) {
    ScheduleTarget t;
    t.target_avg = parse_rational(avg);
    t.pe_mode = pe;
    return t;
}

} // namespace

TEST_CASE("default allowed shift counts per processing element mode") {
    CHECK(default_allowed_shifts(PeMode::single_shift, 8) ==
          std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(default_allowed_shifts(PeMode::double_shift, 8) == std::vector<int>{2, 4, 6, 8});
    CHECK(default_allowed_shifts(PeMode::single_shift, 4) == std::vector<int>{1, 2, 3, 4});
    CHECK_THROWS_AS(default_allowed_shifts(PeMode::single_shift, 0), RangeError);
}

TEST_CASE("filter_error totals the per-group selection costs") {
    auto t = small_layer(3, 8, 11);
    QuantConfig cfg;
    cfg.shift_count = 2;
    cfg.group_size = 4;
    for (int f = 0; f < 3; ++f) {
        const ShiftEnumerator sets(8, 2, ShiftMode::sparse);
        double want = 0.0;
        for (int g = 0; g < groups_per_filter(t.spec, 4); ++g)
            want += group_cost(extract_group(t, f, g, 4), sets, Metric{cfg.alpha});
        CHECK(filter_error(t, f, cfg) == doctest::Approx(want));
    }
    CHECK_THROWS_AS(filter_error(t, 3, cfg), RangeError);
}

TEST_CASE("demotion cost is the error increase of dropping one level") {
    auto t = small_layer(2, 16, 12);
    QuantConfig cfg;
    cfg.group_size = 4;
    for (int from = 2; from <= 8; ++from) {
        QuantConfig lo = cfg;
        lo.shift_count = from - 1;
        QuantConfig hi = cfg;
        hi.shift_count = from;
        const double d = filter_demotion_cost(t, 0, from, cfg);
        CHECK(d == doctest::Approx(filter_error(t, 0, lo) - filter_error(t, 0, hi)));
        CHECK(d >= -1e-12); // more shifts never hurt a filter
    }
    CHECK_THROWS_AS(filter_demotion_cost(t, 0, 1, cfg), RangeError);
    CHECK_THROWS_AS(filter_demotion_cost(t, 0, 9, cfg), RangeError);
}

TEST_CASE("greedy demotion splits identical filters half and half") {
    // eight identical filters, target 2.5 over levels {2, 3}: all start at 3,
    // every demotion saves the same error, ties go to the lowest filter index
    const std::vector<std::vector<double>> costs(8, {5.0, 1.0});
    const auto levels = std::vector<int>{2, 3};
    auto out = greedy_filter_levels(costs, levels, Rational(5, 2));
    CHECK(out == std::vector<int>{2, 2, 2, 2, 3, 3, 3, 3});
}

TEST_CASE("greedy demotion starts one level above the target and works down") {
    // target 3 over {1, 2, 4}: start at 4, excess 4; the cheap filters drop
    const std::vector<std::vector<double>> costs{
        {9.0, 3.0, 0.5}, // expensive to demote
        {4.0, 1.0, 0.9}, // cheapest first demotion (0.1)
        {6.0, 1.5, 0.7},
        {5.0, 2.0, 0.6},
    };
    auto out = greedy_filter_levels(costs, std::vector<int>{1, 2, 4}, Rational(3));
    CHECK(std::accumulate(out.begin(), out.end(), 0) == 12);
    CHECK(out == std::vector<int>{4, 2, 2, 4}); // filters 1 and 2 demote first
}

TEST_CASE("greedy demotion returns exact-level and stuck cases unchanged") {
    const std::vector<std::vector<double>> costs(4, {3.0, 1.0});
    CHECK(greedy_filter_levels(costs, std::vector<int>{2, 4}, Rational(2)) ==
          std::vector<int>{2, 2, 2, 2});
    // a single filter cannot average 3 over {2, 4}; the ordering is still
    // returned with the overshoot skipped
    const std::vector<std::vector<double>> one(1, {3.0, 1.0});
    CHECK(greedy_filter_levels(one, std::vector<int>{2, 4}, Rational(3)) == std::vector<int>{4});
}

TEST_CASE("greedy_demote meets reachable targets on a real layer") {
    auto t = small_layer(8, 16, 13);
    auto target = make_target("5/2");
    auto counts = greedy_demote(t, target, Metric{1.0});
    REQUIRE(counts.size() == 8);
    CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 20); // 2.5 * 8
    for (int n : counts) CHECK((n >= 1 && n <= 8));
}

TEST_CASE("group-level assignment solves small instances exactly") {
    // two groups of eight filters, levels {2, 4}, sum 48 = 8*2 + 8*4: the
    // only nondecreasing solution puts the cheap-to-starve group first
    const std::vector<std::vector<double>> gc{{10.0, 2.0}, {50.0, 5.0}};
    const std::vector<int> counts{8, 8};
    auto ga = assign_group_levels(gc, counts, std::vector<int>{2, 4}, Rational(48));
    CHECK(ga.levels == std::vector<int>{2, 4});
    CHECK(ga.cost == doctest::Approx(10.0 + 5.0));
}

TEST_CASE("group-level assignment prefers the lexicographically smallest tie") {
    // unit groups, levels {1, 2, 3}, sum 4: (1,3) and (2,2) tie on cost
    const std::vector<std::vector<double>> gc{{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}};
    const std::vector<int> counts{1, 1};
    auto ga = assign_group_levels(gc, counts, std::vector<int>{1, 2, 3}, Rational(4));
    CHECK(ga.levels == std::vector<int>{1, 3});
    CHECK(ga.cost == doctest::Approx(2.0));
}

TEST_CASE("group-level assignment minimizes cost over an exhaustive check") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> cost(0.0, 10.0);
    const std::vector<int> allowed{1, 2, 3, 4};
    for (int rep = 0; rep < 30; ++rep) {
        const int groups = 2 + int(rng() % 3);
        std::vector<std::vector<double>> gc(static_cast<std::size_t>(groups));
        std::vector<int> counts(static_cast<std::size_t>(groups));
        int filters = 0;
        for (int g = 0; g < groups; ++g) {
            counts[std::size_t(g)] = 1 + int(rng() % 3);
            filters += counts[std::size_t(g)];
            for (std::size_t k = 0; k < allowed.size(); ++k)
                gc[std::size_t(g)].push_back(cost(rng));
            std::sort(gc[std::size_t(g)].rbegin(), gc[std::size_t(g)].rend()); // monotone
        }
        const std::int64_t want = 2 * filters; // average level 2 is always reachable
        auto ga = assign_group_levels(gc, counts, allowed, Rational(want));

        // brute force all nondecreasing level sequences
        double best = std::numeric_limits<double>::infinity();
        std::vector<std::size_t> pick(std::size_t(groups), 0);
        while (true) {
            std::int64_t sum = 0;
            double c = 0.0;
            bool nondecreasing = true;
            for (int g = 0; g < groups; ++g) {
                if (g > 0 && pick[std::size_t(g)] < pick[std::size_t(g - 1)])
                    nondecreasing = false;
                sum += std::int64_t(counts[std::size_t(g)]) * allowed[pick[std::size_t(g)]];
                c += gc[std::size_t(g)][pick[std::size_t(g)]];
            }
            if (nondecreasing && sum == want) best = std::min(best, c);
            int g = groups - 1;
            while (g >= 0 && ++pick[std::size_t(g)] == allowed.size()) {
                pick[std::size_t(g)] = 0;
                --g;
            }
            if (g < 0) break;
        }
        CHECK(ga.cost == doctest::Approx(best));
    }
}

TEST_CASE("infeasible sums report the nearest achievable averages") {
    // 16 filters in two groups of eight over even levels: sums move in steps
    // of 16, so average 5/2 is unreachable between 2 and 3
    const std::vector<std::vector<double>> gc{{4.0, 2.0}, {4.0, 2.0}};
    const std::vector<int> counts{8, 8};
    try {
        assign_group_levels(gc, counts, std::vector<int>{2, 4}, Rational(40));
        FAIL("expected InfeasibleTargetError");
    } catch (const InfeasibleTargetError& e) {
        const std::string what = e.what();
        CHECK(what.find("5/2") != std::string::npos);
        CHECK(what.find(" 2") != std::string::npos);
        CHECK(what.find(" 3") != std::string::npos);
    }
}

TEST_CASE("assign_filter_groups validates the permutation and names the layer") {
    auto t = small_layer(4, 4, 15);
    auto target = make_target("2");
    const std::vector<int> good{3, 1, 0, 2};
    CHECK_NOTHROW(assign_filter_groups(t, good, target, Metric{1.0}));
    CHECK_THROWS_AS(assign_filter_groups(t, std::vector<int>{0, 1, 2}, target, Metric{1.0}),
                    RangeError);
    CHECK_THROWS_AS(assign_filter_groups(t, std::vector<int>{0, 0, 1, 2}, target, Metric{1.0}),
                    RangeError);

    // infeasible targets surface the layer name: 4 filters, one column group
    // of 4, even levels cannot average 5/2
    ScheduleTarget ds = make_target("5/2", PeMode::double_shift);
    try {
        assign_filter_groups(t, good, ds, Metric{1.0});
        FAIL("expected InfeasibleTargetError");
    } catch (const InfeasibleTargetError& e) {
        CHECK(std::string(e.what()).find("layer 'unit'") != std::string::npos);
    }
}

TEST_CASE("double-shift scheduling hits target 3 with half 2s and half 4s") {
    // mirrors the canonical example: levels {2, 4}, target 3, sixteen
    // identical-cost filters in two column groups
    auto t = small_layer(16, 8, 16);
    ScheduleTarget target = make_target("3", PeMode::double_shift);
    target.allowed_shifts = {2, 4};
    auto s = schedule_layer(t, target, Metric{1.0});
    CHECK(s.assignment.achieved_avg == Rational(3));
    CHECK(s.assignment.per_filtergroup_shifts == std::vector<int>{2, 4});
    int twos = 0;
    int fours = 0;
    for (int n : s.assignment.filter_shifts) (n == 2 ? twos : fours) += 1;
    CHECK(twos == 8);
    CHECK(fours == 8);
}

TEST_CASE("schedule_layer achieves fractional targets exactly") {
    for (std::uint64_t seed : {21, 22, 23}) {
        auto t = small_layer(16, 12, seed);
        auto target = make_target("5/2");
        auto s = schedule_layer(t, target, Metric{1.0});
        CHECK(s.assignment.achieved_avg == Rational(5, 2));
        CHECK(std::is_sorted(s.assignment.per_filtergroup_shifts.begin(),
                             s.assignment.per_filtergroup_shifts.end()));

        // the quantized layer mirrors the assignment filter by filter
        REQUIRE(s.layer.filter_shifts.size() == 16);
        for (int f = 0; f < 16; ++f) {
            CHECK(int(s.layer.filter_shifts[std::size_t(f)]) ==
                  s.assignment.filter_shifts[std::size_t(f)]);
        }

        // phase 1's ordering is a permutation sorted by assigned level
        auto order = s.assignment.filter_order;
        std::sort(order.begin(), order.end());
        for (int f = 0; f < 16; ++f) CHECK(order[std::size_t(f)] == f);
    }
}

TEST_CASE("scheduled layers never lose to a uniform budget of the same size") {
    std::mt19937_64 rng(31);
    const Metric metric{1.0};
    for (int rep = 0; rep < 6; ++rep) {
        auto t = small_layer(16, 8, rng());
        auto target = make_target("3");
        auto s = schedule_layer(t, target, metric);

        QuantConfig cfg;
        cfg.shift_count = 3;
        cfg.group_size = target.group_size;
        cfg.alpha = metric.alpha;
        double uniform = 0.0;
        for (int f = 0; f < 16; ++f) uniform += filter_error(t, f, cfg);
        CHECK(s.assignment.total_cost <= uniform + 1e-9);
        CHECK(s.assignment.achieved_avg == Rational(3));
    }
}

TEST_CASE("targets outside the allowed range are rejected up front") {
    auto t = small_layer(4, 4, 41);
    CHECK_THROWS_AS(schedule_layer(t, make_target("9"), Metric{1.0}), InfeasibleTargetError);
    CHECK_THROWS_AS(schedule_layer(t, make_target("1/2"), Metric{1.0}), InfeasibleTargetError);
    ScheduleTarget odd = make_target("3", PeMode::double_shift);
    odd.allowed_shifts = {2, 3, 4};
    CHECK_THROWS_AS(schedule_layer(t, odd, Metric{1.0}), RangeError);
    ScheduleTarget bits = make_target("2");
    bits.bits = 4;
    CHECK_THROWS_AS(schedule_layer(t, bits, Metric{1.0}), RangeError); // tensor is 8-bit
}
