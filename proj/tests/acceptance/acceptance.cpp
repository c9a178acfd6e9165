// Acceptance checks: one PASS/FAIL line per criterion, exit code = number of
// failures. Each criterion is self-contained, carries its tolerances inline,
// and is budgeted; exceeding the budget fails the criterion.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../helpers.hpp"
#include "swis/analytics.hpp"
#include "swis/cli.hpp"
#include "swis/encoding.hpp"
#include "swis/errors.hpp"
#include "swis/mac.hpp"
#include "swis/model.hpp"
#include "swis/quantize.hpp"
#include "swis/rational.hpp"
#include "swis/schedule.hpp"
#include "swis/sim.hpp"
#include "swis/synthetic.hpp"

using namespace swis;

namespace {

// A criterion body appends nothing on success and a one-line reason on the
// first failure it detects.

std::string describe(const Rational& r) { return to_string(r); }

// ---------------------------------------------------------------------------
// 1. Lossless-encoding probabilities: closed forms equal exhaustive
//    enumeration, anchors hold exactly, richer methods never lose.
std::string criterion_probabilities() {
    const QuantMode modes[] = {QuantMode::swis, QuantMode::swis_c, QuantMode::trunc};
    for (QuantMode mode : modes) {
        Rational prev(0);
        for (int n = 0; n <= 8; ++n) {
            const Rational closed = lossless_probability(mode, n);
            const Rational brute = brute_force_lossless(mode, n);
            if (closed != brute)
                return "formula " + describe(closed) + " != enumeration " + describe(brute) +
                       " at " + std::to_string(n) + " shifts";
            if (closed < prev)
                return "probability decreased when adding a shift at n=" + std::to_string(n);
            prev = closed;
        }
        if (prev != Rational(1)) return "eight shifts must make every magnitude lossless";
    }
    for (int n = 0; n <= 8; ++n) {
        const Rational sw = lossless_probability(QuantMode::swis, n);
        const Rational swc = lossless_probability(QuantMode::swis_c, n);
        const Rational tr = lossless_probability(QuantMode::trunc, n);
        if (sw < swc || swc < tr)
            return "method ordering violated at " + std::to_string(n) + " shifts";
    }
    if (lossless_probability(QuantMode::swis, 2) != Rational(37, 256))
        return "sparse two-shift probability is not 37/256";
    if (lossless_probability(QuantMode::swis_c, 2) != Rational(16, 256))
        return "consecutive two-shift probability is not 16/256";
    if (lossless_probability(QuantMode::trunc, 2) != Rational(4, 256))
        return "fixed-window two-shift probability is not 4/256";
    return {};
}

// ---------------------------------------------------------------------------
// 2. Grouped MAC equivalence: the shared-shift datapath equals a plain dot
//    product against the decoded weights -- exhaustively for two-weight
//    groups on 4-bit activations, then randomized at full width.
std::string criterion_mac() {
    for (int n = 1; n <= 2; ++n) {
        for (const ShiftSet& set : enumerate_shift_sets(8, n, ShiftMode::sparse)) {
            int dec[4] = {0, 0, 0, 0};
            for (int mask = 0; mask < (1 << n); ++mask)
                dec[mask] = decoded_magnitude(set, std::uint8_t(mask));
            GroupEncoding enc;
            enc.shift_set = set;
            enc.signs = {1, 1};
            enc.masks = {0, 0};
            std::uint8_t acts[2] = {0, 0};
            for (int m0 = 0; m0 < (1 << n); ++m0)
                for (int m1 = 0; m1 < (1 << n); ++m1)
                    for (int s0 = 0; s0 < 2; ++s0)
                        for (int s1 = 0; s1 < 2; ++s1)
                            for (int a0 = 0; a0 < 16; ++a0)
                                for (int a1 = 0; a1 < 16; ++a1) {
                                    enc.masks[0] = std::uint8_t(m0);
                                    enc.masks[1] = std::uint8_t(m1);
                                    enc.signs[0] = std::int8_t(s0 ? -1 : 1);
                                    enc.signs[1] = std::int8_t(s1 ? -1 : 1);
                                    acts[0] = std::uint8_t(a0);
                                    acts[1] = std::uint8_t(a1);
                                    const std::int64_t want =
                                        std::int64_t(enc.signs[0]) * dec[m0] * a0 +
                                        std::int64_t(enc.signs[1]) * dec[m1] * a1;
                                    if (eval_swis_mac(enc, acts) != want)
                                        return "exhaustive sweep mismatch at n=" +
                                               std::to_string(n);
                                }
        }
    }

    std::mt19937_64 rng(20260814);
    std::vector<std::vector<ShiftSet>> sparse(9), consec(9);
    for (int n = 1; n <= 8; ++n) {
        sparse[std::size_t(n)] = enumerate_shift_sets(8, n, ShiftMode::sparse);
        consec[std::size_t(n)] = enumerate_shift_sets(8, n, ShiftMode::consecutive);
    }
    for (int c = 0; c < 100000; ++c) {
        const int n = 1 + int(rng() % 8);
        const auto& pool = (rng() & 1) ? consec[std::size_t(n)] : sparse[std::size_t(n)];
        GroupEncoding enc;
        enc.shift_set = pool[rng() % pool.size()];
        std::uint8_t acts[4];
        std::int64_t want = 0;
        for (int i = 0; i < 4; ++i) {
            enc.signs.push_back((rng() & 1) ? -1 : 1);
            enc.masks.push_back(std::uint8_t(rng() & ((1u << n) - 1)));
            acts[i] = std::uint8_t(rng() & 0xff);
            want += std::int64_t(enc.signs.back()) *
                    decoded_magnitude(enc.shift_set, enc.masks.back()) * acts[i];
        }
        if (eval_swis_mac(enc, acts) != want)
            return "random case " + std::to_string(c) + " mismatch (n=" + std::to_string(n) +
                   ")";
    }
    return {};
}

// ---------------------------------------------------------------------------
// 3. Shift-set selection is jointly optimal under the separable metric: the
//    two-stage search (best masks per set, best set) reaches the exact
//    minimum of the full (set x all mask vectors) product space.
std::string criterion_selection() {
    const Metric plain{0.0};
    std::mt19937_64 rng(424242);
    for (int c = 0; c < 1000; ++c) {
        const int m = 1 + int(rng() % 4);
        const int n = 1 + int(rng() % 3);
        const ShiftMode mode = (rng() & 1) ? ShiftMode::consecutive : ShiftMode::sparse;
        std::vector<SignMagWeight> group(static_cast<std::size_t>(m));
        for (auto& w : group) {
            w.sign = (rng() & 1) ? -1 : 1;
            w.magnitude = std::uint8_t(rng() & 0xff);
        }

        const GroupSelection sel = select_group_encoding(group, ShiftEnumerator(8, n, mode),
                                                         plain);

        double joint = std::numeric_limits<double>::infinity();
        for (const ShiftSet& set : enumerate_shift_sets(8, n, mode)) {
            int dec[8];
            for (int mask = 0; mask < (1 << n); ++mask)
                dec[mask] = decoded_magnitude(set, std::uint8_t(mask));
            const std::uint64_t combos = 1ull << (n * m);
            for (std::uint64_t combo = 0; combo < combos; ++combo) {
                std::int64_t sq = 0;
                for (int i = 0; i < m; ++i) {
                    const int mask = int((combo >> (i * n)) & ((1u << n) - 1));
                    const std::int64_t e = int(group[std::size_t(i)].magnitude) - dec[mask];
                    sq += e * e;
                }
                joint = std::min(joint, double(sq) / double(m));
            }
        }
        if (sel.cost != joint)
            return "case " + std::to_string(c) + ": two-stage cost " +
                   std::to_string(sel.cost) + " != joint minimum " + std::to_string(joint) +
                   " (m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")";
    }
    return {};
}

// ---------------------------------------------------------------------------
// 4. Quantization error dominance on a synthetic network, compared as exact
//    integer error sums: more shifts never hurt, smaller groups never hurt,
//    and the sparse method beats the consecutive method beats the fixed
//    window at equal cost parameters.
std::string criterion_rmse() {
    const auto tensors = synthetic_tensors(make_synthetic("mobilenetv2", 11));
    const QuantMode modes[] = {QuantMode::swis, QuantMode::swis_c, QuantMode::trunc};
    const int group_sizes[] = {1, 4};
    const int counts[] = {2, 3, 4, 5};
    for (const LayerTensor& t : tensors) {
        std::map<std::tuple<int, int, int>, std::int64_t> sq; // (mode, M, N) -> error sum
        for (int mi = 0; mi < 3; ++mi)
            for (int m : group_sizes)
                for (int n : counts) {
                    QuantConfig cfg;
                    cfg.mode = modes[mi];
                    cfg.shift_count = n;
                    cfg.group_size = m;
                    cfg.alpha = 0.0;
                    sq[{mi, m, n}] = quantize_tensor(t, cfg).stats.squared_error_sum;
                }
        for (int mi = 0; mi < 3; ++mi)
            for (int m : group_sizes)
                for (std::size_t k = 0; k + 1 < 4; ++k)
                    if (sq[{mi, m, counts[k + 1]}] > sq[{mi, m, counts[k]}])
                        return t.spec.name + ": error grew from " +
                               std::to_string(counts[k]) + " to " +
                               std::to_string(counts[k + 1]) + " shifts";
        for (int m : group_sizes)
            for (int n : counts) {
                if (sq[{0, m, n}] > sq[{1, m, n}])
                    return t.spec.name + ": sparse sets lost to consecutive windows";
                if (sq[{1, m, n}] > sq[{2, m, n}])
                    return t.spec.name + ": consecutive windows lost to the fixed window";
            }
        for (int mi = 0; mi < 3; ++mi)
            for (int n : counts)
                if (sq[{mi, 1, n}] > sq[{mi, 4, n}])
                    return t.spec.name + ": per-weight selection lost to grouped selection";
    }
    return {};
}

// ---------------------------------------------------------------------------
// 5. Storage compression anchors, as exact rationals.
std::string criterion_compression() {
    struct Anchor {
        QuantMode mode;
        int m, n;
        Rational want;
        double lo, hi;
    };
    const Anchor anchors[] = {
        {QuantMode::swis, 2, 1, Rational(16, 7), 2.24, 2.33},
        {QuantMode::swis, 4, 1, Rational(32, 11), 2.86, 2.96},
        {QuantMode::swis, 16, 1, Rational(128, 35), 3.6, 3.7},
        {QuantMode::swis_c, 4, 2, Rational(32, 15), 2.08, 2.19},
        {QuantMode::trunc, 4, 2, Rational(8, 3), 2.61, 2.72},
    };
    for (const Anchor& a : anchors) {
        const Rational got = compression_ratio(a.mode, a.m, a.n);
        if (got != a.want)
            return "ratio at M=" + std::to_string(a.m) + ", N=" + std::to_string(a.n) +
                   " is " + describe(got) + ", expected " + describe(a.want);
        const double real = to_double(got);
        if (real < a.lo || real > a.hi)
            return "ratio " + std::to_string(real) + " outside [" + std::to_string(a.lo) +
                   ", " + std::to_string(a.hi) + "]";
    }
    // fewer stored fields can only compress better
    for (int m = 2; m <= 16; ++m)
        for (int n = 1; n <= 8; ++n) {
            const Rational sw = compression_ratio(QuantMode::swis, m, n);
            const Rational swc = compression_ratio(QuantMode::swis_c, m, n);
            const Rational tr = compression_ratio(QuantMode::trunc, m, n);
            if (sw > swc || swc > tr)
                return "storage ordering violated at M=" + std::to_string(m) + ", N=" +
                       std::to_string(n);
        }
    return {};
}

// ---------------------------------------------------------------------------
// 6. Scheduling: the two-phase scheduler hits every feasible target average
//    exactly, never loses to any uniform assignment at or below the target
//    (under the separable metric), and splits levels across column groups.
std::string criterion_schedule() {
    const Metric plain{0.0};
    const double tol = 1e-9;
    std::mt19937_64 rng(777);
    for (int rep = 0; rep < 100; ++rep) {
        // levels are shared across column groups of eight filters, so a
        // half-step average needs the filter count to fill whole groups
        const int den = (rng() & 1) ? 2 : 1;
        const int filters = den == 2 ? 16 << (rng() & 1) : 4 + int(rng() % 29);
        const int in_ch = 3 + int(rng() % 6);
        const int k = 1 + int(rng() % 3);
        auto t = test::random_tensor(
            test::make_spec("r" + std::to_string(rep), filters, in_ch, k, k), rng);

        const std::int64_t num = den == 1 ? 1 + std::int64_t(rng() % 8)
                                          : 2 * (1 + std::int64_t(rng() % 7)) + 1;
        const Rational want(num, den);

        ScheduleTarget target;
        target.target_avg = want;
        const ScheduledLayer sl = schedule_layer(t, target, plain);
        if (sl.assignment.achieved_avg != want)
            return "rep " + std::to_string(rep) + ": achieved " +
                   describe(sl.assignment.achieved_avg) + " != target " + describe(want);

        for (int level = 1; level <= 8; ++level) {
            if (Rational(level) > want) break;
            QuantConfig cfg;
            cfg.shift_count = level;
            cfg.alpha = 0.0;
            double uniform = 0.0;
            for (int f = 0; f < filters; ++f) uniform += filter_error(t, f, cfg);
            if (sl.assignment.total_cost > uniform + tol)
                return "rep " + std::to_string(rep) + ": scheduled cost " +
                       std::to_string(sl.assignment.total_cost) +
                       " exceeds uniform level " + std::to_string(level) + " cost " +
                       std::to_string(uniform);
        }
    }

    // double-shift elements keep both halves busy: an average of 3 splits
    // sixteen filters into one column group at 2 and one at 4
    {
        std::mt19937_64 drng(31);
        auto t = test::random_tensor(test::make_spec("pairs", 16, 4, 2, 2), drng);
        ScheduleTarget target;
        target.target_avg = Rational(3);
        target.pe_mode = PeMode::double_shift;
        const ScheduledLayer sl = schedule_layer(t, target, plain);
        if (sl.assignment.achieved_avg != Rational(3)) return "pair schedule missed its target";
        if (sl.assignment.per_filtergroup_shifts != std::vector<int>{2, 4})
            return "pair schedule did not split column groups into levels 2 and 4";
        int low = 0, high = 0;
        for (int s : sl.assignment.filter_shifts) (s == 2 ? low : high) += 1;
        if (low != 8 || high != 8) return "pair schedule did not split filters 8/8";
    }

    // infeasible targets are refused with the nearest alternatives named
    {
        std::mt19937_64 irng(32);
        auto t = test::random_tensor(test::make_spec("odd", 5, 3, 2, 2), irng);
        ScheduleTarget target;
        target.target_avg = Rational(5, 2); // five filters cannot sum to 12.5
        try {
            schedule_layer(t, target, plain);
            return "five filters accepted an average of 5/2";
        } catch (const InfeasibleTargetError&) {
        }
        target.target_avg = Rational(9);
        try {
            schedule_layer(t, target, plain);
            return "an average above the full width was accepted";
        } catch (const InfeasibleTargetError&) {
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// 7. Array-model performance relations on the resnet18 geometry: pairing two
//    shifts per cycle halves compute-bound runtime, runtime scales with the
//    shift count where compute dominates, and weight traffic tracks the
//    record width.
std::string criterion_sim() {
    const auto tensors = synthetic_tensors(make_synthetic("resnet18", 21));
    ArrayConfig ss;
    ArrayConfig ds;
    ds.pe_mode = PeMode::double_shift;
    std::vector<TilingPlan> plans;
    plans.reserve(tensors.size());
    for (const LayerTensor& t : tensors) plans.push_back(tile_layer(t.spec, ss));

    // (a) double-shift at four shifts: exactly half the compute, same skew
    std::int64_t ss4 = 0, ds4 = 0;
    for (const TilingPlan& p : plans) {
        ss4 += simulate_layer(p, 4, QuantMode::swis, ss).total_cycles;
        ds4 += simulate_layer(p, 4, QuantMode::swis, ds).total_cycles;
    }
    const double pair_speedup = double(ss4) / double(ds4);
    if (pair_speedup < 1.8 || pair_speedup > 2.0 + 1e-12)
        return "double-shift speedup " + std::to_string(pair_speedup) + " outside [1.8, 2.0]";

    // (b) where compute dominates, cycles scale with the shift count:
    // total(n)/total(1) must sit in [0.9 n, n] when the compute share at one
    // shift is at least 0.9
    int scaled_layers = 0;
    for (const TilingPlan& p : plans) {
        const LayerSim base = simulate_layer(p, 1, QuantMode::swis, ss);
        const double share = double(base.compute_cycles) / double(base.total_cycles);
        if (share < 0.9) continue;
        ++scaled_layers;
        for (int n : {2, 4, 8}) {
            const LayerSim at = simulate_layer(p, n, QuantMode::swis, ss);
            const double ratio = double(at.total_cycles) / double(base.total_cycles);
            if (ratio < 0.9 * n - 1e-9 || ratio > double(n) + 1e-9)
                return p.spec.name + ": cycle ratio " + std::to_string(ratio) + " at " +
                       std::to_string(n) + " shifts outside [0.9n, n]";
        }
    }
    if (scaled_layers < 5)
        return "only " + std::to_string(scaled_layers) + " compute-bound layers found";

    // (c) with no refetch, weight traffic is proportional to the group record
    // width: M + 3N + MN bits at M=4 gives 32/18 between four and two shifts
    ArrayConfig big = ss;
    big.weight_buffer_bytes = std::int64_t(1) << 30;
    std::int64_t w2 = 0, w4 = 0;
    for (const TilingPlan& p : plans) {
        w2 += simulate_layer(p, 2, QuantMode::swis, big).dram.weight_bytes;
        w4 += simulate_layer(p, 4, QuantMode::swis, big).dram.weight_bytes;
    }
    const double measured = double(w4) / double(w2);
    const double expected = 32.0 / 18.0;
    if (std::abs(measured / expected - 1.0) > 0.01)
        return "weight traffic ratio " + std::to_string(measured) + " differs from record " +
               "width ratio " + std::to_string(expected) + " by more than 1%";
    return {};
}

// ---------------------------------------------------------------------------
// 8. Weight-vs-activation traffic shifts toward weights with depth: stage
//    means of the per-layer DRAM byte ratio rise strictly, ending at least
//    an order of magnitude above the start.
std::string criterion_dram_ratio() {
    const auto tensors = synthetic_tensors(make_synthetic("resnet18", 21));
    QuantConfig cfg;
    cfg.shift_count = 2;
    std::vector<QuantizedLayer> layers;
    layers.reserve(tensors.size());
    for (const LayerTensor& t : tensors) layers.push_back(quantize_tensor(t, cfg));

    const ArrayConfig array;
    const auto rows = dram_ratio_report(layers, array);
    const std::string stages[] = {"conv1", "layer1.", "layer2.", "layer3.", "layer4."};
    double means[5] = {};
    for (int s = 0; s < 5; ++s) {
        double sum = 0.0;
        int count = 0;
        for (const DramRatioRow& r : rows)
            if (r.layer.rfind(stages[s], 0) == 0) {
                sum += r.ratio;
                ++count;
            }
        if (count == 0) return "no layers matched stage " + stages[s];
        means[s] = sum / count;
    }
    for (int s = 0; s + 1 < 5; ++s)
        if (means[s + 1] <= means[s])
            return "stage mean fell from " + stages[s] + " (" + std::to_string(means[s]) +
                   ") to " + stages[s + 1] + " (" + std::to_string(means[s + 1]) + ")";
    if (means[4] < 10.0 * means[0])
        return "final stage mean " + std::to_string(means[4]) +
               " is not an order of magnitude above the first " + std::to_string(means[0]);
    return {};
}

// ---------------------------------------------------------------------------
// 9. End-to-end reproducibility: repeated CLI runs with the same flags emit
//    byte-identical artifacts.
std::string criterion_reproducibility() {
    const auto run = [](std::vector<std::string> args) {
        std::vector<const char*> argv;
        argv.push_back("swis");
        for (const auto& a : args) argv.push_back(a.c_str());
        return run_cli(int(argv.size()), argv.data());
    };
    const auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    test::TempDir dir("acceptance-repro");
    for (const char* sub : {"a", "b"}) {
        if (run({"quantize", "--synthetic", "mobilenetv2", "--seed", "3", "--shifts", "2",
                 "--out", (dir.path() / "q" / sub).string()}) != 0)
            return "quantize run failed";
        if (run({"simulate", "--synthetic", "mobilenetv2", "--seed", "3", "--shifts", "2",
                 "--out", (dir.path() / "s" / sub).string()}) != 0)
            return "simulate run failed";
    }
    for (const char* name :
         {"quantize_report.csv", "quantize_report.json", "model.swisq", "run_record.json"}) {
        if (slurp(dir.path() / "q" / "a" / name) != slurp(dir.path() / "q" / "b" / name))
            return std::string("quantize output ") + name + " differs across reruns";
    }
    for (const char* name : {"simulate_report.json", "simulate_report.csv", "pe_sweep.csv",
                             "act_serial.csv", "dram_ratio.csv", "run_record.json"}) {
        if (slurp(dir.path() / "s" / "a" / name) != slurp(dir.path() / "s" / "b" / name))
            return std::string("simulate output ") + name + " differs across reruns";
    }
    return {};
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        std::function<std::string()> body;
        double budget_seconds;
    };
    const Entry entries[] = {
        {"lossless probabilities exact and ordered", criterion_probabilities, 10.0},
        {"grouped MAC equals the reference dot product", criterion_mac, 60.0},
        {"selection reaches the joint product-space minimum", criterion_selection, 120.0},
        {"quantization error dominance across methods", criterion_rmse, 60.0},
        {"storage compression anchors", criterion_compression, 10.0},
        {"scheduler hits targets exactly and beats uniforms", criterion_schedule, 60.0},
        {"array-model performance relations", criterion_sim, 120.0},
        {"DRAM traffic ratio grows with depth", criterion_dram_ratio, 60.0},
        {"CLI runs are byte-for-byte reproducible", criterion_reproducibility, 120.0},
    };

    int failures = 0;
    int id = 0;
    for (const Entry& e : entries) {
        ++id;
        std::string detail;
        const auto start = std::chrono::steady_clock::now();
        try {
            detail = e.body();
        } catch (const std::exception& ex) {
            detail = std::string("unexpected exception: ") + ex.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (detail.empty() && seconds > e.budget_seconds)
            detail = "exceeded " + std::to_string(e.budget_seconds) + "s budget";
        std::ostringstream line;
        line.setf(std::ios::fixed);
        line.precision(2);
        line << (detail.empty() ? "PASS" : "FAIL") << " criterion " << id << ": " << e.name
             << " (" << seconds << "s)";
        if (!detail.empty()) line << " -- " << detail;
        std::cout << line.str() << "\n";
        if (!detail.empty()) ++failures;
    }
    std::cout << "acceptance: " << (9 - failures) << "/9 criteria passed\n";
    return failures;
}
