#include "swis/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "swis/errors.hpp"
#include "swis/serialize.hpp"

namespace swis {

namespace {

bool bad(double v) { return !std::isfinite(v) || v < 0.0; }

} // namespace

void validate(const CostTable& costs) {
    if (!std::isfinite(costs.frequency_mhz) || costs.frequency_mhz <= 0.0)
        throw RangeError("cost table frequency must be positive");
    if (bad(costs.mask_add_pass_pj) || bad(costs.shift_accumulate_pj) ||
        bad(costs.pe_buffer_rw_pj) || bad(costs.sram_read_pj_per_byte) ||
        bad(costs.sram_write_pj_per_byte) || bad(costs.dram_pj_per_byte))
        throw RangeError("cost table energies must be finite and non-negative");
}

CostTable load_cost_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open cost table '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("cost table '" + path.string() + "': " + e.what());
    }
    CostTable costs;
    const auto num = [&](const char* key) {
        if (!doc.contains(key) || !doc[key].is_number())
            throw ParseError("cost table '" + path.string() + "' needs numeric field '" +
                             key + "'");
        return doc[key].get<double>();
    };
    costs.frequency_mhz = num("frequency_mhz");
    costs.mask_add_pass_pj = num("mask_add_pass_pj");
    costs.shift_accumulate_pj = num("shift_accumulate_pj");
    costs.pe_buffer_rw_pj = num("pe_buffer_rw_pj");
    costs.sram_read_pj_per_byte = num("sram_read_pj_per_byte");
    costs.sram_write_pj_per_byte = num("sram_write_pj_per_byte");
    costs.dram_pj_per_byte = num("dram_pj_per_byte");
    if (doc.contains("description")) {
        if (!doc["description"].is_string())
            throw ParseError("cost table description must be a string");
        costs.description = doc["description"].get<std::string>();
    }
    validate(costs);
    return costs;
}

void validate(const ArrayConfig& cfg) {
    if (cfg.rows < 1 || cfg.cols < 1) throw RangeError("array needs at least one row and column");
    if (cfg.group_size < 1 || cfg.group_size > 16)
        throw RangeError("group size must be in [1, 16]");
    if (cfg.act_buffer_bytes < 1 || cfg.weight_buffer_bytes < 1 || cfg.out_buffer_bytes < 1)
        throw RangeError("buffer capacities must be positive");
    if (std::int64_t(cfg.rows) * cfg.cols * 4 > cfg.out_buffer_bytes)
        throw RangeError("one output tile must fit the output buffer");
    validate(cfg.costs);
}

TilingPlan tile_layer(const LayerSpec& spec, const ArrayConfig& cfg) {
    validate(cfg);
    if (spec.out_h() < 1 || spec.out_w() < 1)
        throw RangeError("layer '" + spec.name + "' has an empty output map");
    TilingPlan plan;
    plan.spec = spec;
    plan.out_pixels = spec.out_h() * spec.out_w();
    plan.reduction_groups = groups_per_filter(spec, cfg.group_size);
    plan.row_tiles = (plan.out_pixels + cfg.rows - 1) / cfg.rows;
    plan.col_tiles = (spec.out_channels + cfg.cols - 1) / cfg.cols;
    plan.tiles.reserve(std::size_t(plan.row_tiles) * std::size_t(plan.col_tiles));
    // weights stay resident per column tile while row tiles stream past
    for (int ct = 0; ct < plan.col_tiles; ++ct) {
        const int ca = std::min(cfg.cols, spec.out_channels - ct * cfg.cols);
        for (int rt = 0; rt < plan.row_tiles; ++rt) {
            const int ra = std::min(cfg.rows, plan.out_pixels - rt * cfg.rows);
            plan.tiles.push_back(Tile{rt, ct, ra, ca});
        }
    }
    return plan;
}

namespace {

struct StreamModel {
    // per weight group record on the wire, in bits
    std::int64_t record_bits = 0;
    // weight SRAM reads per group per tile (one per shift, or one when dense)
    int reads_per_group = 1;
};

LayerSim run_layer(const TilingPlan& plan, std::span<const int> col_tile_shifts,
                   double avg_shifts, const ArrayConfig& cfg,
                   const std::vector<StreamModel>& streams) {
    const LayerSpec& spec = plan.spec;
    const bool depthwise = spec.kind == LayerKind::depthwise_conv;
    const std::int64_t groups = plan.reduction_groups;
    const int m = cfg.group_size;

    LayerSim sim;
    sim.layer = spec.name;
    sim.avg_shifts = avg_shifts;
    sim.tiles = std::int64_t(plan.tiles.size());

    std::int64_t shift_ops = 0;
    for (const Tile& tile : plan.tiles) {
        const int n = col_tile_shifts[std::size_t(tile.col_tile)];
        const StreamModel& stream = streams[std::size_t(tile.col_tile)];
        sim.compute_cycles += groups * group_cycles(cfg.pe_mode, n);
        sim.fill_drain_cycles += tile.rows_active + tile.cols_active - 2;
        shift_ops += std::int64_t(tile.rows_active) * tile.cols_active * groups * n;

        sim.sram.weight_accesses += std::int64_t(tile.cols_active) * groups *
                                    stream.reads_per_group;
        const std::int64_t weight_bits = std::int64_t(tile.cols_active) * groups *
                                         stream.record_bits;
        sim.sram.weight_bytes += (weight_bits + 7) / 8;

        // each activation group is fetched once per tile and reused across
        // shifts; depthwise columns each need their own input plane
        const int feeds = depthwise ? tile.cols_active : 1;
        sim.sram.act_accesses += std::int64_t(tile.rows_active) * groups * feeds;
        sim.sram.act_bytes += std::int64_t(tile.rows_active) * groups * m * feeds;

        sim.sram.out_accesses += std::int64_t(tile.rows_active) * tile.cols_active;
        sim.sram.out_bytes += std::int64_t(tile.rows_active) * tile.cols_active * 4;
    }
    sim.stall_cycles = 0;
    sim.total_cycles = sim.compute_cycles + sim.fill_drain_cycles + sim.stall_cycles;

    // weights: fetched once per column tile, or once per row tile when the
    // column tile's compressed weights overflow the weight buffer
    for (int ct = 0; ct < plan.col_tiles; ++ct) {
        const int ca = std::min(cfg.cols, spec.out_channels - ct * cfg.cols);
        const std::int64_t bits = std::int64_t(ca) * groups *
                                  streams[std::size_t(ct)].record_bits;
        const std::int64_t bytes = (bits + 7) / 8;
        const std::int64_t fetches = bytes <= cfg.weight_buffer_bytes ? 1 : plan.row_tiles;
        sim.dram.weight_bytes += bytes * fetches;
        sim.dram.weight_accesses += std::int64_t(ca) * groups * fetches;
    }

    // activations: one compulsory pass when the input fits the activation
    // buffer, otherwise every column tile re-streams its receptive patches
    const std::int64_t planes = depthwise ? spec.out_channels : 1;
    const std::int64_t input_bytes = std::int64_t(spec.input_h) * spec.input_w *
                                     spec.in_channels * planes;
    if (input_bytes <= cfg.act_buffer_bytes) {
        sim.dram.act_bytes = input_bytes;
    } else {
        for (int ct = 0; ct < plan.col_tiles; ++ct) {
            const int ca = std::min(cfg.cols, spec.out_channels - ct * cfg.cols);
            sim.dram.act_bytes += std::int64_t(plan.out_pixels) * spec.reduction_size() *
                                  (depthwise ? ca : 1);
        }
    }
    sim.dram.act_accesses = sim.dram.act_bytes;

    sim.dram.out_bytes = std::int64_t(plan.out_pixels) * spec.out_channels;
    sim.dram.out_accesses = sim.dram.out_bytes;

    const CostTable& c = cfg.costs;
    const double compute_pj = double(shift_ops) * (c.mask_add_pass_pj + c.shift_accumulate_pj +
                                                   c.pe_buffer_rw_pj);
    const double sram_pj = double(sim.sram.weight_bytes + sim.sram.act_bytes) *
                               c.sram_read_pj_per_byte +
                           double(sim.sram.out_bytes) * c.sram_write_pj_per_byte;
    const double dram_pj = double(sim.dram.weight_bytes + sim.dram.act_bytes +
                                  sim.dram.out_bytes) *
                           c.dram_pj_per_byte;
    sim.energy_pj = compute_pj + sram_pj + dram_pj;
    return sim;
}

} // namespace

LayerSim simulate_layer(const TilingPlan& plan, std::span<const std::uint8_t> filter_shifts,
                        QuantMode mode, const ArrayConfig& cfg) {
    validate(cfg);
    const int filters = plan.spec.out_channels;
    if (int(filter_shifts.size()) != filters)
        throw RangeError("layer '" + plan.spec.name + "' needs one shift count per filter");
    std::int64_t total_shifts = 0;
    for (std::uint8_t n : filter_shifts) {
        if (n < 1 || n > 8) throw RangeError("shift counts must be in [1, 8]");
        total_shifts += n;
    }

    std::vector<std::uint8_t> sorted(filter_shifts.begin(), filter_shifts.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> col_shifts(std::size_t(plan.col_tiles));
    std::vector<StreamModel> streams(std::size_t(plan.col_tiles));
    for (int ct = 0; ct < plan.col_tiles; ++ct) {
        const int lo = ct * cfg.cols;
        const int hi = std::min(filters, lo + cfg.cols);
        for (int f = lo + 1; f < hi; ++f) {
            if (sorted[std::size_t(f)] != sorted[std::size_t(lo)])
                throw RangeError("layer '" + plan.spec.name + "' column tile " +
                                 std::to_string(ct) + " mixes shift counts " +
                                 std::to_string(int(sorted[std::size_t(lo)])) + " and " +
                                 std::to_string(int(sorted[std::size_t(f)])));
        }
        const int n = sorted[std::size_t(lo)];
        col_shifts[std::size_t(ct)] = n;
        streams[std::size_t(ct)] = StreamModel{group_record_bits(mode, cfg.group_size, n), n};
    }
    return run_layer(plan, col_shifts, double(total_shifts) / filters, cfg, streams);
}

LayerSim simulate_layer(const TilingPlan& plan, int shift_count, QuantMode mode,
                        const ArrayConfig& cfg) {
    if (shift_count < 1 || shift_count > 8) throw RangeError("shift count must be in [1, 8]");
    const std::vector<std::uint8_t> uniform(std::size_t(plan.spec.out_channels),
                                            std::uint8_t(shift_count));
    return simulate_layer(plan, uniform, mode, cfg);
}

LayerSim simulate_layer(const TilingPlan& plan, const QuantizedLayer& layer,
                        const ArrayConfig& cfg) {
    if (layer.spec.name != plan.spec.name || layer.spec.out_channels != plan.spec.out_channels)
        throw RangeError("tiling plan does not match quantized layer '" + layer.spec.name + "'");
    if (layer.group_size != cfg.group_size)
        throw RangeError("layer '" + layer.spec.name + "' group size does not match the array");
    return simulate_layer(plan, layer.filter_shifts, layer.mode, cfg);
}

LayerSim simulate_layer_act_serial(const TilingPlan& plan, int act_bits, const ArrayConfig& cfg) {
    validate(cfg);
    if (act_bits < 1 || act_bits > 8) throw RangeError("activation bits must be in [1, 8]");
    // dense 8-bit weights, read once per group; activations stream bit-serially
    const std::vector<int> col_shifts(std::size_t(plan.col_tiles), act_bits);
    const std::vector<StreamModel> streams(std::size_t(plan.col_tiles),
                                           StreamModel{std::int64_t(8) * cfg.group_size, 1});
    return run_layer(plan, col_shifts, double(act_bits), cfg, streams);
}

SimReport simulate_network(std::span<const QuantizedLayer> layers, const ArrayConfig& cfg) {
    validate(cfg);
    if (layers.empty()) throw RangeError("no layers to simulate");
    SimReport report;
    report.layers.reserve(layers.size());
    for (const QuantizedLayer& layer : layers) {
        const TilingPlan plan = tile_layer(layer.spec, cfg);
        report.layers.push_back(simulate_layer(plan, layer, cfg));
        report.total_cycles += report.layers.back().total_cycles;
        report.total_energy_pj += report.layers.back().energy_pj;
    }
    report.frames_per_second = cfg.costs.frequency_mhz * 1e6 / double(report.total_cycles);
    report.frames_per_joule =
        report.total_energy_pj > 0.0 ? 1e12 / report.total_energy_pj : 0.0;
    return report;
}

std::vector<DramRatioRow> dram_ratio_report(std::span<const QuantizedLayer> layers,
                                            const ArrayConfig& cfg) {
    validate(cfg);
    std::vector<DramRatioRow> rows;
    rows.reserve(layers.size());
    for (const QuantizedLayer& layer : layers) {
        const TilingPlan plan = tile_layer(layer.spec, cfg);
        const LayerSim sim = simulate_layer(plan, layer, cfg);
        DramRatioRow row;
        row.layer = layer.spec.name;
        row.weight_bytes = sim.dram.weight_bytes;
        row.act_bytes = sim.dram.act_bytes;
        row.ratio = double(row.weight_bytes) / double(row.act_bytes);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace swis
