#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "swis/mac.hpp"
#include "swis/model.hpp"
#include "swis/quantize.hpp"
#include "swis/schedule.hpp"

namespace swis {

// Energy and clock constants for the array model. The shipped default table
// holds placeholder values for relative comparisons; substitute measured
// constants for absolute numbers.
struct CostTable {
    double frequency_mhz = 500.0;
    double mask_add_pass_pj = 0.0;
    double shift_accumulate_pj = 0.0;
    double pe_buffer_rw_pj = 0.0;
    double sram_read_pj_per_byte = 0.0;
    double sram_write_pj_per_byte = 0.0;
    double dram_pj_per_byte = 0.0;
    std::string description;
};

void validate(const CostTable& costs);
CostTable load_cost_table(const std::filesystem::path& path);

// Output-stationary systolic array: output pixels map to rows, filters to
// columns, the reduction dimension is walked in weight groups.
struct ArrayConfig {
    int rows = 8;
    int cols = 8;
    int group_size = 4;
    PeMode pe_mode = PeMode::single_shift;
    std::int64_t act_buffer_bytes = 64 * 1024;
    std::int64_t weight_buffer_bytes = 64 * 1024;
    std::int64_t out_buffer_bytes = 16 * 1024;
    CostTable costs;
};

void validate(const ArrayConfig& cfg);

struct Tile {
    int row_tile = 0;
    int col_tile = 0;
    int rows_active = 0;
    int cols_active = 0;
};

struct TilingPlan {
    LayerSpec spec;
    int out_pixels = 0;
    int reduction_groups = 0; // weight groups per filter
    int row_tiles = 0;
    int col_tiles = 0;
    std::vector<Tile> tiles; // row-major over (col_tile, row_tile)
};

TilingPlan tile_layer(const LayerSpec& spec, const ArrayConfig& cfg);

struct Traffic {
    std::int64_t weight_accesses = 0;
    std::int64_t act_accesses = 0;
    std::int64_t out_accesses = 0;
    std::int64_t weight_bytes = 0;
    std::int64_t act_bytes = 0;
    std::int64_t out_bytes = 0;
};

struct LayerSim {
    std::string layer;
    double avg_shifts = 0.0;
    std::int64_t tiles = 0;
    std::int64_t compute_cycles = 0;
    std::int64_t fill_drain_cycles = 0;
    std::int64_t stall_cycles = 0;
    std::int64_t total_cycles = 0; // compute + fill/drain + stalls
    Traffic sram;
    Traffic dram;
    double energy_pj = 0.0;
};

struct SimReport {
    std::vector<LayerSim> layers;
    std::int64_t total_cycles = 0;
    double total_energy_pj = 0.0;
    double frames_per_second = 0.0;
    double frames_per_joule = 0.0;
};

// Every filter sharing a column tile must use one shift count; filters are
// placed in ascending shift order, matching the scheduler's column groups.
LayerSim simulate_layer(const TilingPlan& plan, std::span<const std::uint8_t> filter_shifts,
                        QuantMode mode, const ArrayConfig& cfg);
LayerSim simulate_layer(const TilingPlan& plan, int shift_count, QuantMode mode,
                        const ArrayConfig& cfg);
LayerSim simulate_layer(const TilingPlan& plan, const QuantizedLayer& layer,
                        const ArrayConfig& cfg);

// Bit-serial activation-truncation baseline: dense 8-bit weights, activations
// fed over act_bits cycles per group.
LayerSim simulate_layer_act_serial(const TilingPlan& plan, int act_bits, const ArrayConfig& cfg);

SimReport simulate_network(std::span<const QuantizedLayer> layers, const ArrayConfig& cfg);

struct DramRatioRow {
    std::string layer;
    std::int64_t weight_bytes = 0;
    std::int64_t act_bytes = 0;
    double ratio = 0.0; // weight bytes per activation byte
};

std::vector<DramRatioRow> dram_ratio_report(std::span<const QuantizedLayer> layers,
                                            const ArrayConfig& cfg);

} // namespace swis
