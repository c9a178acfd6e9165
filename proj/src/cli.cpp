#include "swis/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "swis/analytics.hpp"
#include "swis/errors.hpp"
#include "swis/mac.hpp"
#include "swis/model.hpp"
#include "swis/rational.hpp"
#include "swis/report.hpp"
#include "swis/serialize.hpp"
#include "swis/synthetic.hpp"

namespace swis {

namespace {

const char* mode_name(QuantMode mode) {
    switch (mode) {
    case QuantMode::swis: return "swis";
    case QuantMode::swis_c: return "swis-c";
    case QuantMode::trunc: return "trunc";
    }
    return "?";
}

QuantMode parse_mode(const std::string& s) {
    if (s == "swis") return QuantMode::swis;
    if (s == "swis-c") return QuantMode::swis_c;
    if (s == "trunc") return QuantMode::trunc;
    throw ParseError("unknown mode '" + s + "'");
}

const char* pe_name(PeMode pe) { return pe == PeMode::double_shift ? "ds" : "ss"; }

CostTable default_costs() {
    // placeholder constants for relative comparisons; mirrors
    // costs/default.costs.json
    CostTable c;
    c.frequency_mhz = 500.0;
    c.mask_add_pass_pj = 0.05;
    c.shift_accumulate_pj = 0.10;
    c.pe_buffer_rw_pj = 0.05;
    c.sram_read_pj_per_byte = 1.0;
    c.sram_write_pj_per_byte = 1.0;
    c.dram_pj_per_byte = 160.0;
    c.description = "placeholder constants; substitute measured values for absolute energy";
    return c;
}

struct LoadedModel {
    std::string label;
    std::vector<LayerTensor> tensors;
    nlohmann::json inputs = nlohmann::json::object();
};

LoadedModel load_inputs(const RunSpec& spec) {
    LoadedModel m;
    if (!spec.synthetic.empty()) {
        if (!spec.manifest_path.empty())
            throw RangeError("give either a manifest path or --synthetic, not both");
        const SyntheticModel sm = make_synthetic(spec.synthetic, spec.seed);
        m.label = sm.manifest.model_name;
        m.tensors = synthetic_tensors(sm, spec.quant.bits);
        m.inputs["synthetic"] = spec.synthetic;
        m.inputs["seed"] = spec.seed;
    } else {
        if (spec.manifest_path.empty())
            throw RangeError("need a manifest path or --synthetic NAME");
        const ModelManifest manifest = load_manifest(spec.manifest_path);
        m.label = manifest.model_name;
        m.tensors = load_all_tensors(manifest, spec.quant.bits);
        m.inputs["manifest"] = hex64(fnv1a64_file(spec.manifest_path));
        m.inputs["data"] = hex64(fnv1a64_file(manifest.data_file));
    }
    return m;
}

// output directory with overwrite protection and digest bookkeeping
class OutDir {
public:
    explicit OutDir(const RunSpec& spec) : spec_(spec) {
        std::filesystem::create_directories(spec.out_dir);
    }

    void write(const std::string& name, std::string_view content) {
        const auto path = spec_.out_dir / name;
        if (std::filesystem::exists(path) && !spec_.force)
            throw RangeError("output " + path.string() + " already exists; pass --force to overwrite");
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot write " + path.string());
        out.write(content.data(), std::streamsize(content.size()));
        if (!out) throw ParseError("write failed for " + path.string());
        outputs_[name] = hex64(fnv1a64(content));
    }

    void write(const std::string& name, const std::vector<std::uint8_t>& bytes) {
        write(name, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    }

    void write_record(const nlohmann::json& flags, const nlohmann::json& inputs) {
        nlohmann::json rec;
        rec["command"] = spec_.command;
        rec["tool_version"] = kToolVersion;
        rec["flags"] = flags;
        rec["inputs"] = inputs;
        rec["outputs"] = outputs_;
        write("run_record.json", rec.dump(2) + "\n");
    }

private:
    const RunSpec& spec_;
    nlohmann::json outputs_ = nlohmann::json::object();
};

nlohmann::json flag_json(const RunSpec& spec) {
    nlohmann::json f;
    f["mode"] = mode_name(spec.quant.mode);
    f["shifts"] = spec.quant.shift_count;
    f["group"] = spec.quant.group_size;
    f["alpha"] = spec.quant.alpha;
    f["seed"] = spec.seed;
    f["pe"] = pe_name(spec.pe_mode);
    f["sa"] = std::to_string(spec.sa_rows) + "x" + std::to_string(spec.sa_cols);
    if (!spec.target_shifts.empty()) f["target_shifts"] = spec.target_shifts;
    if (!spec.costs_path.empty()) f["costs"] = spec.costs_path.string();
    if (!spec.analyze_kind.empty()) f["kind"] = spec.analyze_kind;
    if (spec.command == "verify") {
        f["mac_cases"] = spec.mac_cases;
        f["group_cases"] = spec.group_cases;
    }
    return f;
}

ArrayConfig array_config(const RunSpec& spec) {
    ArrayConfig cfg;
    cfg.rows = spec.sa_rows;
    cfg.cols = spec.sa_cols;
    cfg.group_size = spec.quant.group_size;
    cfg.pe_mode = spec.pe_mode;
    cfg.costs = spec.costs_path.empty() ? default_costs() : load_cost_table(spec.costs_path);
    validate(cfg);
    return cfg;
}

ScheduleTarget schedule_target(const RunSpec& spec) {
    ScheduleTarget target;
    target.target_avg = parse_rational(spec.target_shifts);
    target.pe_mode = spec.pe_mode;
    target.sa_cols = spec.sa_cols;
    target.mode = spec.quant.mode;
    target.group_size = spec.quant.group_size;
    target.bits = spec.quant.bits;
    return target;
}

} // namespace

int cmd_quantize(const RunSpec& spec) {
    validate(spec.quant);
    const LoadedModel m = load_inputs(spec);

    QuantizedModel qm;
    qm.bits = spec.quant.bits;
    CsvWriter csv({"layer", "mode", "group_size", "shifts", "weights", "rmse_int", "rmse_real",
                   "compression", "dpred_compression"});
    nlohmann::json jlayers = nlohmann::json::array();
    const double comp =
        to_double(compression_ratio(spec.quant.mode, spec.quant.group_size, spec.quant.shift_count));
    for (const LayerTensor& t : m.tensors) {
        QuantizedLayer ql = quantize_tensor(t, spec.quant);
        const double dpred = to_double(dpred_compression(t, spec.quant.group_size));
        nlohmann::json jl;
        jl["layer"] = t.spec.name;
        jl["mode"] = mode_name(spec.quant.mode);
        jl["group_size"] = spec.quant.group_size;
        jl["avg_shifts"] = double(spec.quant.shift_count);
        jl["weights"] = ql.stats.weight_count;
        jl["rmse_int"] = ql.stats.rmse_int();
        jl["rmse_real"] = ql.stats.rmse_real(ql.scale);
        jl["compression"] = comp;
        jl["dpred_compression"] = dpred;
        jlayers.push_back(std::move(jl));
        csv.row({t.spec.name, mode_name(spec.quant.mode), std::to_string(spec.quant.group_size),
                 std::to_string(spec.quant.shift_count), std::to_string(ql.stats.weight_count),
                 csv_cell(ql.stats.rmse_int()), csv_cell(ql.stats.rmse_real(ql.scale)),
                 csv_cell(comp), csv_cell(dpred)});
        qm.layers.push_back(std::move(ql));
    }

    OutDir out(spec);
    out.write("model.swisq", encode_quantized(qm));
    nlohmann::json report;
    report["model"] = m.label;
    report["layers"] = jlayers;
    out.write("quantize_report.json", report.dump(2) + "\n");
    out.write("quantize_report.csv", csv.str());
    out.write_record(flag_json(spec), m.inputs);
    return 0;
}

int cmd_schedule(const RunSpec& spec) {
    validate(spec.quant);
    if (spec.target_shifts.empty()) throw RangeError("schedule needs --target-shifts");
    const ScheduleTarget target = schedule_target(spec);
    const Metric metric{spec.quant.alpha};
    const LoadedModel m = load_inputs(spec);

    // uniform baseline at the largest allowed level not above the target: it
    // spends no more budget than the schedule, so the schedule must match or
    // beat its error
    const std::vector<int> levels = default_allowed_shifts(target.pe_mode, target.bits);
    int uniform_level = levels.front();
    for (int n : levels) {
        if (Rational(n) <= target.target_avg) uniform_level = n;
    }
    QuantConfig uniform_cfg = spec.quant;
    uniform_cfg.shift_count = uniform_level;

    QuantizedModel qm;
    qm.bits = spec.quant.bits;
    CsvWriter csv({"layer", "filters", "target", "achieved", "scheduled_cost", "uniform_level",
                   "uniform_cost", "rmse_real"});
    nlohmann::json jlayers = nlohmann::json::array();
    for (const LayerTensor& t : m.tensors) {
        ScheduledLayer sl = schedule_layer(t, target, metric);
        double uniform_cost = 0.0;
        for (int f = 0; f < t.spec.out_channels; ++f)
            uniform_cost += filter_error(t, f, uniform_cfg);

        nlohmann::json jl;
        jl["layer"] = t.spec.name;
        jl["filters"] = t.spec.out_channels;
        jl["target"] = to_string(target.target_avg);
        jl["achieved"] = to_string(sl.assignment.achieved_avg);
        jl["scheduled_cost"] = sl.assignment.total_cost;
        jl["uniform_level"] = uniform_level;
        jl["uniform_cost"] = uniform_cost;
        jl["rmse_real"] = sl.layer.stats.rmse_real(sl.layer.scale);
        jl["filter_shifts"] = sl.assignment.filter_shifts;
        jl["per_filtergroup_shifts"] = sl.assignment.per_filtergroup_shifts;
        jlayers.push_back(std::move(jl));
        csv.row({t.spec.name, std::to_string(t.spec.out_channels), to_string(target.target_avg),
                 to_string(sl.assignment.achieved_avg), csv_cell(sl.assignment.total_cost),
                 std::to_string(uniform_level), csv_cell(uniform_cost),
                 csv_cell(sl.layer.stats.rmse_real(sl.layer.scale))});
        qm.layers.push_back(std::move(sl.layer));
    }

    OutDir out(spec);
    out.write("model.swisq", encode_quantized(qm));
    nlohmann::json report;
    report["model"] = m.label;
    report["target"] = to_string(target.target_avg);
    report["pe"] = pe_name(target.pe_mode);
    report["layers"] = jlayers;
    out.write("schedule_report.json", report.dump(2) + "\n");
    out.write("schedule_report.csv", csv.str());
    out.write_record(flag_json(spec), m.inputs);
    return 0;
}

namespace {

int analyze_prob(const RunSpec& spec, OutDir& out, nlohmann::json& report) {
    const QuantMode modes[] = {QuantMode::swis, QuantMode::swis_c, QuantMode::trunc};
    CsvWriter csv({"method", "shifts", "probability", "probability_real"});
    nlohmann::json rows = nlohmann::json::array();
    for (QuantMode mode : modes) {
        for (int n = 0; n <= spec.quant.bits; ++n) {
            const Rational p = lossless_probability(mode, n, spec.quant.bits);
            const Rational oracle = brute_force_lossless(mode, n, spec.quant.bits);
            if (p != oracle)
                throw std::logic_error(std::string("lossless probability mismatch for ") +
                                       mode_name(mode) + " at " + std::to_string(n) + " shifts");
            nlohmann::json row;
            row["method"] = mode_name(mode);
            row["shifts"] = n;
            row["probability"] = to_string(p);
            row["probability_real"] = to_double(p);
            rows.push_back(std::move(row));
            csv.row({mode_name(mode), std::to_string(n), to_string(p), csv_cell(to_double(p))});
        }
    }
    report["rows"] = rows;
    out.write("analyze_prob.json", report.dump(2) + "\n");
    out.write("analyze_prob.csv", csv.str());
    return 0;
}

int analyze_compression(const RunSpec& spec, OutDir& out, nlohmann::json& report) {
    const QuantMode modes[] = {QuantMode::swis, QuantMode::swis_c, QuantMode::trunc};
    CsvWriter csv({"method", "group_size", "shifts", "ratio", "ratio_real"});
    nlohmann::json rows = nlohmann::json::array();
    for (QuantMode mode : modes) {
        for (int m = 2; m <= 16; ++m) {
            for (int n = 1; n <= spec.quant.bits; ++n) {
                const Rational r = compression_ratio(mode, m, n);
                nlohmann::json row;
                row["method"] = mode_name(mode);
                row["group_size"] = m;
                row["shifts"] = n;
                row["ratio"] = to_string(r);
                row["ratio_real"] = to_double(r);
                rows.push_back(std::move(row));
                csv.row({mode_name(mode), std::to_string(m), std::to_string(n), to_string(r),
                         csv_cell(to_double(r))});
            }
        }
    }
    report["rows"] = rows;
    out.write("analyze_compression.json", report.dump(2) + "\n");
    out.write("analyze_compression.csv", csv.str());
    return 0;
}

int analyze_rmse(const RunSpec& spec, OutDir& out, nlohmann::json& report,
                 const LoadedModel& m) {
    std::vector<QuantConfig> grid;
    for (QuantMode mode : {QuantMode::swis, QuantMode::swis_c, QuantMode::trunc}) {
        for (int n = 1; n <= 4; ++n) {
            QuantConfig cfg = spec.quant;
            cfg.mode = mode;
            cfg.shift_count = n;
            grid.push_back(cfg);
        }
    }
    CsvWriter csv({"layer", "method", "shifts", "rmse_int", "rmse_real"});
    nlohmann::json rows = nlohmann::json::array();
    for (const LayerTensor& t : m.tensors) {
        const std::vector<RmseRow> result = rmse_report(t, grid);
        for (const RmseRow& r : result) {
            nlohmann::json row;
            row["layer"] = t.spec.name;
            row["method"] = mode_name(r.cfg.mode);
            row["shifts"] = r.cfg.shift_count;
            row["rmse_int"] = r.rmse_int;
            row["rmse_real"] = r.rmse_real;
            rows.push_back(std::move(row));
            csv.row({t.spec.name, mode_name(r.cfg.mode), std::to_string(r.cfg.shift_count),
                     csv_cell(r.rmse_int), csv_cell(r.rmse_real)});
        }
    }
    report["model"] = m.label;
    report["rows"] = rows;
    out.write("analyze_rmse.json", report.dump(2) + "\n");
    out.write("analyze_rmse.csv", csv.str());
    return 0;
}

} // namespace

int cmd_analyze(const RunSpec& spec) {
    validate(spec.quant);
    nlohmann::json report;
    report["kind"] = spec.analyze_kind;
    if (spec.analyze_kind == "rmse") {
        const LoadedModel m = load_inputs(spec);
        OutDir out(spec);
        analyze_rmse(spec, out, report, m);
        out.write_record(flag_json(spec), m.inputs);
        return 0;
    }
    OutDir out(spec);
    if (spec.analyze_kind == "prob")
        analyze_prob(spec, out, report);
    else if (spec.analyze_kind == "compression")
        analyze_compression(spec, out, report);
    else
        throw RangeError("unknown analyze kind '" + spec.analyze_kind + "'");
    out.write_record(flag_json(spec), nlohmann::json::object());
    return 0;
}

int cmd_simulate(const RunSpec& spec) {
    validate(spec.quant);
    const ArrayConfig cfg = array_config(spec);
    const LoadedModel m = load_inputs(spec);

    std::vector<QuantizedLayer> layers;
    layers.reserve(m.tensors.size());
    if (spec.target_shifts.empty()) {
        for (const LayerTensor& t : m.tensors) layers.push_back(quantize_tensor(t, spec.quant));
    } else {
        const ScheduleTarget target = schedule_target(spec);
        const Metric metric{spec.quant.alpha};
        for (const LayerTensor& t : m.tensors)
            layers.push_back(schedule_layer(t, target, metric).layer);
    }

    const SimReport rep = simulate_network(layers, cfg);

    CsvWriter csv({"layer", "avg_shifts", "tiles", "compute_cycles", "fill_drain_cycles",
                   "stall_cycles", "total_cycles", "sram_weight_bytes", "sram_act_bytes",
                   "sram_out_bytes", "dram_weight_bytes", "dram_act_bytes", "dram_out_bytes",
                   "energy_pj"});
    nlohmann::json jlayers = nlohmann::json::array();
    for (const LayerSim& l : rep.layers) {
        nlohmann::json jl;
        jl["layer"] = l.layer;
        jl["avg_shifts"] = l.avg_shifts;
        jl["tiles"] = l.tiles;
        jl["compute_cycles"] = l.compute_cycles;
        jl["fill_drain_cycles"] = l.fill_drain_cycles;
        jl["stall_cycles"] = l.stall_cycles;
        jl["total_cycles"] = l.total_cycles;
        jl["sram"] = {{"weight_bytes", l.sram.weight_bytes},
                      {"act_bytes", l.sram.act_bytes},
                      {"out_bytes", l.sram.out_bytes}};
        jl["dram"] = {{"weight_bytes", l.dram.weight_bytes},
                      {"act_bytes", l.dram.act_bytes},
                      {"out_bytes", l.dram.out_bytes}};
        jl["energy_pj"] = l.energy_pj;
        jlayers.push_back(std::move(jl));
        csv.row({l.layer, csv_cell(l.avg_shifts), csv_cell(l.tiles), csv_cell(l.compute_cycles),
                 csv_cell(l.fill_drain_cycles), csv_cell(l.stall_cycles),
                 csv_cell(l.total_cycles), csv_cell(l.sram.weight_bytes),
                 csv_cell(l.sram.act_bytes), csv_cell(l.sram.out_bytes),
                 csv_cell(l.dram.weight_bytes), csv_cell(l.dram.act_bytes),
                 csv_cell(l.dram.out_bytes), csv_cell(l.energy_pj)});
    }

    // geometry-only sweeps: cycles depend on shift counts, not mask contents
    CsvWriter sweep({"shifts", "ss_cycles", "ds_cycles", "ratio"});
    std::vector<TilingPlan> plans;
    plans.reserve(m.tensors.size());
    for (const LayerTensor& t : m.tensors) plans.push_back(tile_layer(t.spec, cfg));
    for (int n = 1; n <= spec.quant.bits; ++n) {
        std::int64_t ss = 0, ds = 0;
        ArrayConfig ss_cfg = cfg, ds_cfg = cfg;
        ss_cfg.pe_mode = PeMode::single_shift;
        ds_cfg.pe_mode = PeMode::double_shift;
        for (const TilingPlan& plan : plans) {
            ss += simulate_layer(plan, n, spec.quant.mode, ss_cfg).total_cycles;
            ds += simulate_layer(plan, n, spec.quant.mode, ds_cfg).total_cycles;
        }
        sweep.row({std::to_string(n), csv_cell(ss), csv_cell(ds),
                   csv_cell(double(ss) / double(ds))});
    }

    CsvWriter act_rows({"act_bits", "total_cycles", "energy_pj"});
    for (int n = 1; n <= 8; ++n) {
        std::int64_t cycles = 0;
        double energy = 0.0;
        for (const TilingPlan& plan : plans) {
            const LayerSim l = simulate_layer_act_serial(plan, n, cfg);
            cycles += l.total_cycles;
            energy += l.energy_pj;
        }
        act_rows.row({std::to_string(n), csv_cell(cycles), csv_cell(energy)});
    }

    CsvWriter ratio_csv({"layer", "dram_weight_bytes", "dram_act_bytes", "ratio"});
    for (const DramRatioRow& r : dram_ratio_report(layers, cfg))
        ratio_csv.row({r.layer, csv_cell(r.weight_bytes), csv_cell(r.act_bytes),
                       csv_cell(r.ratio)});

    OutDir out(spec);
    nlohmann::json report;
    report["model"] = m.label;
    report["array"] = {{"rows", cfg.rows},
                       {"cols", cfg.cols},
                       {"group_size", cfg.group_size},
                       {"pe", pe_name(cfg.pe_mode)},
                       {"act_buffer_bytes", cfg.act_buffer_bytes},
                       {"weight_buffer_bytes", cfg.weight_buffer_bytes},
                       {"out_buffer_bytes", cfg.out_buffer_bytes},
                       {"frequency_mhz", cfg.costs.frequency_mhz}};
    report["layers"] = jlayers;
    report["totals"] = {{"cycles", rep.total_cycles},
                        {"energy_pj", rep.total_energy_pj},
                        {"frames_per_second", rep.frames_per_second},
                        {"frames_per_joule", rep.frames_per_joule}};
    out.write("simulate_report.json", report.dump(2) + "\n");
    out.write("simulate_report.csv", csv.str());
    out.write("pe_sweep.csv", sweep.str());
    out.write("act_serial.csv", act_rows.str());
    out.write("dram_ratio.csv", ratio_csv.str());
    out.write_record(flag_json(spec), m.inputs);
    return 0;
}

namespace {

struct SuiteResult {
    std::string name;
    std::int64_t cases = 0;
    bool pass = true;
    std::string detail;
};

void fail(SuiteResult& r, std::int64_t case_index, const std::string& what,
          std::uint64_t seed) {
    r.pass = false;
    r.detail = "case " + std::to_string(case_index) + ": " + what + " (reproduce with --seed " +
               std::to_string(seed) + ")";
}

SuiteResult verify_mac(std::uint64_t seed, std::int64_t cases) {
    SuiteResult r;
    r.name = "mac-equivalence";
    r.cases = cases;
    std::mt19937_64 rng(seed);
    std::vector<std::vector<ShiftSet>> sparse(9), consec(9);
    for (int n = 1; n <= 8; ++n) {
        sparse[std::size_t(n)] = enumerate_shift_sets(8, n, ShiftMode::sparse);
        consec[std::size_t(n)] = enumerate_shift_sets(8, n, ShiftMode::consecutive);
    }
    for (std::int64_t c = 0; c < cases; ++c) {
        const int m = 1 + int(rng() % 8);
        const int n = 1 + int(rng() % 8);
        const auto& pool = (rng() & 1) ? consec[std::size_t(n)] : sparse[std::size_t(n)];
        GroupEncoding enc;
        enc.shift_set = pool[rng() % pool.size()];
        std::vector<std::uint8_t> acts(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            enc.signs.push_back((rng() & 1) ? -1 : 1);
            enc.masks.push_back(std::uint8_t(rng() & ((1u << n) - 1)));
            acts[std::size_t(i)] = std::uint8_t(rng() & 0xff);
        }
        const int got = eval_swis_mac(enc, acts);
        const std::int64_t want = eval_reference_mac(acts, dequant_group(enc));
        if (got != want) {
            fail(r, c, "grouped MAC " + std::to_string(got) + " != reference " +
                           std::to_string(want), seed);
            return r;
        }
    }
    return r;
}

SuiteResult verify_bitserial(std::uint64_t seed, std::int64_t cases) {
    SuiteResult r;
    r.name = "bitserial-equivalence";
    r.cases = cases;
    std::mt19937_64 rng(seed + 1);
    for (std::int64_t c = 0; c < cases; ++c) {
        const int m = 1 + int(rng() % 8);
        std::vector<std::uint8_t> acts(static_cast<std::size_t>(m));
        std::vector<SignMagWeight> ws(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            acts[std::size_t(i)] = std::uint8_t(rng() & 0xff);
            ws[std::size_t(i)].sign = (rng() & 1) ? -1 : 1;
            ws[std::size_t(i)].magnitude = std::uint8_t(rng() & 0x7f);
        }
        std::int64_t want = 0;
        for (int i = 0; i < m; ++i)
            want += std::int64_t(acts[std::size_t(i)]) * ws[std::size_t(i)].value();
        if (eval_bitserial_mac(acts, ws, 8) != want) {
            fail(r, c, "weight-bit-serial MAC mismatch", seed);
            return r;
        }
        const int k = int(rng() % 9);
        std::int64_t trunc_want = 0;
        for (int i = 0; i < m; ++i) {
            const int a_top = k == 0 ? 0 : (acts[std::size_t(i)] >> (8 - k)) << (8 - k);
            trunc_want += std::int64_t(a_top) * ws[std::size_t(i)].value();
        }
        if (eval_bitserial_trunc_mac(acts, ws, k) != trunc_want) {
            fail(r, c, "activation-serial MAC mismatch at " + std::to_string(k) + " bits", seed);
            return r;
        }
    }
    return r;
}

SuiteResult verify_nearest_mask(std::uint64_t seed, std::int64_t cases) {
    SuiteResult r;
    r.name = "nearest-mask";
    r.cases = cases;
    std::mt19937_64 rng(seed + 2);
    std::vector<std::vector<ShiftSet>> sparse(9), consec(9);
    for (int n = 1; n <= 8; ++n) {
        sparse[std::size_t(n)] = enumerate_shift_sets(8, n, ShiftMode::sparse);
        consec[std::size_t(n)] = enumerate_shift_sets(8, n, ShiftMode::consecutive);
    }
    for (std::int64_t c = 0; c < cases; ++c) {
        const int n = 1 + int(rng() % 8);
        const auto& pool = (rng() & 1) ? consec[std::size_t(n)] : sparse[std::size_t(n)];
        const ShiftSet& set = pool[rng() % pool.size()];
        const std::uint8_t mag = std::uint8_t(rng() & 0xff);
        int best_err = 1 << 30, best_dec = 0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            const int dec = decoded_magnitude(set, std::uint8_t(mask));
            const int err = std::abs(int(mag) - dec);
            if (err < best_err || (err == best_err && dec < best_dec)) {
                best_err = err;
                best_dec = dec;
            }
        }
        const int dec = decoded_magnitude(set, fit_mask(set, mag));
        if (std::abs(int(mag) - dec) != best_err || dec != best_dec) {
            fail(r, c, "nearest mask for magnitude " + std::to_string(int(mag)), seed);
            return r;
        }
    }
    return r;
}

SuiteResult verify_selection(std::uint64_t seed, std::int64_t cases) {
    SuiteResult r;
    r.name = "selection-optimality";
    r.cases = cases;
    std::mt19937_64 rng(seed + 3);
    for (std::int64_t c = 0; c < cases; ++c) {
        const int m = 1 + int(rng() % 6);
        const int n = 1 + int(rng() % 3);
        const ShiftMode sm = (rng() & 1) ? ShiftMode::consecutive : ShiftMode::sparse;
        const Metric metric{(rng() & 1) ? 1.0 : 0.0};
        std::vector<SignMagWeight> group(static_cast<std::size_t>(m));
        for (auto& w : group) {
            w.sign = (rng() & 1) ? -1 : 1;
            w.magnitude = std::uint8_t(rng() & 0x7f);
        }
        const ShiftEnumerator sets(8, n, sm);
        const GroupSelection sel = select_group_encoding(group, sets, metric);
        double best = std::numeric_limits<double>::infinity();
        for (const ShiftSet& set : enumerate_shift_sets(8, n, sm)) {
            const GroupEncoding enc = fit_masks(group, set);
            const auto errors = encoding_errors(group, enc);
            best = std::min(best, metric_cost(metric, errors));
        }
        if (sel.cost != best) {
            fail(r, c, "selected cost " + format_double(sel.cost) + " != exhaustive best " +
                           format_double(best), seed);
            return r;
        }
    }
    return r;
}

SuiteResult verify_probabilities() {
    SuiteResult r;
    r.name = "probability-exactness";
    r.cases = 27;
    for (QuantMode mode : {QuantMode::swis, QuantMode::swis_c, QuantMode::trunc}) {
        for (int n = 0; n <= 8; ++n) {
            if (lossless_probability(mode, n) != brute_force_lossless(mode, n)) {
                r.pass = false;
                r.detail = std::string("formula != enumeration for ") + mode_name(mode) +
                           " at " + std::to_string(n) + " shifts";
                return r;
            }
        }
    }
    return r;
}

SuiteResult verify_roundtrip(std::uint64_t seed) {
    SuiteResult r;
    r.name = "serialize-roundtrip";
    r.cases = 3;
    std::mt19937_64 rng(seed + 4);
    LayerTensor t;
    t.spec.name = "fixture";
    t.spec.kind = LayerKind::conv;
    t.spec.out_channels = 5;
    t.spec.in_channels = 3;
    t.spec.kernel_h = 2;
    t.spec.kernel_w = 2;
    t.spec.input_h = 4;
    t.spec.input_w = 4;
    t.spec.stride = 1;
    t.spec.weight_len = std::uint64_t(t.spec.weight_count()) * 4;
    t.scale = 0.01;
    t.weights.resize(std::size_t(t.spec.weight_count()));
    for (auto& w : t.weights) {
        w.sign = (rng() & 1) ? -1 : 1;
        w.magnitude = std::uint8_t(rng() & 0x7f);
    }

    QuantizedModel model;
    model.bits = 8;
    for (QuantMode mode : {QuantMode::swis, QuantMode::swis_c, QuantMode::trunc}) {
        QuantConfig cfg;
        cfg.mode = mode;
        cfg.shift_count = 2;
        model.layers.push_back(quantize_tensor(t, cfg));
    }
    const QuantizedModel back = decode_quantized(encode_quantized(model));
    if (back.layers.size() != model.layers.size()) {
        r.pass = false;
        r.detail = "layer count changed";
        return r;
    }
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const QuantizedLayer& a = model.layers[i];
        const QuantizedLayer& b = back.layers[i];
        if (a.spec.name != b.spec.name || a.scale != b.scale || a.mode != b.mode ||
            a.filter_shifts != b.filter_shifts || a.groups != b.groups) {
            r.pass = false;
            r.detail = std::string("layer ") + std::to_string(i) + " (" + mode_name(a.mode) +
                       ") changed across encode/decode";
            return r;
        }
    }
    return r;
}

SuiteResult verify_trunc_window(std::uint64_t seed, std::int64_t cases) {
    SuiteResult r;
    r.name = "trunc-window";
    r.cases = cases;
    std::mt19937_64 rng(seed + 5);
    for (std::int64_t c = 0; c < cases; ++c) {
        const int n = 1 + int(rng() % 8);
        const std::uint8_t mag = std::uint8_t(rng() & 0xff);
        const int shift = 8 - n;
        int best_err = 1 << 30, best_q = 0;
        for (int q = 0; q < (1 << n); ++q) {
            const int err = std::abs(int(mag) - (q << shift));
            if (err < best_err || (err == best_err && q > best_q)) {
                best_err = err;
                best_q = q;
            }
        }
        if (int(trunc_mask(mag, 8, n)) != best_q) {
            fail(r, c, "window rounding of " + std::to_string(int(mag)) + " at " +
                           std::to_string(n) + " bits", seed);
            return r;
        }
    }
    return r;
}

} // namespace

int cmd_verify(const RunSpec& spec) {
    if (spec.mac_cases < 1 || spec.group_cases < 1)
        throw RangeError("verify needs positive --mac-cases and --group-cases");

    std::vector<SuiteResult> suites;
    suites.push_back(verify_mac(spec.seed, spec.mac_cases));
    suites.push_back(verify_bitserial(spec.seed, spec.mac_cases));
    suites.push_back(verify_nearest_mask(spec.seed, spec.group_cases));
    suites.push_back(verify_selection(spec.seed, spec.group_cases));
    suites.push_back(verify_probabilities());
    suites.push_back(verify_roundtrip(spec.seed));
    suites.push_back(verify_trunc_window(spec.seed, spec.group_cases));

    int fails = 0;
    nlohmann::json jsuites = nlohmann::json::array();
    for (const SuiteResult& s : suites) {
        if (s.pass) {
            std::cout << "PASS " << s.name << " (" << s.cases << " cases)\n";
        } else {
            std::cout << "FAIL " << s.name << ": " << s.detail << "\n";
            ++fails;
        }
        nlohmann::json js;
        js["suite"] = s.name;
        js["cases"] = s.cases;
        js["pass"] = s.pass;
        if (!s.detail.empty()) js["detail"] = s.detail;
        jsuites.push_back(std::move(js));
    }
    std::cout << "verify: " << (suites.size() - std::size_t(fails)) << "/" << suites.size()
              << " suites passed\n";

    OutDir out(spec);
    nlohmann::json report;
    report["seed"] = spec.seed;
    report["suites"] = jsuites;
    out.write("verify_report.json", report.dump(2) + "\n");
    out.write_record(flag_json(spec), nlohmann::json::object());
    return fails == 0 ? 0 : 1;
}

namespace {

void parse_sa(const std::string& text, RunSpec& spec) {
    const auto x = text.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= text.size())
        throw ParseError("--sa expects ROWSxCOLS, e.g. 8x8");
    const auto parse_part = [&](const char* first, const char* last) {
        int v = 0;
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc() || res.ptr != last || v < 1)
            throw ParseError("--sa expects positive ROWSxCOLS");
        return v;
    };
    spec.sa_rows = parse_part(text.data(), text.data() + x);
    spec.sa_cols = parse_part(text.data() + x + 1, text.data() + text.size());
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"shared-shift weight quantization, scheduling and array simulation"};
    app.require_subcommand(1);

    RunSpec spec;
    std::string mode_str = "swis";
    std::string pe_str = "ss";
    std::string sa_str = "8x8";

    const auto add_model = [&](CLI::App* sub) {
        sub->add_option("manifest", spec.manifest_path, "model manifest JSON");
        sub->add_option("--synthetic", spec.synthetic,
                        "generate a synthetic model (resnet18|mobilenetv2|vgg16)");
        sub->add_option("--seed", spec.seed, "seed for synthetic weights");
    };
    const auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", spec.out_dir, "output directory");
        sub->add_flag("--force", spec.force, "overwrite existing outputs");
    };
    const auto add_quant = [&](CLI::App* sub) {
        sub->add_option("--mode", mode_str, "swis|swis-c|trunc")
            ->check(CLI::IsMember({"swis", "swis-c", "trunc"}));
        sub->add_option("--shifts", spec.quant.shift_count, "shift count per group")
            ->check(CLI::Range(1, 8));
        sub->add_option("--group", spec.quant.group_size, "weights per group")
            ->check(CLI::Range(1, 16));
        sub->add_option("--alpha", spec.quant.alpha, "signed-error weight in the group metric");
    };
    const auto add_array = [&](CLI::App* sub) {
        sub->add_option("--pe", pe_str, "ss|ds")->check(CLI::IsMember({"ss", "ds"}));
        sub->add_option("--sa", sa_str, "array geometry ROWSxCOLS");
    };

    CLI::App* quantize = app.add_subcommand("quantize", "quantize a model uniformly");
    add_model(quantize);
    add_out(quantize);
    add_quant(quantize);

    CLI::App* schedule = app.add_subcommand("schedule", "fit per-filter shift counts to a target");
    add_model(schedule);
    add_out(schedule);
    add_quant(schedule);
    add_array(schedule);
    schedule->add_option("--target-shifts", spec.target_shifts, "average shift count (rational)")
        ->required();

    CLI::App* analyze = app.add_subcommand("analyze", "closed-form sweeps and model RMSE tables");
    analyze->add_option("kind", spec.analyze_kind, "prob|compression|rmse")
        ->required()
        ->check(CLI::IsMember({"prob", "compression", "rmse"}));
    add_model(analyze);
    add_out(analyze);
    add_quant(analyze);

    CLI::App* simulate = app.add_subcommand("simulate", "systolic-array performance model");
    add_model(simulate);
    add_out(simulate);
    add_quant(simulate);
    add_array(simulate);
    simulate->add_option("--target-shifts", spec.target_shifts,
                         "schedule to this average before simulating");
    simulate->add_option("--costs", spec.costs_path, "cost table JSON");

    CLI::App* verify = app.add_subcommand("verify", "randomized property suites");
    verify->add_option("--seed", spec.seed, "RNG seed");
    verify->add_option("--mac-cases", spec.mac_cases, "MAC equivalence cases");
    verify->add_option("--group-cases", spec.group_cases, "per-group property cases");
    add_out(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        spec.quant.mode = parse_mode(mode_str);
        spec.pe_mode = pe_str == "ds" ? PeMode::double_shift : PeMode::single_shift;
        parse_sa(sa_str, spec);

        if (quantize->parsed()) {
            spec.command = "quantize";
            return cmd_quantize(spec);
        }
        if (schedule->parsed()) {
            spec.command = "schedule";
            return cmd_schedule(spec);
        }
        if (analyze->parsed()) {
            spec.command = "analyze";
            return cmd_analyze(spec);
        }
        if (simulate->parsed()) {
            spec.command = "simulate";
            return cmd_simulate(spec);
        }
        spec.command = "verify";
        return cmd_verify(spec);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace swis
