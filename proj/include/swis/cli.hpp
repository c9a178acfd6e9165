#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "swis/quantize.hpp"
#include "swis/schedule.hpp"
#include "swis/sim.hpp"

namespace swis {

inline constexpr const char* kToolVersion = "1.0.0";

// One fully parsed invocation. (inputs, seed, flags) determine every output
// byte; each command writes a run record next to its reports.
struct RunSpec {
    std::string command;
    std::filesystem::path manifest_path; // exclusive with synthetic
    std::string synthetic;               // resnet18 | mobilenetv2 | vgg16
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "out";
    bool force = false; // allow overwriting existing outputs

    QuantConfig quant; // --mode --shifts --group --alpha

    std::string target_shifts; // scheduler average, rational text
    PeMode pe_mode = PeMode::single_shift;
    int sa_rows = 8;
    int sa_cols = 8;
    std::filesystem::path costs_path; // empty -> built-in placeholder table

    std::string analyze_kind; // prob | compression | rmse

    std::int64_t mac_cases = 100000; // verify suite sizes
    std::int64_t group_cases = 1000;
};

int cmd_quantize(const RunSpec& spec);
int cmd_schedule(const RunSpec& spec);
int cmd_analyze(const RunSpec& spec);
int cmd_simulate(const RunSpec& spec);
int cmd_verify(const RunSpec& spec);

int run_cli(int argc, const char* const* argv);

} // namespace swis
