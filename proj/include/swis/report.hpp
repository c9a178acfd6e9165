#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swis {

// shortest decimal string that round-trips the value
std::string format_double(double v);

std::uint64_t fnv1a64(std::span<const std::byte> data);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

// comma-separated rows with minimal quoting; plot-ready output
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(std::vector<std::string> cells);
    const std::string& str() const { return text_; }

private:
    void emit(const std::vector<std::string>& cells);
    std::string text_;
    std::size_t columns_;
};

std::string csv_cell(double v);
std::string csv_cell(std::int64_t v);

} // namespace swis
