#include "swis/report.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "swis/errors.hpp"

namespace swis {

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::uint64_t fnv1a64(std::span<const std::byte> data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::byte b : data) {
        hash ^= std::uint64_t(std::to_integer<unsigned char>(b));
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t fnv1a64(std::string_view text) {
    return fnv1a64(std::as_bytes(std::span(text.data(), text.size())));
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    std::array<char, 65536> buf;
    while (in) {
        in.read(buf.data(), std::streamsize(buf.size()));
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= std::uint64_t(static_cast<unsigned char>(buf[std::size_t(i)]));
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[std::size_t(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

namespace {

bool needs_quotes(const std::string& cell) {
    return cell.find_first_of(",\"\n") != std::string::npos;
}

} // namespace

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    if (header.empty()) throw RangeError("CSV needs at least one column");
    emit(header);
}

void CsvWriter::row(std::vector<std::string> cells) {
    if (cells.size() != columns_) throw RangeError("CSV row width does not match header");
    emit(cells);
}

void CsvWriter::emit(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ',';
        if (needs_quotes(cells[i])) {
            text_ += '"';
            for (char c : cells[i]) {
                if (c == '"') text_ += '"';
                text_ += c;
            }
            text_ += '"';
        } else {
            text_ += cells[i];
        }
    }
    text_ += '\n';
}

std::string csv_cell(double v) { return format_double(v); }
std::string csv_cell(std::int64_t v) { return std::to_string(v); }

} // namespace swis
