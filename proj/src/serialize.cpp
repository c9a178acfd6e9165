#include "swis/serialize.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "swis/errors.hpp"

namespace swis {

namespace {

constexpr char kMagic[6] = {'S', 'W', 'I', 'S', 'Q', '1'};
constexpr std::uint8_t kVersion = 1;

class ByteWriter {
public:
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) {
        u8(std::uint8_t(v));
        u8(std::uint8_t(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(std::uint8_t(v >> 8 * i));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(std::uint8_t(v >> 8 * i));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        if (s.empty() || s.size() > 0xffff) throw RangeError("layer name length unsupported");
        u16(std::uint16_t(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }

    void put_bits(unsigned v, int n) {
        for (int i = 0; i < n; ++i) {
            if (bitpos_ == 0) bytes.push_back(0);
            if (v >> i & 1) bytes.back() |= std::uint8_t(1u << bitpos_);
            bitpos_ = (bitpos_ + 1) & 7;
        }
    }
    void align_bits() { bitpos_ = 0; }

private:
    int bitpos_ = 0;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}

    std::uint8_t u8() {
        need(1);
        return b_[pos_++];
    }
    std::uint16_t u16() {
        std::uint16_t v = u8();
        return std::uint16_t(v | u8() << 8);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(u8()) << 8 * i;
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(u8()) << 8 * i;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::size_t n = u16();
        need(n);
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    unsigned get_bits(int n) {
        unsigned v = 0;
        for (int i = 0; i < n; ++i) {
            if (bitpos_ == 0) cur_ = u8();
            v |= unsigned(cur_ >> bitpos_ & 1) << i;
            bitpos_ = (bitpos_ + 1) & 7;
        }
        return v;
    }
    void align_bits() { bitpos_ = 0; }
    bool at_end() const { return pos_ == b_.size(); }

private:
    void need(std::size_t n) {
        if (b_.size() - pos_ < n) throw ParseError("truncated quantized model file");
    }

    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
    int bitpos_ = 0;
    std::uint8_t cur_ = 0;
};

std::string at(const std::string& layer, std::int64_t group = -1) {
    std::string s = "layer '" + layer + "'";
    if (group >= 0) s += " group " + std::to_string(group);
    return s;
}

} // namespace

int group_record_bits(QuantMode mode, int group_size, int shift_count) {
    switch (mode) {
    case QuantMode::swis:
        return 3 * shift_count + group_size + group_size * shift_count;
    case QuantMode::swis_c:
        return 3 + group_size + group_size * shift_count;
    case QuantMode::trunc:
        return group_size + group_size * shift_count;
    }
    throw RangeError("unknown mode");
}

std::int64_t packed_weight_bytes(const QuantizedLayer& layer) {
    std::int64_t bits = 0;
    for (std::uint8_t n : layer.filter_shifts)
        bits += std::int64_t(layer.groups_per_filter) *
                group_record_bits(layer.mode, layer.group_size, n);
    return (bits + 7) / 8;
}

std::vector<std::uint8_t> encode_quantized(const QuantizedModel& model) {
    if (model.bits < 1 || model.bits > 8) throw RangeError("bit width must be in [1, 8]");
    if (model.layers.empty()) throw RangeError("nothing to encode");

    ByteWriter w;
    for (char c : kMagic) w.u8(std::uint8_t(c));
    w.u8(kVersion);
    w.u8(std::uint8_t(model.bits));
    w.u32(std::uint32_t(model.layers.size()));

    for (const QuantizedLayer& l : model.layers) {
        if (l.bits != model.bits) throw RangeError(at(l.spec.name) + ": mixed bit widths");
        if (l.groups_per_filter != groups_per_filter(l.spec, l.group_size) ||
            std::ssize(l.groups) !=
                std::int64_t(l.spec.out_channels) * l.groups_per_filter ||
            std::ssize(l.filter_shifts) != l.spec.out_channels)
            throw RangeError(at(l.spec.name) + ": inconsistent group bookkeeping");
        if (!(l.scale > 0.0) || !std::isfinite(l.scale))
            throw RangeError(at(l.spec.name) + ": scale must be finite and positive");

        w.str(l.spec.name);
        w.u8(l.spec.kind == LayerKind::conv ? 0 : 1);
        w.u32(std::uint32_t(l.spec.out_channels));
        w.u32(std::uint32_t(l.spec.in_channels));
        w.u32(std::uint32_t(l.spec.kernel_h));
        w.u32(std::uint32_t(l.spec.kernel_w));
        w.u32(std::uint32_t(l.spec.input_h));
        w.u32(std::uint32_t(l.spec.input_w));
        w.u32(std::uint32_t(l.spec.stride));
        w.f64(l.scale);
        w.u8(std::uint8_t(l.mode));
        w.u32(std::uint32_t(l.group_size));
        for (std::uint8_t n : l.filter_shifts) w.u8(n);
        w.u64(std::uint64_t(l.groups.size()));

        for (std::size_t g = 0; g < l.groups.size(); ++g) {
            const GroupEncoding& enc = l.groups[g];
            const int n = int(l.filter_shifts[g / std::size_t(l.groups_per_filter)]);
            if (enc.shift_set.count() != n || enc.group_size() != l.group_size)
                throw RangeError(at(l.spec.name, std::int64_t(g)) + ": malformed encoding");
            validate(enc, l.bits);

            if (l.mode == QuantMode::swis) {
                for (std::uint8_t s : enc.shift_set.shifts) w.put_bits(s, 3);
            } else {
                w.put_bits(enc.shift_set.shifts.front(), 3);
            }
            for (std::int8_t s : enc.signs) w.put_bits(s < 0 ? 1u : 0u, 1);
            for (std::uint8_t m : enc.masks) w.put_bits(m, n);
            w.align_bits();
        }
    }
    return w.bytes;
}

QuantizedModel decode_quantized(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    for (char c : kMagic) {
        if (r.u8() != std::uint8_t(c)) throw VersionError("not a SWISQ file");
    }
    const std::uint8_t version = r.u8();
    if (version != kVersion)
        throw VersionError("unsupported SWISQ version " + std::to_string(version));

    QuantizedModel model;
    model.bits = r.u8();
    if (model.bits < 1 || model.bits > 8) throw ParseError("bad bit width");
    const std::uint32_t layer_count = r.u32();
    if (layer_count == 0) throw ParseError("file has no layers");

    for (std::uint32_t li = 0; li < layer_count; ++li) {
        QuantizedLayer l;
        l.bits = model.bits;
        l.spec.name = r.str();
        const std::uint8_t kind = r.u8();
        if (kind > 1) throw ParseError(at(l.spec.name) + ": bad layer kind");
        l.spec.kind = kind == 0 ? LayerKind::conv : LayerKind::depthwise_conv;
        l.spec.out_channels = int(r.u32());
        l.spec.in_channels = int(r.u32());
        l.spec.kernel_h = int(r.u32());
        l.spec.kernel_w = int(r.u32());
        l.spec.input_h = int(r.u32());
        l.spec.input_w = int(r.u32());
        l.spec.stride = int(r.u32());
        if (l.spec.out_channels <= 0 || l.spec.in_channels <= 0 || l.spec.kernel_h <= 0 ||
            l.spec.kernel_w <= 0 || l.spec.input_h < l.spec.kernel_h ||
            l.spec.input_w < l.spec.kernel_w || l.spec.stride <= 0)
            throw ParseError(at(l.spec.name) + ": bad geometry");
        l.spec.weight_len = std::uint64_t(l.spec.weight_count()) * 4;
        l.scale = r.f64();
        if (!(l.scale > 0.0) || !std::isfinite(l.scale))
            throw ParseError(at(l.spec.name) + ": bad scale");
        const std::uint8_t mode = r.u8();
        if (mode > 2) throw ParseError(at(l.spec.name) + ": bad mode");
        l.mode = QuantMode(mode);
        l.group_size = int(r.u32());
        if (l.group_size < 1 || l.group_size > 64)
            throw ParseError(at(l.spec.name) + ": bad group size");
        l.groups_per_filter = groups_per_filter(l.spec, l.group_size);

        l.filter_shifts.resize(std::size_t(l.spec.out_channels));
        for (std::uint8_t& n : l.filter_shifts) {
            n = r.u8();
            if (n < 1 || n > model.bits)
                throw ParseError(at(l.spec.name) + ": bad per-filter shift count");
        }

        const std::uint64_t group_count = r.u64();
        if (group_count != std::uint64_t(l.spec.out_channels) * std::uint64_t(l.groups_per_filter))
            throw ParseError(at(l.spec.name) + ": group count does not match geometry");

        l.groups.reserve(group_count);
        for (std::uint64_t g = 0; g < group_count; ++g) {
            const int n = int(l.filter_shifts[g / std::uint64_t(l.groups_per_filter)]);
            GroupEncoding enc;
            if (l.mode == QuantMode::swis) {
                enc.shift_set.mode = ShiftMode::sparse;
                for (int j = 0; j < n; ++j)
                    enc.shift_set.shifts.push_back(std::uint8_t(r.get_bits(3)));
            } else {
                enc.shift_set.mode = ShiftMode::consecutive;
                const unsigned off = r.get_bits(3);
                for (int j = 0; j < n; ++j) enc.shift_set.shifts.push_back(std::uint8_t(off + j));
            }
            enc.signs.reserve(std::size_t(l.group_size));
            enc.masks.reserve(std::size_t(l.group_size));
            for (int i = 0; i < l.group_size; ++i)
                enc.signs.push_back(r.get_bits(1) ? -1 : 1);
            for (int i = 0; i < l.group_size; ++i)
                enc.masks.push_back(std::uint8_t(r.get_bits(n)));
            r.align_bits();
            try {
                validate(enc, model.bits);
            } catch (const std::exception& e) {
                throw ParseError(at(l.spec.name, std::int64_t(g)) + ": " + e.what());
            }
            l.groups.push_back(std::move(enc));
        }
        model.layers.push_back(std::move(l));
    }
    if (!r.at_end()) throw ParseError("trailing bytes after last layer");
    return model;
}

void save_quantized(const std::filesystem::path& path, const QuantizedModel& model) {
    const auto bytes = encode_quantized(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw ParseError("write failed for " + path.string());
}

QuantizedModel load_quantized(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_quantized(bytes);
}

} // namespace swis
