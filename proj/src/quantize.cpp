#include "swis/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "swis/errors.hpp"

namespace swis {

std::vector<int> encoding_errors(std::span<const SignMagWeight> group, const GroupEncoding& enc) {
    if (group.size() != std::size_t(enc.group_size()))
        throw RangeError("group size does not match encoding");
    std::vector<int> out;
    out.reserve(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
        const int d = decoded_magnitude(enc.shift_set, enc.masks[i]);
        out.push_back(int(group[i].sign) * (int(group[i].magnitude) - d));
    }
    return out;
}

std::int64_t signed_error(std::span<const int> errors) {
    std::int64_t s = 0;
    for (int e : errors) s += e;
    return s;
}

double mse(std::span<const int> errors) {
    if (errors.empty()) return 0.0;
    std::int64_t q = 0;
    for (int e : errors) q += std::int64_t(e) * e;
    return double(q) / double(errors.size());
}

double msepp(std::span<const int> errors, double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw RangeError("metric alpha must be finite and non-negative");
    if (errors.empty()) return 0.0;
    std::int64_t s = 0;
    std::int64_t q = 0;
    for (int e : errors) {
        s += e;
        q += std::int64_t(e) * e;
    }
    return (alpha * double(s) * double(s) + double(q)) / double(errors.size());
}

double metric_cost(const Metric& metric, std::span<const int> errors) {
    return msepp(errors, metric.alpha);
}

std::int64_t signed_error(std::span<const SignMagWeight> group, const GroupEncoding& enc) {
    return signed_error(encoding_errors(group, enc));
}

double mse(std::span<const SignMagWeight> group, const GroupEncoding& enc) {
    return mse(encoding_errors(group, enc));
}

double msepp(std::span<const SignMagWeight> group, const GroupEncoding& enc, double alpha) {
    return msepp(encoding_errors(group, enc), alpha);
}

std::vector<ShiftSet> enumerate_shift_sets(int bits, int count, ShiftMode mode) {
    if (bits < 1 || bits > 8) throw RangeError("bit width must be in [1, 8]");
    if (count < 1 || count > bits) throw RangeError("shift count must be in [1, bits]");

    std::vector<ShiftSet> out;
    if (mode == ShiftMode::consecutive) {
        for (int off = 0; off + count <= bits; ++off) {
            ShiftSet s;
            s.mode = mode;
            for (int j = 0; j < count; ++j) s.shifts.push_back(std::uint8_t(off + j));
            out.push_back(std::move(s));
        }
        return out;
    }

    std::vector<int> c(static_cast<std::size_t>(count));
    std::iota(c.begin(), c.end(), 0);
    while (true) {
        ShiftSet s;
        s.mode = ShiftMode::sparse;
        for (int v : c) s.shifts.push_back(std::uint8_t(v));
        out.push_back(std::move(s));
        int i = count - 1;
        while (i >= 0 && c[std::size_t(i)] == bits - count + i) --i;
        if (i < 0) break;
        ++c[std::size_t(i)];
        for (int j = i + 1; j < count; ++j) c[std::size_t(j)] = c[std::size_t(j - 1)] + 1;
    }
    return out;
}

std::uint8_t fit_mask(const ShiftSet& set, std::uint8_t magnitude) {
    const unsigned mask_count = 1u << set.count();
    std::uint8_t best = 0;
    int best_err = int(magnitude); // mask 0 decodes to 0
    for (unsigned mask = 1; mask < mask_count; ++mask) {
        // decoded magnitude grows with the mask value, so a strict-improvement
        // scan resolves ties toward the smaller representable value
        const int err = std::abs(decoded_magnitude(set, std::uint8_t(mask)) - int(magnitude));
        if (err < best_err) {
            best_err = err;
            best = std::uint8_t(mask);
        }
    }
    return best;
}

GroupEncoding fit_masks(std::span<const SignMagWeight> group, const ShiftSet& set) {
    if (group.empty()) throw RangeError("cannot encode an empty group");
    GroupEncoding enc;
    enc.shift_set = set;
    enc.signs.reserve(group.size());
    enc.masks.reserve(group.size());
    for (const SignMagWeight& w : group) {
        enc.signs.push_back(w.sign);
        enc.masks.push_back(fit_mask(set, w.magnitude));
    }
    return enc;
}

ShiftEnumerator::ShiftEnumerator(int bits, int count, ShiftMode mode)
    : bits_(bits), count_(count), sets_(enumerate_shift_sets(bits, count, mode)) {
    mask_lut_.resize(sets_.size());
    dec_lut_.resize(sets_.size());
    for (std::size_t k = 0; k < sets_.size(); ++k) {
        for (int mag = 0; mag < 256; ++mag) {
            const std::uint8_t m = fit_mask(sets_[k], std::uint8_t(mag));
            mask_lut_[k][std::size_t(mag)] = m;
            dec_lut_[k][std::size_t(mag)] = std::int16_t(decoded_magnitude(sets_[k], m));
        }
    }
}

GroupSelection select_group_encoding(std::span<const SignMagWeight> group,
                                     const ShiftEnumerator& sets, const Metric& metric) {
    if (group.empty()) throw RangeError("cannot encode an empty group");
    if (!(metric.alpha >= 0.0) || !std::isfinite(metric.alpha))
        throw RangeError("metric alpha must be finite and non-negative");

    const double m = double(group.size());
    std::size_t best_k = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sets.candidates().size(); ++k) {
        std::int64_t s = 0;
        std::int64_t q = 0;
        for (const SignMagWeight& w : group) {
            const int e = int(w.sign) * (int(w.magnitude) - sets.best_decoded(k, w.magnitude));
            s += e;
            q += std::int64_t(e) * e;
        }
        const double cost = (metric.alpha * double(s) * double(s) + double(q)) / m;
        if (cost < best_cost) {
            best_cost = cost;
            best_k = k;
        }
    }

    GroupSelection out;
    out.set_index = best_k;
    out.cost = best_cost;
    out.encoding.shift_set = sets.candidates()[best_k];
    out.encoding.signs.reserve(group.size());
    out.encoding.masks.reserve(group.size());
    out.errors.reserve(group.size());
    for (const SignMagWeight& w : group) {
        out.encoding.signs.push_back(w.sign);
        out.encoding.masks.push_back(sets.best_mask(best_k, w.magnitude));
        out.errors.push_back(int(w.sign) *
                             (int(w.magnitude) - sets.best_decoded(best_k, w.magnitude)));
    }
    return out;
}

double group_cost(std::span<const SignMagWeight> group, const ShiftEnumerator& sets,
                  const Metric& metric) {
    if (group.empty()) throw RangeError("cannot encode an empty group");
    if (!(metric.alpha >= 0.0) || !std::isfinite(metric.alpha))
        throw RangeError("metric alpha must be finite and non-negative");
    const double m = double(group.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sets.candidates().size(); ++k) {
        std::int64_t s = 0;
        std::int64_t q = 0;
        for (const SignMagWeight& w : group) {
            const int e = int(w.sign) * (int(w.magnitude) - sets.best_decoded(k, w.magnitude));
            s += e;
            q += std::int64_t(e) * e;
        }
        best = std::min(best, (metric.alpha * double(s) * double(s) + double(q)) / m);
    }
    return best;
}

double trunc_group_cost(std::span<const SignMagWeight> group, int bits, int count,
                        const Metric& metric) {
    if (group.empty()) throw RangeError("cannot encode an empty group");
    const int shift = bits - count;
    std::vector<int> errors;
    errors.reserve(group.size());
    for (const SignMagWeight& w : group) {
        const int d = int(trunc_mask(w.magnitude, bits, count)) << shift;
        errors.push_back(int(w.sign) * (int(w.magnitude) - d));
    }
    return metric_cost(metric, errors);
}

GroupEncoding select_shifts_swis(std::span<const SignMagWeight> group, int count,
                                 const Metric& metric, int bits) {
    const ShiftEnumerator sets(bits, count, ShiftMode::sparse);
    return select_group_encoding(group, sets, metric).encoding;
}

GroupEncoding select_shifts_swisc(std::span<const SignMagWeight> group, int count,
                                  const Metric& metric, int bits) {
    const ShiftEnumerator sets(bits, count, ShiftMode::consecutive);
    return select_group_encoding(group, sets, metric).encoding;
}

std::uint8_t trunc_mask(std::uint8_t magnitude, int bits, int count) {
    if (bits < 1 || bits > 8) throw RangeError("bit width must be in [1, 8]");
    if (count < 1 || count > bits) throw RangeError("shift count must be in [1, bits]");
    const int shift = bits - count;
    const int half = shift ? 1 << (shift - 1) : 0;
    const int q = (int(magnitude) + half) >> shift;
    return std::uint8_t(std::min(q, (1 << count) - 1));
}

GroupEncoding trunc_group(std::span<const SignMagWeight> group, int bits, int count) {
    if (group.empty()) throw RangeError("cannot encode an empty group");
    GroupEncoding enc;
    enc.shift_set.mode = ShiftMode::consecutive;
    for (int j = 0; j < count; ++j) enc.shift_set.shifts.push_back(std::uint8_t(bits - count + j));
    enc.signs.reserve(group.size());
    enc.masks.reserve(group.size());
    for (const SignMagWeight& w : group) {
        enc.signs.push_back(w.sign);
        enc.masks.push_back(trunc_mask(w.magnitude, bits, count));
    }
    return enc;
}

std::uint8_t truncate_activation(std::uint8_t a, int count) {
    if (count < 0 || count > 8) throw RangeError("activation bit count must be in [0, 8]");
    if (count == 0) return 0;
    return std::uint8_t(a & ~((1u << (8 - count)) - 1u));
}

void validate(const QuantConfig& cfg) {
    if (cfg.bits < 1 || cfg.bits > 8) throw RangeError("bit width must be in [1, 8]");
    if (cfg.shift_count < 1 || cfg.shift_count > cfg.bits)
        throw RangeError("shift count must be in [1, bits]");
    if (cfg.group_size < 1 || cfg.group_size > 64)
        throw RangeError("group size must be in [1, 64]");
    if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha))
        throw RangeError("metric alpha must be finite and non-negative");
}

int groups_per_filter(const LayerSpec& spec, int group_size) {
    const int chunks = (spec.in_channels + group_size - 1) / group_size;
    return spec.kernel_h * spec.kernel_w * chunks;
}

namespace {

void fill_group(const LayerTensor& tensor, int filter, int group_index, int group_size,
                std::vector<SignMagWeight>& out) {
    const LayerSpec& spec = tensor.spec;
    const int chunks = (spec.in_channels + group_size - 1) / group_size;
    const int pos = group_index / chunks;   // kernel position, row-major
    const int chunk = group_index % chunks; // channel chunk at that position
    const std::int64_t base =
        (std::int64_t(filter) * spec.kernel_h * spec.kernel_w + pos) * spec.in_channels;

    out.assign(std::size_t(group_size), SignMagWeight{});
    for (int lane = 0; lane < group_size; ++lane) {
        const int c = chunk * group_size + lane;
        if (c < spec.in_channels) out[std::size_t(lane)] = tensor.weights[std::size_t(base + c)];
    }
}

} // namespace

std::vector<SignMagWeight> extract_group(const LayerTensor& tensor, int filter, int group_index,
                                         int group_size) {
    if (group_size < 1) throw RangeError("group size must be positive");
    if (filter < 0 || filter >= tensor.spec.out_channels)
        throw RangeError("filter index out of range");
    if (group_index < 0 || group_index >= groups_per_filter(tensor.spec, group_size))
        throw RangeError("group index out of range");
    std::vector<SignMagWeight> out;
    fill_group(tensor, filter, group_index, group_size, out);
    return out;
}

double LayerQuantStats::rmse_int() const {
    if (weight_count == 0) return 0.0;
    return std::sqrt(double(squared_error_sum) / double(weight_count));
}

QuantizedLayer quantize_tensor(const LayerTensor& tensor, const QuantConfig& cfg) {
    const std::vector<int> uniform(std::size_t(tensor.spec.out_channels), cfg.shift_count);
    return quantize_tensor(tensor, cfg, uniform);
}

QuantizedLayer quantize_tensor(const LayerTensor& tensor, const QuantConfig& cfg,
                               std::span<const int> filter_shift_counts) {
    validate(cfg);
    const LayerSpec& spec = tensor.spec;
    if (std::ssize(filter_shift_counts) != spec.out_channels)
        throw RangeError("need one shift count per output channel");
    for (int n : filter_shift_counts)
        if (n < 1 || n > cfg.bits) throw RangeError("per-filter shift count must be in [1, bits]");
    if (tensor.weights.size() != std::size_t(spec.weight_count()))
        throw RangeError("tensor weight count does not match its dimensions");
    if (tensor.bits != cfg.bits) throw RangeError("tensor bit width does not match config");

    QuantizedLayer out;
    out.spec = spec;
    out.scale = tensor.scale;
    out.bits = cfg.bits;
    out.mode = cfg.mode;
    out.group_size = cfg.group_size;
    out.groups_per_filter = groups_per_filter(spec, cfg.group_size);
    out.filter_shifts.reserve(filter_shift_counts.size());
    for (int n : filter_shift_counts) out.filter_shifts.push_back(std::uint8_t(n));
    out.groups.reserve(std::size_t(spec.out_channels) * std::size_t(out.groups_per_filter));
    out.stats.weight_count = spec.weight_count();

    // one enumerator per distinct shift count in use
    std::map<int, ShiftEnumerator> enums;
    if (cfg.mode != QuantMode::trunc) {
        const ShiftMode sm =
            cfg.mode == QuantMode::swis ? ShiftMode::sparse : ShiftMode::consecutive;
        for (int n : filter_shift_counts)
            if (!enums.count(n)) enums.emplace(n, ShiftEnumerator(cfg.bits, n, sm));
    }

    const Metric metric{cfg.alpha};
    std::vector<SignMagWeight> group;
    for (int f = 0; f < spec.out_channels; ++f) {
        const int n = filter_shift_counts[std::size_t(f)];
        for (int g = 0; g < out.groups_per_filter; ++g) {
            fill_group(tensor, f, g, cfg.group_size, group);
            if (cfg.mode == QuantMode::trunc) {
                GroupEncoding enc = trunc_group(group, cfg.bits, n);
                for (std::size_t lane = 0; lane < group.size(); ++lane) {
                    const int d = decoded_magnitude(enc.shift_set, enc.masks[lane]);
                    const int e = int(group[lane].sign) * (int(group[lane].magnitude) - d);
                    out.stats.signed_error_sum += e;
                    out.stats.squared_error_sum += std::int64_t(e) * e;
                }
                out.groups.push_back(std::move(enc));
            } else {
                GroupSelection sel = select_group_encoding(group, enums.at(n), metric);
                for (int e : sel.errors) {
                    out.stats.signed_error_sum += e;
                    out.stats.squared_error_sum += std::int64_t(e) * e;
                }
                out.groups.push_back(std::move(sel.encoding));
            }
        }
    }
    return out;
}

QuantizedLayer quantize_layer_trunc(const LayerTensor& tensor, int count, int group_size) {
    QuantConfig cfg;
    cfg.mode = QuantMode::trunc;
    cfg.shift_count = count;
    cfg.group_size = group_size;
    cfg.bits = tensor.bits;
    return quantize_tensor(tensor, cfg);
}

} // namespace swis
