#include "tn/tensorize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tn/rng.hpp"
#include "tn/tensor_ops.hpp"

namespace tn {

namespace {

void check_factors(std::span<const std::size_t> factors, std::size_t axis_len, const char* axis) {
    if (factors.empty()) throw ShapeError(std::string("no factors given for the ") + axis + " axis");
    if (dims_product(factors) != axis_len)
        throw ShapeError(std::string("product of ") + axis + " factors (" +
                         std::to_string(dims_product(factors)) + ") does not match the axis length " +
                         std::to_string(axis_len));
}

std::vector<std::size_t> parse_factor_list(const std::string& text) {
    std::vector<std::size_t> factors;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        factors.push_back(std::stoul(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    return factors;
}

}  // namespace

DenseTensor tensorize_image(const DenseTensor& pixels, const AxisFactorization& factors) {
    if (pixels.order() != 2 && pixels.order() != 3)
        throw ShapeError("tensorize expects an H x W or H x W x C image");
    check_factors(factors.row_factors, pixels.dim(0), "row");
    check_factors(factors.col_factors, pixels.dim(1), "column");

    // Row-major layout over (row digits, column digits, channel) is the
    // same linear order as (H, W, C): a pure reshape.
    std::vector<std::size_t> dims = factors.row_factors;
    dims.insert(dims.end(), factors.col_factors.begin(), factors.col_factors.end());
    if (pixels.order() == 3) dims.push_back(pixels.dim(2));
    return pixels.reshaped(std::move(dims));
}

DenseTensor detensorize_image(const DenseTensor& t, const AxisFactorization& factors,
                              bool has_channel) {
    const std::size_t expected =
        factors.row_factors.size() + factors.col_factors.size() + (has_channel ? 1 : 0);
    if (t.order() != expected) throw ShapeError("detensorize: tensor order does not match factors");
    std::vector<std::size_t> dims{dims_product(factors.row_factors),
                                  dims_product(factors.col_factors)};
    if (has_channel) dims.push_back(t.dim(t.order() - 1));
    return t.reshaped(std::move(dims));
}

TensorizePreset parse_preset(const std::string& name) {
    TensorizePreset preset;
    if (name == "einstein") {
        preset.factors = {{6, 10, 10}, {6, 10, 10}};
        return preset;
    }
    if (name == "live4x8") {
        preset.factors = {{4, 4, 4, 4}, {4, 4, 4, 4}};
        // interleave row/column digits pairwise, coarse to fine
        preset.mode_order = {0, 4, 1, 5, 2, 6, 3, 7};
        return preset;
    }
    if (name.rfind("custom:", 0) == 0) {
        const std::string body = name.substr(7);
        const std::size_t split = body.find('x');
        if (split == std::string::npos)
            throw ShapeError("custom preset must look like custom:r1,r2xc1,c2 (rows x cols)");
        preset.factors.row_factors = parse_factor_list(body.substr(0, split));
        preset.factors.col_factors = parse_factor_list(body.substr(split + 1));
        return preset;
    }
    throw ShapeError("unknown tensorize preset '" + name + "'");
}

namespace {

std::vector<std::size_t> preset_perm(const TensorizePreset& preset, bool has_channel,
                                     std::size_t order) {
    std::vector<std::size_t> perm = preset.mode_order;
    const std::size_t axes = preset.factors.row_factors.size() + preset.factors.col_factors.size();
    if (perm.size() != axes) throw ShapeError("preset digit permutation does not cover all axes");
    if (has_channel) perm.push_back(order - 1);
    return perm;
}

}  // namespace

DenseTensor apply_preset(const DenseTensor& pixels, const TensorizePreset& preset) {
    DenseTensor t = tensorize_image(pixels, preset.factors);
    if (!preset.mode_order.empty()) t = t.permuted(preset_perm(preset, pixels.order() == 3, t.order()));
    return t;
}

DenseTensor undo_preset(const DenseTensor& t, const TensorizePreset& preset) {
    const std::size_t axes = preset.factors.row_factors.size() + preset.factors.col_factors.size();
    const bool has_channel = t.order() == axes + 1;
    if (!has_channel && t.order() != axes)
        throw ShapeError("tensor order does not match the preset's factors");
    DenseTensor u = t;
    if (!preset.mode_order.empty()) {
        const std::vector<std::size_t> perm = preset_perm(preset, has_channel, t.order());
        std::vector<std::size_t> inverse(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = i;
        u = u.permuted(inverse);
    }
    return detensorize_image(u, preset.factors, has_channel);
}

ObservationSet sample_mask(std::span<const std::size_t> dims, double fraction,
                           std::uint64_t rng_seed) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ShapeError("mask fraction must lie in (0, 1]");
    const std::size_t total = dims_product(dims);
    const std::size_t count =
        std::min(total, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total))));

    // Partial Fisher-Yates: the first `count` entries become a uniform
    // sample without replacement.
    std::vector<std::size_t> pool(total);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    Rng rng(rng_seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.uniform_index(total - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());

    ObservationSet obs;
    obs.dims.assign(dims.begin(), dims.end());
    obs.values.assign(count, 0.0);
    obs.indices.reserve(count * dims.size());
    for (std::size_t lin : pool) {
        const std::vector<std::size_t> idx = unravel_index(obs.dims, lin);
        obs.indices.insert(obs.indices.end(), idx.begin(), idx.end());
    }
    return obs;
}

ObservationSet observe(const DenseTensor& truth, ObservationSet mask) {
    if (truth.dims() != mask.dims) throw ShapeError("mask dims do not match the truth tensor");
    for (std::size_t o = 0; o < mask.count(); ++o) mask.values[o] = truth.at(mask.index(o));
    return mask;
}

}  // namespace tn
