#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tn/als.hpp"
#include "tn/dense_tensor.hpp"

namespace tn {

/// Mixed-radix factorizations of an image's two pixel axes; each axis
/// index is decomposed most-significant digit first over its factors.
struct AxisFactorization {
    std::vector<std::size_t> row_factors;
    std::vector<std::size_t> col_factors;
};

/// Reshapes an H x W or H x W x C image into a higher-order tensor whose
/// modes are the row factors, then the column factors, then the channel.
/// The mapping is a bijection on indices; detensorize_image inverts it
/// bit-exactly.
DenseTensor tensorize_image(const DenseTensor& pixels, const AxisFactorization& factors);

DenseTensor detensorize_image(const DenseTensor& t, const AxisFactorization& factors,
                              bool has_channel);

/// Named reshapings used by the bundled experiments. "einstein" expects
/// 600 x 600 (x3) and yields (6,10,10,6,10,10,3); "live4x8" expects
/// 256 x 256 grayscale and yields 4^8 with row/column digits interleaved
/// coarse to fine; "custom:r1,r2,..xc1,c2,.." gives explicit factors.
struct TensorizePreset {
    AxisFactorization factors;
    std::vector<std::size_t> mode_order;  // axis-digit permutation applied after reshaping
};

TensorizePreset parse_preset(const std::string& name);

/// Tensorizes and applies the preset's digit permutation; a trailing
/// channel mode, when present, stays last.
DenseTensor apply_preset(const DenseTensor& pixels, const TensorizePreset& preset);

/// Exact inverse of apply_preset.
DenseTensor undo_preset(const DenseTensor& t, const TensorizePreset& preset);

/// Uniform sample without replacement of ceil(fraction * total) indices;
/// values are left at zero (fill them with `observe`).
ObservationSet sample_mask(std::span<const std::size_t> dims, double fraction,
                           std::uint64_t rng_seed);

/// Copies the ground-truth values at the mask's indices.
ObservationSet observe(const DenseTensor& truth, ObservationSet mask);

}  // namespace tn
