#pragma once

#include <cstdint>

#include "tn/network.hpp"

namespace tn {

/// How freshly added slices are filled. Zeros reproduce the represented
/// tensor exactly; small uniform noise breaks the symmetry that would
/// otherwise stall the first alternating update.
struct SliceInitPolicy {
    enum class Mode { zeros, uniform_noise };

    Mode mode = Mode::zeros;
    double sigma = 0.0;  // noise half-width; 0 iff mode == zeros

    static SliceInitPolicy zeros() { return {}; }
    static SliceInitPolicy noise(double sigma);
};

/// Grows the given mode of a core by one, keeping every existing entry
/// at its original multi-index and filling the new hyper-slice (appended
/// as the last index) per the policy. `dangling_mode` is the core's own
/// output mode, which cannot be grown.
DenseTensor add_slice(const DenseTensor& core, std::size_t mode, std::size_t dangling_mode,
                      const SliceInitPolicy& policy, std::uint64_t rng_seed);

/// Raises rank(i, j) by one and pads cores i and j on each other's mode.
/// With the zeros policy the returned network represents exactly the
/// same tensor as the input.
TnState increment_edge(const TnState& state, std::size_t i, std::size_t j,
                       const SliceInitPolicy& policy, std::uint64_t rng_seed);

}  // namespace tn
