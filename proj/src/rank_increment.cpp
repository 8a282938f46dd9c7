#include "tn/rank_increment.hpp"

#include <string>

#include "tn/rng.hpp"

namespace tn {

SliceInitPolicy SliceInitPolicy::noise(double sigma) {
    if (sigma <= 0.0) throw ShapeError("noise policy needs a positive half-width");
    return {Mode::uniform_noise, sigma};
}

DenseTensor add_slice(const DenseTensor& core, std::size_t mode, std::size_t dangling_mode,
                      const SliceInitPolicy& policy, std::uint64_t rng_seed) {
    if (mode >= core.order()) throw ShapeError("add_slice mode out of range");
    if (mode == dangling_mode)
        throw ShapeError("cannot grow mode " + std::to_string(mode) +
                         ": it is the core's dangling mode");

    std::vector<std::size_t> new_dims = core.dims();
    const std::size_t n = new_dims[mode]++;
    std::size_t inner = 1;
    for (std::size_t m = mode + 1; m < core.order(); ++m) inner *= core.dim(m);
    const std::size_t outer = core.size() / (inner * n);

    Rng rng(rng_seed);
    auto fill = [&]() {
        return policy.mode == SliceInitPolicy::Mode::zeros ? 0.0
                                                           : rng.uniform(-policy.sigma, policy.sigma);
    };

    std::vector<double> data;
    data.reserve(outer * (n + 1) * inner);
    const auto src = core.data();
    for (std::size_t o = 0; o < outer; ++o) {
        const double* block = src.data() + o * n * inner;
        data.insert(data.end(), block, block + n * inner);
        for (std::size_t t = 0; t < inner; ++t) data.push_back(fill());
    }
    return DenseTensor(std::move(new_dims), std::move(data));
}

TnState increment_edge(const TnState& state, std::size_t i, std::size_t j,
                       const SliceInitPolicy& policy, std::uint64_t rng_seed) {
    if (i == j) throw ShapeError("cannot increment an edge from a node to itself");
    if (i > j) std::swap(i, j);
    if (j >= state.node_count()) throw ShapeError("edge node out of range");

    TnState out = state;
    out.ranks.set_rank(i, j, state.ranks.rank(i, j) + 1);
    out.cores[i] = add_slice(state.cores[i], j, i, policy, derive_seed(rng_seed, i));
    out.cores[j] = add_slice(state.cores[j], i, j, policy, derive_seed(rng_seed, j));
    out.last_increment = Edge{i, j};
    out.validate();
    return out;
}

}  // namespace tn
