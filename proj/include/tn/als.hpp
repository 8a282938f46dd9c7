#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tn/network.hpp"

namespace tn {

/// Observed entries for tensor completion: unique in-bounds multi-indices
/// with matching values.
struct ObservationSet {
    std::vector<std::size_t> dims;
    std::vector<std::size_t> indices;  // count() * dims.size(), row-major
    std::vector<double> values;

    std::size_t count() const { return values.size(); }
    std::span<const std::size_t> index(std::size_t o) const {
        return {indices.data() + o * dims.size(), dims.size()};
    }
    void validate() const;
};

/// The objective: either the full squared Frobenius distance to a target
/// tensor, or the mean squared error over an observed index set.
struct LossSpec {
    enum class Kind { full_frobenius, masked_mse };

    Kind kind = Kind::full_frobenius;
    DenseTensor target;           // full_frobenius
    ObservationSet observations;  // masked_mse

    static LossSpec frobenius(DenseTensor target);
    static LossSpec masked(ObservationSet observations);

    const std::vector<std::size_t>& output_dims() const {
        return kind == Kind::full_frobenius ? target.dims() : observations.dims;
    }
};

struct AlsConfig {
    std::size_t max_sweeps = 200;
    double rel_improvement_tol = 1e-8;
    double ridge = 1e-10;  // added to the normal equations; 0 selects
                           // a minimum-norm direct solve
};

/// full_frobenius: ||target - evaluate(state)||_F^2.
/// masked_mse: mean squared error over the observation set.
double loss(const TnState& state, const LossSpec& spec);

struct SweepResult {
    TnState state;
    bool min_norm_fallback = false;  // a rank-deficient system was met at ridge 0
};

/// One pass k = 0..p-1 replacing each core in turn by the exact
/// least-squares minimizer with the others fixed. When per_core_loss is
/// given, the loss after every core update is appended to it.
SweepResult als_sweep(const TnState& state, const LossSpec& spec, const AlsConfig& config,
                      std::vector<double>* per_core_loss = nullptr);

struct OptimizeResult {
    TnState state;
    std::vector<double> loss_history;  // initial loss, then one entry per sweep
    bool min_norm_fallback = false;
};

/// Repeats sweeps until the relative loss improvement drops below
/// config.rel_improvement_tol or max_sweeps is reached.
OptimizeResult optimize(const TnState& state, const LossSpec& spec, const AlsConfig& config);

struct NewSliceResult {
    TnState state;
    double loss_after = 0.0;
};

/// Exploratory optimizer behind best-edge search: `iters` rounds, each
/// re-solving only the newly added slice of core edge.i and then of core
/// edge.j, with every other entry frozen. The state must have been
/// produced by increment_edge on the same edge.
NewSliceResult optimize_new_slices(const TnState& state, Edge edge, const LossSpec& spec,
                                   std::size_t iters, const AlsConfig& config);

}  // namespace tn
