#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "tn/dense_tensor.hpp"

namespace tn {

/// Undirected edge between two nodes, stored with i < j.
struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    auto operator<=>(const Edge&) const = default;
};

/// Symmetric matrix of edge dimensions. An entry of 1 means the two
/// nodes are not connected; diagonal entries are fixed to 1 and unused.
class RankMatrix {
public:
    explicit RankMatrix(std::size_t node_count)
        : p_(node_count), r_(node_count * node_count, 1) {}

    std::size_t node_count() const { return p_; }

    std::size_t rank(std::size_t i, std::size_t j) const { return r_[i * p_ + j]; }

    void set_rank(std::size_t i, std::size_t j, std::size_t rank);

    /// Same ranks on node_count()+1 nodes; the new node starts disconnected.
    RankMatrix grown() const;

    bool operator==(const RankMatrix&) const = default;

private:
    std::size_t p_;
    std::vector<std::size_t> r_;
};

/// A tensor network with one core per node. Core k has node_count()
/// modes: mode j (j != k) has size rank(k, j) and mode k has the node's
/// dangling size dims[k]. Internal nodes carry a dangling size of 1.
///
/// States are value types; every operation returns a new state.
struct TnState {
    RankMatrix ranks;
    std::vector<std::size_t> dims;   // dangling mode sizes, one per node
    std::vector<DenseTensor> cores;  // order-p each, singleton modes explicit

    /// Set by increment_edge, cleared by any full optimization pass;
    /// guards the restricted new-slice optimizer against stale input.
    std::optional<Edge> last_increment;

    std::size_t node_count() const { return dims.size(); }

    /// Mode sizes core k must have under the current structure.
    std::vector<std::size_t> core_dims(std::size_t k) const;

    /// Throws ShapeError if any core disagrees with ranks/dims.
    void validate() const;
};

/// All ranks 1; core i is a dims[i]-vector (all other modes size 1) with
/// i.i.d. entries uniform in [-scale, scale].
TnState init_rank_one(std::span<const std::size_t> dims, std::uint64_t rng_seed, double scale);

/// Random cores for an arbitrary structure, entries uniform in [-scale, scale].
TnState random_state(const RankMatrix& ranks, std::span<const std::size_t> dims,
                     std::uint64_t rng_seed, double scale);

/// Full tensor represented by the network, modes ordered by node index
/// (singleton dangling modes retained). Contracts pairwise, at each step
/// picking the pair minimizing the intermediate tensor's size, ties
/// broken by smallest node-index pair.
DenseTensor evaluate(const TnState& state);

/// Right-to-left sequential contraction; used to cross-check that the
/// result does not depend on contraction order.
DenseTensor evaluate_sequential(const TnState& state);

/// Reference evaluation by explicit nested summation over every bond
/// index. Test oracle only, never used in the optimization path. Throws
/// OracleCapError when prod(dims) * prod(ranks) exceeds work_cap.
DenseTensor brute_force_tn_eval(const TnState& state, std::uint64_t work_cap = 100'000'000);

/// Total stored entries: sum over nodes of dims[k] * prod_j rank(k, j).
std::uint64_t param_count(const TnState& state);

/// param_count after a hypothetical rank increment on (i, j), without
/// building the state.
std::uint64_t param_count_after_increment(const TnState& state, Edge edge);

/// Edges (i, j, rank) for i < j in lexicographic order; rank-1 entries
/// included only when include_unit is set.
std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> edge_list(const TnState& state,
                                                                         bool include_unit = false);

/// Contraction of every core except node k. Result modes: the dangling
/// modes m != k in ascending node order, then the bond modes (k, j) in
/// ascending j. This is the coefficient tensor of the network as a
/// linear map of core k.
DenseTensor environment(const TnState& state, std::size_t k);

/// Environment of node k with every other node's dangling mode fixed at
/// the given output index; result modes are the bonds (k, j), ascending
/// in j. Used to assemble per-observation least-squares rows.
DenseTensor sliced_environment(const TnState& state, std::size_t k,
                               std::span<const std::size_t> out_index);

}  // namespace tn
