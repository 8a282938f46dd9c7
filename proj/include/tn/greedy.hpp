#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tn/als.hpp"
#include "tn/network.hpp"
#include "tn/rank_increment.hpp"

namespace tn {

struct GreedyConfig {
    std::uint64_t max_params = 0;               // parameter budget
    std::optional<double> loss_threshold;       // stop once the relative error
                                                // of the fitted objective drops below this
    std::size_t max_iterations = 1000;
    std::size_t edge_search_iters = 2;
    double split_threshold = 1e-5;              // singular values below this are dropped
    SliceInitPolicy slice_policy = SliceInitPolicy::noise(1e-3);
    std::optional<std::vector<Edge>> edge_whitelist;
    bool enable_split = true;
    bool transfer_weights = true;               // false: fresh random init per iteration
    bool random_walk = false;                   // pick edges uniformly instead of searching
    std::uint64_t rng_seed = 0;
    AlsConfig als;
};

/// A core replaced by two cores joined on a fresh edge.
struct SplitEvent {
    std::size_t node = 0;
    std::size_t new_node = 0;
    std::size_t rank = 0;
    std::uint64_t params_before = 0;
    std::uint64_t params_after = 0;
    double discarded = 0.0;  // Frobenius mass of the dropped singular values
};

struct TraceRow {
    std::size_t iteration = 0;
    std::optional<Edge> edge;  // chosen increment; empty on the init row
    std::vector<std::pair<Edge, double>> candidate_scores;
    double pre_optimize_loss = 0.0;  // loss right after the weight transfer
    double loss = 0.0;               // loss after the full optimization pass
    double metric = 0.0;             // relative error of the fitted objective
    std::optional<double> test_rse;  // held-out error when ground truth is known
    std::uint64_t params = 0;        // at the end of the iteration (after splits)
    std::vector<SplitEvent> splits;
    double wall_ms = 0.0;
    std::string structure;  // super-unit edges, e.g. "0-1:2;1-2:3"
};

enum class Termination { threshold_reached, budget_exhausted, max_iterations_reached };

struct SearchTrace {
    std::vector<TraceRow> rows;
    Termination status = Termination::max_iterations_reached;
};

struct GreedyResult {
    TnState state;
    SearchTrace trace;
};

/// Candidate edges for a rank increment: pairs i < j (restricted to the
/// whitelist when given) whose increment keeps param_count within budget.
std::vector<Edge> candidate_edges(const TnState& state, const GreedyConfig& config);

struct BestEdge {
    Edge edge;
    std::vector<std::pair<Edge, double>> scores;
};

/// Scores every candidate edge by transferring weights and briefly
/// optimizing only the new slices; returns the edge with the lowest
/// resulting loss (ties go to the lexicographically smallest pair).
/// Empty when no increment fits the budget. Candidates are evaluated in
/// parallel with seeds derived from (rng_seed, iteration, i, j), so the
/// scores do not depend on scheduling.
std::optional<BestEdge> find_best_edge(const TnState& state, const LossSpec& spec,
                                       const GreedyConfig& config, std::size_t iteration = 0);

/// Uniform draw over the candidate edges; the random-walk baseline.
std::optional<Edge> random_edge(const TnState& state, const GreedyConfig& config,
                                std::uint64_t rng_seed);

/// Tries to split each core into two cores joined by a new edge via a
/// truncated SVD of one of its matricizations, keeping singular values
/// >= epsilon. A split is accepted only when it strictly reduces the
/// total parameter count; at most one split per core per call, applied
/// greedily by largest saving.
std::pair<TnState, std::vector<SplitEvent>> split_nodes(const TnState& state, double epsilon);

/// The full greedy driver: rank-one init, optimize, then repeat
/// best-edge increment / weight transfer / optimize / node splitting
/// until the loss threshold, the parameter budget or the iteration cap
/// is hit. `eval_target` optionally provides ground truth for held-out
/// error tracking during completion runs.
GreedyResult greedy_search(std::span<const std::size_t> dims, const LossSpec& spec,
                           const GreedyConfig& config, const DenseTensor* eval_target = nullptr);

/// ||evaluate(state) - target||_F / ||target||_F.
double relative_error(const TnState& state, const DenseTensor& target);

/// Relative error over the entries NOT in the observation set.
double held_out_rse(const TnState& state, const DenseTensor& truth, const ObservationSet& observed);

/// Relative error of the fitted objective: full targets compare against
/// the whole tensor, masked ones against the observed entries.
double fit_metric(const TnState& state, const LossSpec& spec);

}  // namespace tn
