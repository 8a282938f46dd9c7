#include "tn/greedy.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tn/parallel.hpp"
#include "tn/rng.hpp"
#include "tn/tensor_ops.hpp"

namespace tn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_config(const GreedyConfig& config, std::span<const std::size_t> dims) {
    std::uint64_t base = 0;
    for (std::size_t d : dims) base += d;
    if (config.max_params < base)
        throw ShapeError("parameter budget is below the rank-one size " + std::to_string(base));
    if (config.edge_search_iters == 0)
        throw ShapeError("edge search needs at least one exploratory iteration");
    if (config.split_threshold < 0) throw ShapeError("split threshold must be nonnegative");
}

std::string structure_string(const TnState& state) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [i, j, r] : edge_list(state)) {
        if (!first) out << ';';
        out << i << '-' << j << ':' << r;
        first = false;
    }
    return first ? "-" : out.str();
}

double wall_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// ---- node splitting ------------------------------------------------------

struct SplitCandidate {
    std::size_t node = 0;
    std::vector<std::size_t> moved;  // bond modes handed to the new node
    std::size_t rank = 0;
    std::uint64_t saving = 0;
    double discarded = 0.0;
    Eigen::MatrixXd left;   // rows x rank, fills the surviving core
    Eigen::MatrixXd right;  // rank x cols, fills the new core (D V^T)
};

// Evaluates one bipartition of core k's modes: everything outside
// `moved` (including the dangling mode and all rank-1 bonds) stays with
// node k, the bonds in `moved` go to the new node.
std::optional<SplitCandidate> try_bipartition(const TnState& state, std::size_t k,
                                              const std::vector<std::size_t>& moved, double eps) {
    const DenseTensor& core = state.cores[k];
    const std::size_t p = state.node_count();

    std::vector<std::size_t> rows;
    for (std::size_t m = 0; m < p; ++m)
        if (std::find(moved.begin(), moved.end(), m) == moved.end()) rows.push_back(m);

    const DenseTensor mat = matricize(core, rows);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(mat.dim(0)), static_cast<Eigen::Index>(mat.dim(1)));
    for (std::size_t r = 0; r < mat.dim(0); ++r)
        for (std::size_t c = 0; c < mat.dim(1); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = mat[r * mat.dim(1) + c];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sigma.size() && sigma[rank] >= eps) ++rank;
    if (rank == 0) rank = 1;

    const std::uint64_t before = core.size();
    const std::uint64_t cols = mat.dim(1);
    const std::uint64_t after =
        (before / cols) * static_cast<std::uint64_t>(rank) + cols * static_cast<std::uint64_t>(rank);
    if (after >= before) return std::nullopt;

    SplitCandidate cand;
    cand.node = k;
    cand.moved = moved;
    cand.rank = static_cast<std::size_t>(rank);
    cand.saving = before - after;
    double mass = 0.0;
    for (Eigen::Index s = rank; s < sigma.size(); ++s) mass += sigma[s] * sigma[s];
    cand.discarded = std::sqrt(mass);
    cand.left = svd.matrixU().leftCols(rank);
    cand.right = sigma.head(rank).asDiagonal() * svd.matrixV().leftCols(rank).transpose();
    return cand;
}

// Best admissible bipartition of core k. All bipartitions are tried
// while the core has at most 6 super-unit modes; beyond that only
// single-mode-versus-rest splits are considered.
std::optional<SplitCandidate> best_split_for_core(const TnState& state, std::size_t k, double eps) {
    const std::size_t p = state.node_count();
    std::vector<std::size_t> super;
    for (std::size_t j = 0; j < p; ++j)
        if (j != k && state.ranks.rank(k, j) > 1) super.push_back(j);
    if (super.empty()) return std::nullopt;

    const bool dangling_super = state.dims[k] > 1;
    const std::size_t super_modes = super.size() + (dangling_super ? 1 : 0);

    std::vector<std::vector<std::size_t>> choices;
    if (super_modes <= 6) {
        for (std::size_t bits = 1; bits < (std::size_t{1} << super.size()); ++bits) {
            std::vector<std::size_t> moved;
            for (std::size_t s = 0; s < super.size(); ++s)
                if (bits & (std::size_t{1} << s)) moved.push_back(super[s]);
            if (!dangling_super) {
                // keep at least one super bond with node k, and fix the
                // smallest one there so mirrored bipartitions are not
                // scored twice
                if (moved.size() == super.size()) continue;
                if (std::find(moved.begin(), moved.end(), super.front()) != moved.end()) continue;
            }
            choices.push_back(std::move(moved));
        }
    } else {
        for (std::size_t j : super) {
            if (!dangling_super && super.size() == 1) break;
            choices.push_back({j});
        }
        if (dangling_super) choices.push_back(super);  // dangling mode alone vs the rest
    }

    std::optional<SplitCandidate> best;
    for (const auto& moved : choices) {
        auto cand = try_bipartition(state, k, moved, eps);
        if (cand && (!best || cand->saving > best->saving)) best = std::move(cand);
    }
    return best;
}

TnState apply_split(const TnState& state, const SplitCandidate& cand) {
    const std::size_t p = state.node_count();
    const std::size_t k = cand.node;
    const std::size_t q = p;  // the new node goes last

    TnState out{state.ranks.grown(), state.dims, {}, std::nullopt};
    out.dims.push_back(1);
    for (std::size_t j : cand.moved) {
        out.ranks.set_rank(q, j, state.ranks.rank(k, j));
        out.ranks.set_rank(k, j, 1);
    }
    out.ranks.set_rank(k, q, cand.rank);

    out.cores.resize(p + 1);
    for (std::size_t m = 0; m < p; ++m) {
        if (m == k) continue;
        std::vector<std::size_t> dims_m = state.cores[m].dims();
        dims_m.push_back(1);
        DenseTensor grown = state.cores[m].reshaped(std::move(dims_m));
        if (std::find(cand.moved.begin(), cand.moved.end(), m) != cand.moved.end()) {
            // this core's edge now points at the new node: swap modes k and q
            std::vector<std::size_t> perm(p + 1);
            std::iota(perm.begin(), perm.end(), 0);
            std::swap(perm[k], perm[q]);
            grown = grown.permuted(perm);
        }
        out.cores[m] = std::move(grown);
    }

    // Surviving core: the left factor. Its row-major layout over
    // (retained modes ascending, new bond last) is exactly the new core's
    // layout, since the moved modes collapse to size 1.
    {
        std::vector<std::size_t> dims_k = out.core_dims(k);
        std::vector<double> data(dims_product(dims_k));
        const Eigen::Index rank = static_cast<Eigen::Index>(cand.rank);
        for (Eigen::Index r = 0; r < cand.left.rows(); ++r)
            for (Eigen::Index c = 0; c < rank; ++c)
                data[static_cast<std::size_t>(r * rank + c)] = cand.left(r, c);
        out.cores[k] = DenseTensor(std::move(dims_k), std::move(data));
    }

    // New core: right factor with legs (new bond, moved modes ascending);
    // the new bond must be interleaved at position k among the moved modes.
    {
        std::vector<std::size_t> inter_dims{cand.rank};
        std::vector<std::size_t> labels{k};
        for (std::size_t j : cand.moved) {
            inter_dims.push_back(state.ranks.rank(k, j));
            labels.push_back(j);
        }
        std::vector<double> data(static_cast<std::size_t>(cand.right.size()));
        // Eigen is column-major; re-lay the right factor row-major.
        for (Eigen::Index r = 0; r < cand.right.rows(); ++r)
            for (Eigen::Index c = 0; c < cand.right.cols(); ++c)
                data[static_cast<std::size_t>(r) * cand.right.cols() + static_cast<std::size_t>(c)] =
                    cand.right(r, c);
        DenseTensor inter(inter_dims, std::move(data));

        std::vector<std::size_t> order(labels.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
        inter = inter.permuted(order);
        out.cores[q] = std::move(inter).reshaped(out.core_dims(q));
    }

    out.validate();
    return out;
}

}  // namespace

std::pair<TnState, std::vector<SplitEvent>> split_nodes(const TnState& state, double epsilon) {
    if (epsilon < 0) throw ShapeError("split threshold must be nonnegative");
    TnState cur = state;
    std::vector<SplitEvent> events;
    const std::size_t original_p = state.node_count();
    std::vector<bool> done(original_p, false);

    for (;;) {
        std::optional<SplitCandidate> best;
        for (std::size_t k = 0; k < original_p; ++k) {
            if (done[k]) continue;
            auto cand = best_split_for_core(cur, k, epsilon);
            if (cand && (!best || cand->saving > best->saving ||
                         (cand->saving == best->saving && cand->node < best->node)))
                best = std::move(cand);
        }
        if (!best) break;

        const std::uint64_t before = param_count(cur);
        cur = apply_split(cur, *best);
        done[best->node] = true;
        events.push_back({best->node, cur.node_count() - 1, best->rank, before, param_count(cur),
                          best->discarded});
    }
    if (!events.empty()) cur.last_increment.reset();
    return {cur, events};
}

std::vector<Edge> candidate_edges(const TnState& state, const GreedyConfig& config) {
    const std::size_t p = state.node_count();
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const Edge e{i, j};
            if (config.edge_whitelist) {
                const auto& wl = *config.edge_whitelist;
                if (std::find(wl.begin(), wl.end(), e) == wl.end()) continue;
            }
            if (param_count_after_increment(state, e) > config.max_params) continue;
            edges.push_back(e);
        }
    }
    return edges;
}

std::optional<BestEdge> find_best_edge(const TnState& state, const LossSpec& spec,
                                       const GreedyConfig& config, std::size_t iteration) {
    const std::vector<Edge> cands = candidate_edges(state, config);
    if (cands.empty()) return std::nullopt;

    std::vector<double> scores(cands.size());
    parallel_for(cands.size(), [&](std::size_t c) {
        const Edge e = cands[c];
        const std::uint64_t seed = derive_seed(config.rng_seed, 1, iteration, e.i, e.j);
        const TnState incremented = increment_edge(state, e.i, e.j, config.slice_policy, seed);
        scores[c] =
            optimize_new_slices(incremented, e, spec, config.edge_search_iters, config.als).loss_after;
    });

    std::size_t best = 0;
    for (std::size_t c = 1; c < cands.size(); ++c)
        if (scores[c] < scores[best]) best = c;  // candidates are in lex order already

    BestEdge result{cands[best], {}};
    result.scores.reserve(cands.size());
    for (std::size_t c = 0; c < cands.size(); ++c) result.scores.emplace_back(cands[c], scores[c]);
    return result;
}

std::optional<Edge> random_edge(const TnState& state, const GreedyConfig& config,
                                std::uint64_t rng_seed) {
    const std::vector<Edge> cands = candidate_edges(state, config);
    if (cands.empty()) return std::nullopt;
    Rng rng(rng_seed);
    return cands[rng.uniform_index(cands.size())];
}

double relative_error(const TnState& state, const DenseTensor& target) {
    const double norm = frobenius(target);
    if (norm == 0.0) throw ShapeError("relative error is undefined for a zero target");
    const DenseTensor w = evaluate(state);
    if (w.size() != target.size()) throw ShapeError("relative error target size mismatch");
    double num = 0.0;
    for (std::size_t lin = 0; lin < w.size(); ++lin) {
        const double diff = w[lin] - target[lin];
        num += diff * diff;
    }
    return std::sqrt(num) / norm;
}

double held_out_rse(const TnState& state, const DenseTensor& truth, const ObservationSet& observed) {
    const DenseTensor w = evaluate(state);
    if (w.size() != truth.size()) throw ShapeError("held-out truth size mismatch");
    std::vector<bool> seen(truth.size(), false);
    for (std::size_t o = 0; o < observed.count(); ++o)
        seen[ravel_index(observed.dims, observed.index(o))] = true;
    double num = 0.0, den = 0.0;
    for (std::size_t lin = 0; lin < truth.size(); ++lin) {
        if (seen[lin]) continue;
        const double diff = w[lin] - truth[lin];
        num += diff * diff;
        den += truth[lin] * truth[lin];
    }
    if (den == 0.0) throw ShapeError("held-out truth has zero norm");
    return std::sqrt(num / den);
}

double fit_metric(const TnState& state, const LossSpec& spec) {
    if (spec.kind == LossSpec::Kind::full_frobenius) return relative_error(state, spec.target);
    const double l = loss(state, spec);
    double sq = 0.0;
    for (double v : spec.observations.values) sq += v * v;
    if (sq == 0.0) throw ShapeError("relative error is undefined for all-zero observations");
    return std::sqrt(l * static_cast<double>(spec.observations.count()) / sq);
}

GreedyResult greedy_search(std::span<const std::size_t> dims, const LossSpec& spec,
                           const GreedyConfig& config, const DenseTensor* eval_target) {
    check_config(config, dims);
    const auto t0 = std::chrono::steady_clock::now();

    TnState state = init_rank_one(dims, derive_seed(config.rng_seed, 0), 0.5);
    OptimizeResult opt = optimize(state, spec, config.als);
    state = std::move(opt.state);

    SearchTrace trace;
    auto record = [&](std::size_t iteration, std::optional<Edge> edge,
                      std::vector<std::pair<Edge, double>> scores, double pre_loss,
                      std::vector<SplitEvent> splits) {
        TraceRow row;
        row.iteration = iteration;
        row.edge = edge;
        row.candidate_scores = std::move(scores);
        row.pre_optimize_loss = pre_loss;
        row.loss = opt.loss_history.back();
        row.metric = fit_metric(state, spec);
        if (eval_target && spec.kind == LossSpec::Kind::masked_mse)
            row.test_rse = held_out_rse(state, *eval_target, spec.observations);
        row.params = param_count(state);
        row.splits = std::move(splits);
        row.wall_ms = wall_since(t0);
        row.structure = structure_string(state);
        trace.rows.push_back(std::move(row));
    };

    record(0, std::nullopt, {}, opt.loss_history.front(), {});

    trace.status = Termination::max_iterations_reached;
    for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
        if (config.loss_threshold && trace.rows.back().metric <= *config.loss_threshold) {
            trace.status = Termination::threshold_reached;
            break;
        }

        std::optional<Edge> edge;
        std::vector<std::pair<Edge, double>> scores;
        if (config.random_walk) {
            edge = random_edge(state, config, derive_seed(config.rng_seed, 2, iter));
        } else {
            auto best = find_best_edge(state, spec, config, iter);
            if (best) {
                edge = best->edge;
                scores = std::move(best->scores);
            }
        }
        if (!edge) {
            trace.status = Termination::budget_exhausted;
            break;
        }

        TnState next = config.transfer_weights
                           ? increment_edge(state, edge->i, edge->j, config.slice_policy,
                                            derive_seed(config.rng_seed, 1, iter, edge->i, edge->j))
                           : [&] {
                                 RankMatrix grown_ranks = state.ranks;
                                 grown_ranks.set_rank(edge->i, edge->j,
                                                      state.ranks.rank(edge->i, edge->j) + 1);
                                 return random_state(grown_ranks, state.dims,
                                                     derive_seed(config.rng_seed, 3, iter), 0.5);
                             }();
        const double pre_loss = loss(next, spec);

        opt = optimize(next, spec, config.als);
        state = std::move(opt.state);

        std::vector<SplitEvent> splits;
        if (config.enable_split) {
            auto [split_state, events] = split_nodes(state, config.split_threshold);
            state = std::move(split_state);
            splits = std::move(events);
        }

        record(iter, edge, std::move(scores), pre_loss, std::move(splits));
    }

    if (trace.status == Termination::max_iterations_reached && config.loss_threshold &&
        trace.rows.back().metric <= *config.loss_threshold)
        trace.status = Termination::threshold_reached;

    return {std::move(state), std::move(trace)};
}

}  // namespace tn
