#include "tn/baselines.hpp"

#include "tn/greedy.hpp"
#include "tn/rng.hpp"

namespace tn {

TnState make_structure(BaselineModel model, std::span<const std::size_t> dims, std::size_t rank,
                       std::uint64_t rng_seed) {
    if (rank == 0) throw ShapeError("baseline rank must be positive");
    if (dims.empty()) throw ShapeError("baseline needs at least one dimension");
    const std::size_t p = dims.size();

    if (model == BaselineModel::tucker) {
        RankMatrix ranks(p + 1);
        for (std::size_t i = 0; i < p; ++i) ranks.set_rank(i, p, rank);
        std::vector<std::size_t> full_dims(dims.begin(), dims.end());
        full_dims.push_back(1);  // the core is internal
        return random_state(ranks, full_dims, rng_seed, 0.5);
    }

    RankMatrix ranks(p);
    for (std::size_t i = 0; i + 1 < p; ++i) ranks.set_rank(i, i + 1, rank);
    if (model == BaselineModel::tr && p > 1) ranks.set_rank(0, p - 1, rank);
    return random_state(ranks, dims, rng_seed, 0.5);
}

std::vector<SweepPoint> rank_sweep(const RankSweepSpec& sweep, const LossSpec& spec,
                                   const AlsConfig& als, std::uint64_t rng_seed,
                                   const DenseTensor* truth) {
    if (sweep.rank_start == 0 || sweep.rank_start > sweep.rank_end)
        throw ShapeError("rank sweep needs 1 <= rank_start <= rank_end");

    std::vector<SweepPoint> curve;
    for (std::size_t rank = sweep.rank_start; rank <= sweep.rank_end; ++rank) {
        TnState state = make_structure(sweep.model, spec.output_dims(), rank,
                                       derive_seed(rng_seed, rank));
        const std::uint64_t params = param_count(state);
        if (params > sweep.param_cap) break;  // params grow with rank

        const OptimizeResult opt = optimize(state, spec, als);
        SweepPoint point{rank, params, opt.loss_history.back(), fit_metric(opt.state, spec),
                         std::nullopt};
        if (truth && spec.kind == LossSpec::Kind::masked_mse)
            point.test_rse = held_out_rse(opt.state, *truth, spec.observations);
        curve.push_back(point);
    }
    return curve;
}

}  // namespace tn
