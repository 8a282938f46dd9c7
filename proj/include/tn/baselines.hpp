#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tn/als.hpp"
#include "tn/network.hpp"

namespace tn {

enum class BaselineModel { tt, tr, tucker };

struct RankSweepSpec {
    BaselineModel model = BaselineModel::tt;
    std::size_t rank_start = 1;
    std::size_t rank_end = 1;
    std::uint64_t param_cap = 0;
};

/// Fixed uniform-rank reference structures with random cores in
/// [-0.5, 0.5]. TT is the open chain, TR closes the cycle, Tucker
/// appends one internal node wired to every leaf.
TnState make_structure(BaselineModel model, std::span<const std::size_t> dims, std::size_t rank,
                       std::uint64_t rng_seed);

struct SweepPoint {
    std::size_t rank = 0;
    std::uint64_t params = 0;
    double final_loss = 0.0;
    double rel_error = 0.0;          // fit metric at convergence
    std::optional<double> test_rse;  // held-out error when truth given
};

/// Optimizes the model at every rank in [rank_start, rank_end] whose
/// parameter count fits the cap, recording one point per rank. With
/// `truth` provided (completion experiments) each point also carries the
/// held-out error over the unobserved entries.
std::vector<SweepPoint> rank_sweep(const RankSweepSpec& sweep, const LossSpec& spec,
                                   const AlsConfig& als, std::uint64_t rng_seed,
                                   const DenseTensor* truth = nullptr);

}  // namespace tn
