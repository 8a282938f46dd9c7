#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "support/helpers.hpp"
#include "tn/als.hpp"
#include "tn/rank_increment.hpp"
#include "tn/tensor_ops.hpp"

using namespace tn;
using test::max_abs_diff;
using test::random_tensor;
using test::random_tn_state;

namespace {

ObservationSet full_grid(const DenseTensor& t) {
    ObservationSet obs;
    obs.dims = t.dims();
    for (std::size_t lin = 0; lin < t.size(); ++lin) {
        const auto idx = t.unravel(lin);
        obs.indices.insert(obs.indices.end(), idx.begin(), idx.end());
        obs.values.push_back(t[lin]);
    }
    return obs;
}

ObservationSet subsample(const DenseTensor& t, std::size_t every) {
    ObservationSet obs;
    obs.dims = t.dims();
    for (std::size_t lin = 0; lin < t.size(); lin += every) {
        const auto idx = t.unravel(lin);
        obs.indices.insert(obs.indices.end(), idx.begin(), idx.end());
        obs.values.push_back(t[lin]);
    }
    return obs;
}

TnState tt_state(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& chain,
                 std::uint64_t seed) {
    RankMatrix ranks(dims.size());
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) ranks.set_rank(i, i + 1, chain[i]);
    return random_state(ranks, dims, seed, 1.0);
}

// Design matrix of the network as a linear map of core k, materialized
// column by column through the brute-force oracle.
Eigen::MatrixXd materialize_design(const TnState& state, std::size_t k) {
    const std::size_t n = state.cores[k].size();
    const std::size_t rows = dims_product(state.dims);
    Eigen::MatrixXd design(rows, n);
    for (std::size_t r = 0; r < n; ++r) {
        TnState unit = state;
        for (double& v : unit.cores[k].mutable_data()) v = 0.0;
        unit.cores[k][r] = 1.0;
        const DenseTensor w = brute_force_tn_eval(unit);
        for (std::size_t row = 0; row < rows; ++row) design(row, r) = w[row];
    }
    return design;
}

}  // namespace

TEST_CASE("loss: exact representation gives zero") {
    const TnState s = random_tn_state(1, 3, 3, 2);
    const LossSpec spec = LossSpec::frobenius(evaluate(s));
    CHECK(loss(s, spec) <= 1e-24);
}

TEST_CASE("loss matches the elementwise computation") {
    const TnState s = random_tn_state(2, 3, 3, 3);
    const DenseTensor target = random_tensor(s.dims, 55);
    const DenseTensor w = evaluate(s);
    double expect = 0.0;
    for (std::size_t lin = 0; lin < w.size(); ++lin) {
        const double d = w[lin] - target[lin];
        expect += d * d;
    }
    const double got = loss(s, LossSpec::frobenius(target));
    CHECK(got == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("masked loss over the full grid is the full loss over N") {
    const TnState s = random_tn_state(3, 3, 3, 2);
    const DenseTensor target = random_tensor(s.dims, 66);
    const double full = loss(s, LossSpec::frobenius(target));
    const double masked = loss(s, LossSpec::masked(full_grid(target)));
    CHECK(masked == doctest::Approx(full / static_cast<double>(target.size())).epsilon(1e-13));
}

TEST_CASE("loss rejects incompatible dims") {
    const TnState s = random_tn_state(4, 3, 3, 2);
    std::vector<std::size_t> wrong = s.dims;
    wrong[0] += 1;
    CHECK_THROWS_AS(loss(s, LossSpec::frobenius(DenseTensor(wrong))), ShapeError);
}

TEST_CASE("observation sets are validated") {
    ObservationSet obs;
    obs.dims = {2, 2};
    CHECK_THROWS_AS(LossSpec::masked(obs), ShapeError);  // empty
    obs.indices = {0, 0, 0, 0};
    obs.values = {1.0, 2.0};
    CHECK_THROWS_AS(LossSpec::masked(obs), ShapeError);  // duplicate
    obs.indices = {0, 0, 5, 0};
    CHECK_THROWS_AS(LossSpec::masked(obs), ShapeError);  // out of bounds
}

TEST_CASE("als_sweep is a fixed point at an exact representation") {
    const TnState s = random_tn_state(5, 3, 3, 2);
    const LossSpec spec = LossSpec::frobenius(evaluate(s));
    AlsConfig config;
    config.ridge = 0.0;
    const SweepResult r = als_sweep(s, spec, config);
    CHECK(loss(r.state, spec) <= 1e-20);
}

TEST_CASE("rank-one targets are recovered quickly") {
    Rng rng(77);
    const std::vector<std::size_t> dims{3, 4, 2};
    DenseTensor target = evaluate(init_rank_one(dims, 123, 1.0));
    TnState s = init_rank_one(dims, 456, 0.5);
    AlsConfig config;
    config.ridge = 0.0;
    config.max_sweeps = 20;
    config.rel_improvement_tol = 0.0;
    const OptimizeResult r = optimize(s, LossSpec::frobenius(target), config);
    CHECK(r.loss_history.back() < 1e-10);
}

TEST_CASE("per-core updates never increase the loss") {
    AlsConfig config;
    config.ridge = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const TnState s = random_tn_state(seed + 900, 2 + seed % 3, 3, 3);
        const DenseTensor target = random_tensor(s.dims, seed);
        for (const bool masked : {false, true}) {
            const LossSpec spec =
                masked ? LossSpec::masked(subsample(target, 2)) : LossSpec::frobenius(target);
            std::vector<double> trail{loss(s, spec)};
            als_sweep(s, spec, config, &trail);
            for (std::size_t t = 1; t < trail.size(); ++t)
                CHECK(trail[t] <= trail[t - 1] * (1 + 1e-10) + 1e-14);
        }
    }
}

TEST_CASE("core updates match an explicitly materialized least-squares solve") {
    AlsConfig config;
    config.ridge = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TnState s = random_tn_state(seed + 40, 3, 2, 2);
        const DenseTensor target = random_tensor(s.dims, seed + 41);
        const LossSpec spec = LossSpec::frobenius(target);

        // the sweep's first update (core 0) sees all other cores at their
        // original values, so it must equal the standalone solve
        const SweepResult r = als_sweep(s, spec, config);

        const Eigen::MatrixXd design = materialize_design(s, 0);
        Eigen::VectorXd rhs(target.size());
        for (std::size_t lin = 0; lin < target.size(); ++lin)
            rhs(static_cast<Eigen::Index>(lin)) = target[lin];
        const Eigen::VectorXd direct = design.completeOrthogonalDecomposition().solve(rhs);

        const auto got = r.state.cores[0].data();
        double worst = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i)
            worst = std::max(worst, std::abs(got[i] - direct(static_cast<Eigen::Index>(i))));
        const double scale = std::max(1.0, direct.norm());
        CHECK(worst / scale <= 1e-10);
    }
}

TEST_CASE("masked core updates match the materialized solve") {
    AlsConfig config;
    config.ridge = 0.0;
    const TnState s = random_tn_state(140, 3, 2, 2);
    const DenseTensor target = random_tensor(s.dims, 141);
    const ObservationSet obs = subsample(target, 2);
    const LossSpec spec = LossSpec::masked(obs);

    const SweepResult r = als_sweep(s, spec, config);

    const Eigen::MatrixXd design = materialize_design(s, 0);
    Eigen::MatrixXd rows(obs.count(), design.cols());
    Eigen::VectorXd rhs(obs.count());
    for (std::size_t o = 0; o < obs.count(); ++o) {
        const std::size_t lin = ravel_index(obs.dims, obs.index(o));
        rows.row(static_cast<Eigen::Index>(o)) = design.row(static_cast<Eigen::Index>(lin));
        rhs(static_cast<Eigen::Index>(o)) = obs.values[o];
    }
    const Eigen::VectorXd direct = rows.completeOrthogonalDecomposition().solve(rhs);
    const auto got = r.state.cores[0].data();
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i)
        worst = std::max(worst, std::abs(got[i] - direct(static_cast<Eigen::Index>(i))));
    CHECK(worst / std::max(1.0, direct.norm()) <= 1e-10);
}

TEST_CASE("optimize: an already-optimal input stays put") {
    const TnState s = random_tn_state(6, 3, 3, 2);
    const LossSpec spec = LossSpec::frobenius(evaluate(s));
    AlsConfig config;
    config.ridge = 0.0;
    const OptimizeResult r = optimize(s, spec, config);
    CHECK(r.loss_history.size() <= 2);
    for (double l : r.loss_history) CHECK(l <= 1e-18);
}

TEST_CASE("optimize recovers a TT target with the right structure") {
    const std::vector<std::size_t> dims{5, 5, 5, 5};
    const std::vector<std::size_t> chain{2, 3, 2};
    const DenseTensor target = evaluate(tt_state(dims, chain, 7001));

    AlsConfig config;
    config.ridge = 0.0;
    config.max_sweeps = 200;
    config.rel_improvement_tol = 1e-12;
    const TnState init = tt_state(dims, chain, 312);
    const OptimizeResult r = optimize(init, LossSpec::frobenius(target), config);
    const double rel = std::sqrt(r.loss_history.back()) / frobenius(target);
    CHECK(rel < 1e-6);
}

TEST_CASE("optimize histories never increase") {
    AlsConfig config;
    config.ridge = 0.0;
    config.max_sweeps = 15;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TnState s = random_tn_state(seed + 6000, 2 + seed % 3, 3, 2);
        const DenseTensor target = random_tensor(s.dims, seed);
        const OptimizeResult r = optimize(s, LossSpec::frobenius(target), config);
        for (std::size_t t = 1; t < r.loss_history.size(); ++t)
            CHECK(r.loss_history[t] <= r.loss_history[t - 1] * (1 + 1e-10) + 1e-14);
    }
}

TEST_CASE("optimize_new_slices drops the loss when the increment matters") {
    // target needs rank 2 on edge (0, 1); the rank-one fit cannot be exact
    const std::vector<std::size_t> dims{4, 4, 3};
    const DenseTensor target = evaluate(tt_state(dims, {2, 1}, 99));
    const LossSpec spec = LossSpec::frobenius(target);

    AlsConfig config;
    config.ridge = 0.0;
    const OptimizeResult base = optimize(init_rank_one(dims, 5, 0.5), spec, config);
    const double before = base.loss_history.back();
    REQUIRE(before > 1e-8);  // rank one is not enough

    const TnState grown = increment_edge(base.state, 0, 1, SliceInitPolicy::noise(1e-3), 17);
    const NewSliceResult r = optimize_new_slices(grown, {0, 1}, spec, 2, config);
    CHECK(r.loss_after < before * (1 - 1e-6));
}

TEST_CASE("optimize_new_slices drops the masked loss too") {
    const std::vector<std::size_t> dims{4, 4, 3};
    const DenseTensor truth = evaluate(tt_state(dims, {2, 1}, 99));
    const LossSpec spec = LossSpec::masked(subsample(truth, 2));

    AlsConfig config;
    config.ridge = 0.0;
    const OptimizeResult base = optimize(init_rank_one(dims, 5, 0.5), spec, config);
    const double before = base.loss_history.back();
    REQUIRE(before > 1e-8);

    const TnState grown = increment_edge(base.state, 0, 1, SliceInitPolicy::noise(1e-3), 17);
    const NewSliceResult r = optimize_new_slices(grown, {0, 1}, spec, 3, config);
    CHECK(r.loss_after < before * (1 - 1e-6));

    // frozen entries never move
    const std::size_t last = grown.ranks.rank(0, 1) - 1;
    for (std::size_t lin = 0; lin < grown.cores[0].size(); ++lin) {
        const auto idx = grown.cores[0].unravel(lin);
        if (idx[1] != last) CHECK(r.state.cores[0][lin] == grown.cores[0][lin]);
    }
}

TEST_CASE("optimize_new_slices leaves an exact optimum untouched") {
    const TnState s = random_tn_state(901, 3, 3, 2);
    const LossSpec spec = LossSpec::frobenius(evaluate(s));
    const TnState grown = increment_edge(s, 0, 2, SliceInitPolicy::noise(1e-4), 3);
    const NewSliceResult r = optimize_new_slices(grown, {0, 2}, spec, 3, {});
    CHECK(r.loss_after <= 1e-9);
}

TEST_CASE("optimize_new_slices never touches frozen entries") {
    const TnState s = random_tn_state(902, 4, 3, 2);
    const DenseTensor target = random_tensor(s.dims, 88);
    const LossSpec spec = LossSpec::frobenius(target);
    const TnState grown = increment_edge(s, 1, 2, SliceInitPolicy::noise(1e-3), 5);
    const NewSliceResult r = optimize_new_slices(grown, {1, 2}, spec, 2, {});

    // frozen = everything but the last slice of the grown modes
    for (const std::size_t k : {std::size_t{1}, std::size_t{2}}) {
        const std::size_t other = k == 1 ? 2 : 1;
        const DenseTensor& before = grown.cores[k];
        const DenseTensor& after = r.state.cores[k];
        const std::size_t last = grown.ranks.rank(1, 2) - 1;
        for (std::size_t lin = 0; lin < before.size(); ++lin) {
            const auto idx = before.unravel(lin);
            if (idx[other] == last) continue;  // the optimized slice
            CHECK(after[lin] == before[lin]);  // bit-exact
        }
    }
    // untouched cores are bit-exact too
    CHECK(r.state.cores[0].same_as(grown.cores[0]));
    CHECK(r.state.cores[3].same_as(grown.cores[3]));
}

TEST_CASE("optimize_new_slices rejects stale states") {
    const TnState s = random_tn_state(903, 3, 3, 2);
    const LossSpec spec = LossSpec::frobenius(random_tensor(s.dims, 1));
    CHECK_THROWS_AS(optimize_new_slices(s, {0, 1}, spec, 2, {}), StaleStateError);

    const TnState grown = increment_edge(s, 0, 1, SliceInitPolicy::zeros(), 0);
    CHECK_THROWS_AS(optimize_new_slices(grown, {0, 2}, spec, 2, {}), StaleStateError);

    // a full sweep invalidates the increment marker
    const SweepResult swept = als_sweep(grown, spec, {});
    CHECK_THROWS_AS(optimize_new_slices(swept.state, {0, 1}, spec, 2, {}), StaleStateError);
}

TEST_CASE("singular systems at ridge zero fall back to minimum-norm solves") {
    // a freshly zero-incremented edge makes the design rank deficient
    const TnState s = random_tn_state(904, 3, 3, 2);
    const DenseTensor target = random_tensor(s.dims, 2);
    const TnState grown = increment_edge(s, 0, 1, SliceInitPolicy::zeros(), 0);
    AlsConfig config;
    config.ridge = 0.0;
    const SweepResult r = als_sweep(grown, LossSpec::frobenius(target), config);
    CHECK(r.min_norm_fallback);

    AlsConfig ridged;
    ridged.ridge = 1e-10;
    const SweepResult r2 = als_sweep(grown, LossSpec::frobenius(target), ridged);
    CHECK(!r2.min_norm_fallback);
}

TEST_CASE("a fully unobserved slice keeps its current entries") {
    // nothing with i0 = 1 is observed, so core 0's second dangling slice
    // is unconstrained and must not move
    const TnState s = random_tn_state(77, 2, 2, 2);
    REQUIRE(s.dims[0] == 2);
    ObservationSet obs;
    obs.dims = s.dims;
    for (std::size_t j = 0; j < s.dims[1]; ++j) {
        obs.indices.insert(obs.indices.end(), {0, j});
        obs.values.push_back(static_cast<double>(j) + 1.0);
    }
    const SweepResult r = als_sweep(s, LossSpec::masked(obs), {});
    for (std::size_t lin = 0; lin < s.cores[0].size(); ++lin) {
        const auto idx = s.cores[0].unravel(lin);
        if (idx[0] == 1) CHECK(r.state.cores[0][lin] == s.cores[0][lin]);
    }
}

TEST_CASE("masked sweeps converge on a completable target") {
    const std::vector<std::size_t> dims{4, 4, 4};
    const DenseTensor truth = evaluate(tt_state(dims, {2, 2}, 1234));
    const ObservationSet obs = subsample(truth, 2);  // half the grid
    const LossSpec spec = LossSpec::masked(obs);

    AlsConfig config;
    config.max_sweeps = 60;
    config.ridge = 1e-12;
    const TnState init = tt_state(dims, {2, 2}, 777);
    const OptimizeResult r = optimize(init, spec, config);
    CHECK(r.loss_history.back() < 1e-12);
}
