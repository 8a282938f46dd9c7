#include <doctest.h>

#include "support/helpers.hpp"
#include "tn/baselines.hpp"
#include "tn/greedy.hpp"

using namespace tn;
using test::random_tn_state;

TEST_CASE("make_structure shapes and parameter counts") {
    const std::vector<std::size_t> d7{7, 7, 7, 7, 7};

    SUBCASE("rank-1 TT degenerates to the rank-one network") {
        const TnState tt = make_structure(BaselineModel::tt, d7, 1, 0);
        const TnState r1 = init_rank_one(d7, 0, 0.5);
        CHECK(tt.ranks == r1.ranks);
        CHECK(param_count(tt) == 35);
    }

    SUBCASE("TR on 4 modes of size 3, rank 2") {
        const std::vector<std::size_t> d{3, 3, 3, 3};
        const TnState tr = make_structure(BaselineModel::tr, d, 2, 0);
        CHECK(param_count(tr) == 48);
        CHECK(tr.ranks.rank(0, 3) == 2);
    }

    SUBCASE("Tucker on (7,7,7) at rank 2") {
        const std::vector<std::size_t> d{7, 7, 7};
        const TnState tucker = make_structure(BaselineModel::tucker, d, 2, 0);
        CHECK(tucker.node_count() == 4);
        CHECK(tucker.dims[3] == 1);
        CHECK(param_count(tucker) == 50);  // 2^3 core + three 7x2 leaves
    }

    SUBCASE("TT parameter formula at arbitrary rank") {
        for (std::size_t rank : {2, 3, 5}) {
            const TnState tt = make_structure(BaselineModel::tt, d7, rank, 1);
            const std::uint64_t expected = 7 * rank + 3 * (rank * 7 * rank) + rank * 7;
            CHECK(param_count(tt) == expected);
        }
    }
}

TEST_CASE("TT sweep nails a uniform rank-3 TT target") {
    const std::vector<std::size_t> dims{5, 5, 5, 5};
    const DenseTensor target = evaluate(make_structure(BaselineModel::tt, dims, 3, 888));

    RankSweepSpec sweep;
    sweep.model = BaselineModel::tt;
    sweep.rank_start = 1;
    sweep.rank_end = 4;
    sweep.param_cap = 100000;

    AlsConfig als;
    als.ridge = 0.0;
    als.max_sweeps = 200;
    als.rel_improvement_tol = 1e-12;

    const auto curve = rank_sweep(sweep, LossSpec::frobenius(target), als, 3);
    REQUIRE(curve.size() == 4);
    CHECK(curve[0].rel_error > 1e-3);  // rank 1 is hopeless
    CHECK(curve[2].rel_error < 1e-6);  // rank 3 is exact
    CHECK(curve[3].rel_error < 1e-6);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].params > curve[i - 1].params);
}

TEST_CASE("sweeps stop at the parameter cap") {
    const std::vector<std::size_t> dims{4, 4, 4};
    const DenseTensor target = test::random_tensor(dims, 10);

    RankSweepSpec sweep;
    sweep.model = BaselineModel::tt;
    sweep.rank_start = 1;
    sweep.rank_end = 10;
    sweep.param_cap = 100;  // rank r costs 8r + 4r^2: rank 4 fits (96), rank 5 (140) does not

    const auto curve = rank_sweep(sweep, LossSpec::frobenius(target), {}, 0);
    REQUIRE(curve.size() == 4);
    CHECK(curve.back().params == 96);
}

TEST_CASE("sweeps are reproducible bit-exactly") {
    const std::vector<std::size_t> dims{4, 4, 4};
    const DenseTensor target = evaluate(random_tn_state(11, 3, 4, 2));
    RankSweepSpec sweep;
    sweep.model = BaselineModel::tr;
    sweep.rank_start = 1;
    sweep.rank_end = 3;
    sweep.param_cap = 10000;

    const auto a = rank_sweep(sweep, LossSpec::frobenius(target), {}, 5);
    const auto b = rank_sweep(sweep, LossSpec::frobenius(target), {}, 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].rel_error == b[i].rel_error);  // bit-exact
        CHECK(a[i].params == b[i].params);
    }
}

TEST_CASE("Tucker runs inside the same loss machinery") {
    const std::vector<std::size_t> dims{4, 4, 4};
    const DenseTensor target = evaluate(make_structure(BaselineModel::tucker, dims, 2, 99));
    REQUIRE(target.dims().size() == 4);  // trailing singleton from the internal core

    RankSweepSpec sweep;
    sweep.model = BaselineModel::tucker;
    sweep.rank_start = 2;
    sweep.rank_end = 2;
    sweep.param_cap = 10000;

    AlsConfig als;
    als.max_sweeps = 300;
    als.rel_improvement_tol = 1e-13;
    const auto curve =
        rank_sweep(sweep, LossSpec::frobenius(target.reshaped({4, 4, 4})), als, 12);
    REQUIRE(curve.size() == 1);
    CHECK(curve[0].rel_error < 1e-5);
}
