#include <doctest.h>

#include <cmath>

#include "support/helpers.hpp"
#include "tn/tensor_ops.hpp"

using namespace tn;
using test::max_abs_diff;
using test::oracle_contract;
using test::random_tensor;

TEST_CASE("contract_pair: matrix-vector product") {
    const DenseTensor a({2, 2}, {1, 2, 3, 4});
    const DenseTensor b({2}, {1, 1});
    const DenseTensor r = contract_pair(a, b, {{{1, 0}}});
    REQUIRE(r.dims() == std::vector<std::size_t>{2});
    CHECK(r[0] == doctest::Approx(3.0));
    CHECK(r[1] == doctest::Approx(7.0));
}

TEST_CASE("contract_pair: empty pairing is the outer product") {
    const DenseTensor u({2}, {1, 2});
    const DenseTensor v({3}, {4, 5, 6});
    const DenseTensor r = contract_pair(u, v, {});
    REQUIRE(r.dims() == std::vector<std::size_t>{2, 3});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(r.at({i, j}) == u[i] * v[j]);
}

TEST_CASE("contract_pair agrees with the nested-sum oracle") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const auto rnd_dims = [&](std::size_t order) {
            std::vector<std::size_t> d(order);
            for (auto& x : d) x = 1 + rng.uniform_index(4);
            return d;
        };
        auto da = rnd_dims(3);
        auto db = rnd_dims(3);
        const std::size_t ma = rng.uniform_index(3), mb = rng.uniform_index(3);
        db[mb] = da[ma];
        const DenseTensor a = random_tensor(da, seed * 2 + 1);
        const DenseTensor b = random_tensor(db, seed * 2 + 2);
        const ModePairing pairing{{{ma, mb}}};
        CHECK(max_abs_diff(contract_pair(a, b, pairing), oracle_contract(a, b, pairing)) <= 1e-12);
    }
}

TEST_CASE("contract_pair with two paired modes matches the oracle") {
    const DenseTensor a = random_tensor({2, 3, 4}, 7);
    const DenseTensor b = random_tensor({4, 5, 2}, 8);
    const ModePairing pairing{{{2, 0}, {0, 2}}};
    const DenseTensor got = contract_pair(a, b, pairing);
    REQUIRE(got.dims() == std::vector<std::size_t>{3, 5});
    CHECK(max_abs_diff(got, oracle_contract(a, b, pairing)) <= 1e-12);
}

TEST_CASE("contract_pair with the identity matrix only permutes") {
    const DenseTensor t = random_tensor({3, 4, 2}, 11);
    DenseTensor eye({4, 4});
    for (std::size_t i = 0; i < 4; ++i) eye.at({i, i}) = 1.0;
    const DenseTensor r = contract_pair(t, eye, {{{1, 1}}});
    // result modes: (0, 2) of t, then rows of the identity
    const DenseTensor expected = t.permuted(std::vector<std::size_t>{0, 2, 1});
    CHECK(max_abs_diff(r, expected) == 0.0);
}

TEST_CASE("contract_pair rejects mismatched sizes") {
    const DenseTensor a({2, 3});
    const DenseTensor b({4});
    CHECK_THROWS_AS(contract_pair(a, b, {{{1, 0}}}), ShapeError);
    CHECK_THROWS_AS(contract_pair(a, a, {{{0, 0}, {0, 1}}}), ShapeError);
}

TEST_CASE("matricize: (2,3,4) with mode 1 as rows") {
    DenseTensor t({2, 3, 4});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    const DenseTensor m = matricize(t, std::vector<std::size_t>{1});
    REQUIRE(m.dims() == std::vector<std::size_t>{3, 8});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 4; ++k) CHECK(m.at({j, i * 4 + k}) == t.at({i, j, k}));
}

TEST_CASE("matricize round-trip is bit-exact") {
    const DenseTensor t = random_tensor({3, 2, 5}, 13);
    const DenseTensor m = matricize(t, std::vector<std::size_t>{1});
    // rows = mode 1, cols = modes (0, 2): invert by reshaping and permuting back
    const DenseTensor back = m.reshaped({2, 3, 5}).permuted(std::vector<std::size_t>{1, 0, 2});
    CHECK(back.same_as(t));
}

TEST_CASE("matricize of an outer product has rank one") {
    const DenseTensor x({2}, {2, -1});
    const DenseTensor y({3}, {1, 4, 7});
    const DenseTensor m = matricize(contract_pair(x, y, {}), std::vector<std::size_t>{0});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(m.at({i, j}) == x[i] * y[j]);
}

TEST_CASE("matricize rejects empty and full bipartitions") {
    const DenseTensor t({2, 3});
    CHECK_THROWS_AS(matricize(t, std::vector<std::size_t>{}), ShapeError);
    CHECK_THROWS_AS(matricize(t, std::vector<std::size_t>{0, 1}), ShapeError);
}

TEST_CASE("mode_n_product: identity leaves the tensor unchanged") {
    const DenseTensor t = random_tensor({2, 3, 4}, 17);
    DenseTensor eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye.at({i, i}) = 1.0;
    CHECK(max_abs_diff(mode_n_product(t, eye, 1), t) == 0.0);
}

TEST_CASE("mode_n_product matches the index-formula loops") {
    const DenseTensor t = random_tensor({2, 3, 4}, 19);
    const DenseTensor m = random_tensor({5, 4}, 23);
    const DenseTensor got = mode_n_product(t, m, 2);
    REQUIRE(got.dims() == std::vector<std::size_t>{2, 3, 5});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t r = 0; r < 5; ++r) {
                double sum = 0.0;
                for (std::size_t k = 0; k < 4; ++k) sum += t.at({i, j, k}) * m.at({r, k});
                CHECK(got.at({i, j, r}) == doctest::Approx(sum).epsilon(1e-12));
            }
}

TEST_CASE("mode_n_product commutes across distinct modes") {
    const DenseTensor t = random_tensor({2, 3, 4}, 29);
    const DenseTensor a = random_tensor({5, 2}, 31);
    const DenseTensor b = random_tensor({6, 3}, 37);
    const DenseTensor ab = mode_n_product(mode_n_product(t, a, 0), b, 1);
    const DenseTensor ba = mode_n_product(mode_n_product(t, b, 1), a, 0);
    CHECK(max_abs_diff(ab, ba) <= 1e-13);
}

TEST_CASE("frobenius and inner") {
    CHECK(frobenius(DenseTensor({3, 2})) == 0.0);
    DenseTensor ones({2, 3});
    for (double& v : ones.mutable_data()) v = 1.0;
    CHECK(frobenius(ones) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));

    const DenseTensor t = random_tensor({4, 3}, 41);
    CHECK(frobenius(t) * frobenius(t) == doctest::Approx(inner(t, t)).epsilon(1e-14));
    CHECK_THROWS_AS(inner(t, DenseTensor({3, 4})), ShapeError);
}

TEST_CASE("frobenius is absolutely homogeneous") {
    const DenseTensor t = random_tensor({3, 3, 2}, 43);
    for (double alpha : {-2.5, 0.0, 0.3, 7.0}) {
        DenseTensor scaled = t;
        for (double& v : scaled.mutable_data()) v *= alpha;
        CHECK(frobenius(scaled) ==
              doctest::Approx(std::abs(alpha) * frobenius(t)).epsilon(1e-14));
    }
}

TEST_CASE("scalars are order-0 tensors") {
    const DenseTensor s = DenseTensor::scalar(2.5);
    CHECK(s.order() == 0);
    CHECK(s.size() == 1);
    // full contraction of two vectors is an order-0 tensor
    const DenseTensor u({3}, {1, 2, 3});
    const DenseTensor r = contract_pair(u, u, {{{0, 0}}});
    CHECK(r.order() == 0);
    CHECK(r[0] == doctest::Approx(14.0));
}

TEST_CASE("augment_singletons") {
    const DenseTensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    const DenseTensor front = augment_singletons(t, std::vector<std::size_t>{0});
    REQUIRE(front.dims() == std::vector<std::size_t>{1, 2, 3});
    CHECK(std::equal(front.data().begin(), front.data().end(), t.data().begin()));

    // round trip: inserting then reshaping away is the identity
    const DenseTensor both = augment_singletons(t, std::vector<std::size_t>{1, 3});
    REQUIRE(both.dims() == std::vector<std::size_t>{2, 1, 3, 1});
    CHECK(both.reshaped({2, 3}).same_as(t));
}

TEST_CASE("slice fixes one mode") {
    const DenseTensor t = random_tensor({3, 4, 2}, 47);
    const DenseTensor s = t.slice(1, 2);
    REQUIRE(s.dims() == std::vector<std::size_t>{3, 2});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 2; ++k) CHECK(s.at({i, k}) == t.at({i, 2, k}));
}

TEST_CASE("permuted moves entries where expected") {
    const DenseTensor t = random_tensor({2, 3, 4}, 53);
    const DenseTensor p = t.permuted(std::vector<std::size_t>{2, 0, 1});
    REQUIRE(p.dims() == std::vector<std::size_t>{4, 2, 3});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 4; ++k) CHECK(p.at({k, i, j}) == t.at({i, j, k}));
}
