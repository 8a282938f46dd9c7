#pragma once

#include <cstdint>
#include <vector>

#include "tn/network.hpp"
#include "tn/rng.hpp"
#include "tn/tensor_ops.hpp"

namespace tn::test {

inline DenseTensor random_tensor(std::vector<std::size_t> dims, std::uint64_t seed,
                                 double scale = 1.0) {
    DenseTensor t(std::move(dims));
    Rng rng(seed);
    for (double& v : t.mutable_data()) v = rng.uniform(-scale, scale);
    return t;
}

/// Reference contraction by explicit summation; independent of the
/// GEMM-based implementation in the library.
inline DenseTensor oracle_contract(const DenseTensor& a, const DenseTensor& b,
                                   const ModePairing& pairing) {
    std::vector<bool> a_paired(a.order(), false), b_paired(b.order(), false);
    for (const auto& [ma, mb] : pairing.pairs) {
        a_paired[ma] = true;
        b_paired[mb] = true;
    }
    std::vector<std::size_t> a_free, b_free, out_dims, shared_dims;
    for (std::size_t m = 0; m < a.order(); ++m)
        if (!a_paired[m]) {
            a_free.push_back(m);
            out_dims.push_back(a.dim(m));
        }
    for (std::size_t m = 0; m < b.order(); ++m)
        if (!b_paired[m]) {
            b_free.push_back(m);
            out_dims.push_back(b.dim(m));
        }
    for (const auto& [ma, mb] : pairing.pairs) shared_dims.push_back(a.dim(ma));

    DenseTensor out(out_dims);
    const std::size_t n_shared = dims_product(shared_dims);
    for (std::size_t lin = 0; lin < out.size(); ++lin) {
        const std::vector<std::size_t> oidx = out.unravel(lin);
        double sum = 0.0;
        for (std::size_t s = 0; s < n_shared; ++s) {
            const std::vector<std::size_t> sidx = unravel_index(shared_dims, s);
            std::vector<std::size_t> ia(a.order()), ib(b.order());
            for (std::size_t m = 0; m < a_free.size(); ++m) ia[a_free[m]] = oidx[m];
            for (std::size_t m = 0; m < b_free.size(); ++m) ib[b_free[m]] = oidx[a_free.size() + m];
            for (std::size_t q = 0; q < pairing.pairs.size(); ++q) {
                ia[pairing.pairs[q].first] = sidx[q];
                ib[pairing.pairs[q].second] = sidx[q];
            }
            sum += a.at(ia) * b.at(ib);
        }
        out[lin] = sum;
    }
    return out;
}

/// Random network: structure and cores drawn from the seed. Edge ranks
/// are 1 (absent) with probability ~1/2, else up to max_rank.
inline TnState random_tn_state(std::uint64_t seed, std::size_t p, std::size_t max_dim,
                               std::size_t max_rank) {
    Rng rng(seed);
    std::vector<std::size_t> dims(p);
    for (auto& d : dims) d = 1 + rng.uniform_index(max_dim);
    RankMatrix ranks(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            if (rng.next_unit() < 0.5 && max_rank > 1)
                ranks.set_rank(i, j, 2 + rng.uniform_index(max_rank - 1));
    return random_state(ranks, dims, rng.next_u64(), 1.0);
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        if (d > worst) worst = d;
    }
    return worst;
}

}  // namespace tn::test
