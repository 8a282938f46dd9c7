#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tn/dense_tensor.hpp"

namespace tn {

/// Which modes of two tensors get summed against each other in a
/// pairwise contraction. Paired modes must have equal sizes and no mode
/// may appear twice.
struct ModePairing {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// Pairwise contraction. Result modes are the uncontracted modes of `a`
/// in order, followed by the uncontracted modes of `b` in order. An
/// empty pairing is the outer product.
DenseTensor contract_pair(const DenseTensor& a, const DenseTensor& b, const ModePairing& pairing);

/// Reshapes `t` into a matrix: rows indexed row-major over `row_modes`
/// in the given order, columns row-major over the remaining modes in
/// ascending index order. `row_modes` must be a nonempty strict subset.
DenseTensor matricize(const DenseTensor& t, std::span<const std::size_t> row_modes);

/// Mode-n matrix product: contracts mode n of `t` with the second mode
/// of the matrix `m`; mode n of the result has size rows(m).
DenseTensor mode_n_product(const DenseTensor& t, const DenseTensor& m, std::size_t n);

/// Sum of elementwise products. Dims must match exactly.
double inner(const DenseTensor& a, const DenseTensor& b);

double frobenius(const DenseTensor& t);

/// Inserts size-1 modes so that they land at the listed positions of the
/// result. Data is unchanged.
DenseTensor augment_singletons(const DenseTensor& t, std::span<const std::size_t> positions);

/// Row-major linear position of a multi-index (no bounds checks).
std::size_t ravel_index(std::span<const std::size_t> dims, std::span<const std::size_t> index);

std::vector<std::size_t> unravel_index(std::span<const std::size_t> dims, std::size_t linear);

}  // namespace tn
