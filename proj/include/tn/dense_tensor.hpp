#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tn/error.hpp"

namespace tn {

/// Dense multidimensional array of 64-bit reals, row-major (last index
/// varies fastest). An order-0 tensor has an empty dimension list and
/// exactly one entry, so fully contracted networks (traces, squared
/// norms) need no special casing.
///
/// Values are immutable once built except through mutable_data(); all
/// operations in the library return new tensors, so sharing across
/// threads is safe.
class DenseTensor {
public:
    /// Order-0 tensor holding 0.
    DenseTensor() : data_(1, 0.0) {}

    /// Zero-filled tensor of the given mode sizes.
    explicit DenseTensor(std::vector<std::size_t> dims);

    /// Tensor from flat row-major data; length must equal product(dims).
    DenseTensor(std::vector<std::size_t> dims, std::vector<double> data);

    static DenseTensor scalar(double v) {
        DenseTensor t;
        t.data_[0] = v;
        return t;
    }

    std::size_t order() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t dim(std::size_t mode) const { return dims_[mode]; }
    std::size_t size() const { return data_.size(); }

    std::span<const double> data() const { return data_; }
    std::span<double> mutable_data() { return data_; }

    double operator[](std::size_t linear) const { return data_[linear]; }
    double& operator[](std::size_t linear) { return data_[linear]; }

    double at(std::span<const std::size_t> index) const { return data_[ravel(index)]; }
    double& at(std::span<const std::size_t> index) { return data_[ravel(index)]; }
    double at(std::initializer_list<std::size_t> index) const {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }
    double& at(std::initializer_list<std::size_t> index) {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }

    /// Row-major strides: stride of the last mode is 1.
    std::vector<std::size_t> strides() const;

    std::size_t ravel(std::span<const std::size_t> index) const;
    std::vector<std::size_t> unravel(std::size_t linear) const;

    /// Same data, new mode sizes; product must match.
    DenseTensor reshaped(std::vector<std::size_t> new_dims) const&;
    DenseTensor reshaped(std::vector<std::size_t> new_dims) &&;

    /// Mode permutation: result mode i is this tensor's mode perm[i].
    DenseTensor permuted(std::span<const std::size_t> perm) const;

    /// Fixes one mode at the given index and drops it (order decreases by 1).
    DenseTensor slice(std::size_t mode, std::size_t index) const;

    bool same_as(const DenseTensor& other) const {
        return dims_ == other.dims_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

/// Product of mode sizes (1 for an empty list).
std::size_t dims_product(std::span<const std::size_t> dims);

}  // namespace tn
