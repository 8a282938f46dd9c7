#include "tn/dense_tensor.hpp"

#include <numeric>
#include <string>

namespace tn {

std::size_t dims_product(std::span<const std::size_t> dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
}

DenseTensor::DenseTensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    for (std::size_t d : dims_) {
        if (d == 0) throw ShapeError("tensor mode sizes must be positive");
    }
    data_.assign(dims_product(dims_), 0.0);
}

DenseTensor::DenseTensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    for (std::size_t d : dims_) {
        if (d == 0) throw ShapeError("tensor mode sizes must be positive");
    }
    const std::size_t expected = dims_product(dims_);
    if (data_.size() != expected) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match dims product " + std::to_string(expected));
    }
}

std::vector<std::size_t> DenseTensor::strides() const {
    std::vector<std::size_t> s(dims_.size(), 1);
    for (std::size_t i = dims_.size(); i-- > 1;) s[i - 1] = s[i] * dims_[i];
    return s;
}

std::size_t DenseTensor::ravel(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size()) throw ShapeError("multi-index order mismatch");
    std::size_t linear = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (index[i] >= dims_[i]) throw ShapeError("multi-index out of bounds");
        linear = linear * dims_[i] + index[i];
    }
    return linear;
}

std::vector<std::size_t> DenseTensor::unravel(std::size_t linear) const {
    std::vector<std::size_t> index(dims_.size());
    for (std::size_t i = dims_.size(); i-- > 0;) {
        index[i] = linear % dims_[i];
        linear /= dims_[i];
    }
    return index;
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> new_dims) const& {
    return DenseTensor(std::move(new_dims), data_);
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> new_dims) && {
    return DenseTensor(std::move(new_dims), std::move(data_));
}

DenseTensor DenseTensor::permuted(std::span<const std::size_t> perm) const {
    if (perm.size() != dims_.size()) throw ShapeError("permutation length mismatch");
    std::vector<bool> seen(dims_.size(), false);
    bool identity = true;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (perm[i] >= dims_.size() || seen[perm[i]]) throw ShapeError("invalid mode permutation");
        seen[perm[i]] = true;
        identity = identity && perm[i] == i;
    }
    if (identity) return *this;

    std::vector<std::size_t> new_dims(dims_.size());
    for (std::size_t i = 0; i < perm.size(); ++i) new_dims[i] = dims_[perm[i]];

    const std::vector<std::size_t> src_strides = strides();
    // Stride of the output's mode i inside the source data.
    std::vector<std::size_t> walk(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) walk[i] = src_strides[perm[i]];

    DenseTensor out(std::move(new_dims));
    const std::size_t order = out.dims_.size();
    std::vector<std::size_t> idx(order, 0);
    std::size_t src = 0;
    for (std::size_t lin = 0; lin < out.data_.size(); ++lin) {
        out.data_[lin] = data_[src];
        for (std::size_t m = order; m-- > 0;) {
            if (++idx[m] < out.dims_[m]) {
                src += walk[m];
                break;
            }
            src -= walk[m] * (out.dims_[m] - 1);
            idx[m] = 0;
        }
    }
    return out;
}

DenseTensor DenseTensor::slice(std::size_t mode, std::size_t index) const {
    if (mode >= dims_.size()) throw ShapeError("slice mode out of range");
    if (index >= dims_[mode]) throw ShapeError("slice index out of range");
    std::vector<std::size_t> new_dims;
    new_dims.reserve(dims_.size() - 1);
    for (std::size_t m = 0; m < dims_.size(); ++m) {
        if (m != mode) new_dims.push_back(dims_[m]);
    }
    std::size_t inner = 1;
    for (std::size_t m = mode + 1; m < dims_.size(); ++m) inner *= dims_[m];
    const std::size_t outer = data_.size() / (inner * dims_[mode]);

    std::vector<double> out;
    out.reserve(outer * inner);
    const double* base = data_.data() + index * inner;
    for (std::size_t o = 0; o < outer; ++o) {
        const double* row = base + o * inner * dims_[mode];
        out.insert(out.end(), row, row + inner);
    }
    return DenseTensor(std::move(new_dims), std::move(out));
}

}  // namespace tn
