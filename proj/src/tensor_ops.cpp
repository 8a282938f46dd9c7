#include "tn/tensor_ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace tn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

}  // namespace

DenseTensor contract_pair(const DenseTensor& a, const DenseTensor& b, const ModePairing& pairing) {
    std::vector<bool> a_paired(a.order(), false);
    std::vector<bool> b_paired(b.order(), false);
    for (const auto& [ma, mb] : pairing.pairs) {
        if (ma >= a.order() || mb >= b.order())
            throw ShapeError("contraction pairing refers to a mode out of range");
        if (a_paired[ma] || b_paired[mb])
            throw ShapeError("contraction pairing repeats a mode");
        if (a.dim(ma) != b.dim(mb))
            throw ShapeError("contraction size mismatch: mode " + std::to_string(ma) + " of a has size " +
                             std::to_string(a.dim(ma)) + ", mode " + std::to_string(mb) +
                             " of b has size " + std::to_string(b.dim(mb)));
        a_paired[ma] = true;
        b_paired[mb] = true;
    }

    std::vector<std::size_t> a_free, b_free;
    for (std::size_t m = 0; m < a.order(); ++m)
        if (!a_paired[m]) a_free.push_back(m);
    for (std::size_t m = 0; m < b.order(); ++m)
        if (!b_paired[m]) b_free.push_back(m);

    // a -> (free..., paired...), b -> (paired..., free...), then one GEMM.
    std::vector<std::size_t> perm_a = a_free;
    std::vector<std::size_t> perm_b;
    for (const auto& [ma, mb] : pairing.pairs) {
        perm_a.push_back(ma);
        perm_b.push_back(mb);
    }
    perm_b.insert(perm_b.end(), b_free.begin(), b_free.end());

    std::size_t shared = 1;
    for (const auto& [ma, mb] : pairing.pairs) shared *= a.dim(ma);
    const std::size_t rows = a.size() / shared;
    const std::size_t cols = b.size() / shared;

    const DenseTensor ap = a.permuted(perm_a);
    const DenseTensor bp = b.permuted(perm_b);

    std::vector<std::size_t> out_dims;
    out_dims.reserve(a_free.size() + b_free.size());
    for (std::size_t m : a_free) out_dims.push_back(a.dim(m));
    for (std::size_t m : b_free) out_dims.push_back(b.dim(m));

    DenseTensor out(std::move(out_dims));
    ConstMap lhs(ap.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(shared));
    ConstMap rhs(bp.data().data(), static_cast<Eigen::Index>(shared), static_cast<Eigen::Index>(cols));
    Map res(out.mutable_data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    res.noalias() = lhs * rhs;
    return out;
}

DenseTensor matricize(const DenseTensor& t, std::span<const std::size_t> row_modes) {
    if (row_modes.empty() || row_modes.size() >= t.order())
        throw ShapeError("matricization needs a nonempty strict subset of modes as rows");
    std::vector<bool> in_rows(t.order(), false);
    for (std::size_t m : row_modes) {
        if (m >= t.order()) throw ShapeError("matricization row mode out of range");
        if (in_rows[m]) throw ShapeError("matricization row mode repeated");
        in_rows[m] = true;
    }
    std::vector<std::size_t> perm(row_modes.begin(), row_modes.end());
    for (std::size_t m = 0; m < t.order(); ++m)
        if (!in_rows[m]) perm.push_back(m);

    std::size_t n_rows = 1;
    for (std::size_t m : row_modes) n_rows *= t.dim(m);
    return t.permuted(perm).reshaped({n_rows, t.size() / n_rows});
}

DenseTensor mode_n_product(const DenseTensor& t, const DenseTensor& m, std::size_t n) {
    if (m.order() != 2) throw ShapeError("mode-n product needs an order-2 factor");
    if (n >= t.order()) throw ShapeError("mode-n product mode out of range");
    if (m.dim(1) != t.dim(n))
        throw ShapeError("mode-n product size mismatch: matrix has " + std::to_string(m.dim(1)) +
                         " columns, mode " + std::to_string(n) + " has size " + std::to_string(t.dim(n)));
    ModePairing pairing{{{n, 1}}};
    const DenseTensor c = contract_pair(t, m, pairing);
    // c's modes: t's modes with n removed, then rows(m); move the last mode back to n.
    std::vector<std::size_t> perm(t.order());
    for (std::size_t i = 0; i < t.order(); ++i) {
        if (i < n)
            perm[i] = i;
        else if (i == n)
            perm[i] = t.order() - 1;
        else
            perm[i] = i - 1;
    }
    return c.permuted(perm);
}

double inner(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims() != b.dims()) throw ShapeError("inner product dims mismatch");
    double sum = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) sum += da[i] * db[i];
    return sum;
}

double frobenius(const DenseTensor& t) {
    double sum = 0.0;
    for (double v : t.data()) sum += v * v;
    return std::sqrt(sum);
}

std::size_t ravel_index(std::span<const std::size_t> dims, std::span<const std::size_t> index) {
    std::size_t lin = 0;
    for (std::size_t i = 0; i < dims.size(); ++i) lin = lin * dims[i] + index[i];
    return lin;
}

std::vector<std::size_t> unravel_index(std::span<const std::size_t> dims, std::size_t linear) {
    std::vector<std::size_t> index(dims.size());
    for (std::size_t i = dims.size(); i-- > 0;) {
        index[i] = linear % dims[i];
        linear /= dims[i];
    }
    return index;
}

DenseTensor augment_singletons(const DenseTensor& t, std::span<const std::size_t> positions) {
    const std::size_t new_order = t.order() + positions.size();
    std::vector<std::size_t> new_dims(new_order, 0);
    for (std::size_t pos : positions) {
        if (pos >= new_order) throw ShapeError("singleton position out of range");
        if (new_dims[pos] != 0) throw ShapeError("singleton position repeated");
        new_dims[pos] = 1;
    }
    std::size_t src = 0;
    for (std::size_t i = 0; i < new_order; ++i) {
        if (new_dims[i] == 0) new_dims[i] = t.dim(src++);
    }
    return t.reshaped(std::move(new_dims));
}

}  // namespace tn
