#include "tn/als.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <string>

#include "tn/tensor_ops.hpp"

namespace tn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;

// Full evaluation is preferred for masked losses up to this many entries;
// above it, predictions are contracted entry by entry.
constexpr std::size_t kFullEvalCap = std::size_t{1} << 22;

std::vector<std::size_t> without_singletons(std::span<const std::size_t> dims) {
    std::vector<std::size_t> out;
    for (std::size_t d : dims)
        if (d != 1) out.push_back(d);
    return out;
}

// Dims are compatible when they only differ by size-1 modes; the flat
// row-major layouts then coincide and values can be compared directly.
void check_compatible(std::span<const std::size_t> state_dims, std::span<const std::size_t> out_dims) {
    if (without_singletons(state_dims) != without_singletons(out_dims))
        throw ShapeError("loss target dims are incompatible with the network's dangling dims");
}

// Observation multi-indices translated into the state's dangling
// coordinates (the state may carry extra singleton modes).
struct MaskedView {
    std::vector<std::size_t> state_indices;  // count * p
    std::vector<std::size_t> linear;         // row-major positions
};

MaskedView masked_view(const TnState& state, const ObservationSet& obs) {
    check_compatible(state.dims, obs.dims);
    const std::size_t p = state.node_count();
    MaskedView view;
    view.state_indices.reserve(obs.count() * p);
    view.linear.reserve(obs.count());
    for (std::size_t o = 0; o < obs.count(); ++o) {
        const std::size_t lin = ravel_index(obs.dims, obs.index(o));
        view.linear.push_back(lin);
        const std::vector<std::size_t> sidx = unravel_index(state.dims, lin);
        view.state_indices.insert(view.state_indices.end(), sidx.begin(), sidx.end());
    }
    return view;
}

std::span<const std::size_t> view_index(const MaskedView& view, std::size_t p, std::size_t o) {
    return {view.state_indices.data() + o * p, p};
}

// Core k as an N x d_k matrix: rows indexed row-major over the bond
// modes j != k in ascending j, columns by the dangling index.
std::vector<std::size_t> unfold_perm(std::size_t order, std::size_t k) {
    std::vector<std::size_t> perm;
    perm.reserve(order);
    for (std::size_t m = 0; m < order; ++m)
        if (m != k) perm.push_back(m);
    perm.push_back(k);
    return perm;
}

RowMatrix core_to_matrix(const DenseTensor& core, std::size_t k) {
    const DenseTensor u = core.permuted(unfold_perm(core.order(), k));
    const std::size_t d = core.dim(k);
    return ConstMap(u.data().data(), static_cast<Eigen::Index>(core.size() / d),
                    static_cast<Eigen::Index>(d));
}

DenseTensor matrix_to_core(const RowMatrix& mat, const std::vector<std::size_t>& core_dims,
                           std::size_t k) {
    const std::size_t p = core_dims.size();
    std::vector<std::size_t> unfold_dims;
    unfold_dims.reserve(p);
    for (std::size_t m = 0; m < p; ++m)
        if (m != k) unfold_dims.push_back(core_dims[m]);
    unfold_dims.push_back(core_dims[k]);

    std::vector<double> data(mat.data(), mat.data() + mat.size());
    DenseTensor unfolded(std::move(unfold_dims), std::move(data));

    std::vector<std::size_t> perm(p);
    for (std::size_t t = 0; t < p; ++t) perm[t] = (t == k) ? p - 1 : (t < k ? t : t - 1);
    return unfolded.permuted(perm);
}

// Redundant network parameterizations routinely hand ALS design
// matrices whose trailing singular values are pure roundoff noise
// (columns of exactly collinear slices). Solving along those directions
// produces ~1e13 coefficients and cancellation wrecks the residual, so
// pivots below this relative threshold are truncated.
constexpr double kRankTruncationTol = 1e-12;

// Minimum residual solution of min ||E X - B||_F. With a positive ridge
// the regularized normal equations are solved; at ridge 0 a truncated
// complete orthogonal decomposition yields the minimum-norm solution and
// flags rank deficiency.
RowMatrix solve_least_squares(const Eigen::Ref<const RowMatrix>& E,
                              const Eigen::Ref<const RowMatrix>& B, double ridge, bool& fallback) {
    if (ridge > 0.0) {
        Eigen::MatrixXd gram = E.transpose() * E;
        gram.diagonal().array() += ridge;
        const Eigen::MatrixXd rhs = E.transpose() * B;
        return gram.ldlt().solve(rhs);
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(kRankTruncationTol);
    cod.compute(E);
    if (cod.rank() < E.cols()) fallback = true;
    return cod.solve(B);
}

// Target reshaped to the state's dangling dims and unfolded with mode k
// as columns; rows match the environment's dangling ordering.
DenseTensor target_unfold(const TnState& state, const DenseTensor& target, std::size_t k) {
    return target.reshaped(state.dims).permuted(unfold_perm(state.node_count(), k));
}

// Row indices of the core-k unfold whose coordinate on the bond to
// `other` equals that bond's last index (the freshly added slice).
std::vector<Eigen::Index> new_slice_rows(const TnState& state, std::size_t k, std::size_t other) {
    const std::size_t p = state.node_count();
    std::vector<std::size_t> bond_dims;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < p; ++j) {
        if (j == k) continue;
        if (j == other) pos = bond_dims.size();
        bond_dims.push_back(state.ranks.rank(k, j));
    }
    std::size_t inner = 1;
    for (std::size_t m = pos + 1; m < bond_dims.size(); ++m) inner *= bond_dims[m];
    const std::size_t len = bond_dims[pos];
    const std::size_t total = dims_product(bond_dims);

    std::vector<Eigen::Index> rows;
    rows.reserve(total / len);
    for (std::size_t r = 0; r < total; ++r) {
        if ((r / inner) % len == len - 1) rows.push_back(static_cast<Eigen::Index>(r));
    }
    return rows;
}

double predict_entry(const TnState& state, std::span<const std::size_t> index) {
    if (state.node_count() == 1) return state.cores[0][index[0]];
    const DenseTensor env = sliced_environment(state, 0, index);
    const DenseTensor core_slice = state.cores[0].slice(0, index[0]);
    return inner(env, core_slice);
}

void update_core_full(TnState& state, std::size_t k, const DenseTensor& target,
                      const AlsConfig& config, bool& fallback) {
    const std::size_t d = state.dims[k];
    const DenseTensor env = environment(state, k);
    const std::size_t n_cols = state.cores[k].size() / d;
    const std::size_t n_rows = env.size() / n_cols;

    const DenseTensor tu = target_unfold(state, target, k);
    ConstMap E(env.data().data(), static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
    ConstMap T(tu.data().data(), static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(d));

    const RowMatrix solution = solve_least_squares(E, T, config.ridge, fallback);
    state.cores[k] = matrix_to_core(solution, state.core_dims(k), k);
}

// One least-squares row per observation: the environment of node k
// contracted at the observed output index. This entrywise assembly is
// the scalability bottleneck of masked sweeps, O(|observations| * prod
// of ranks) per core.
RowMatrix masked_rows(const TnState& state, std::size_t k, const MaskedView& view) {
    const std::size_t p = state.node_count();
    const std::size_t n_cols = state.cores[k].size() / state.dims[k];
    const std::size_t n = view.linear.size();
    RowMatrix rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_cols));
    for (std::size_t o = 0; o < n; ++o) {
        const DenseTensor env = sliced_environment(state, k, view_index(view, p, o));
        rows.row(static_cast<Eigen::Index>(o)) =
            ConstMap(env.data().data(), 1, static_cast<Eigen::Index>(n_cols));
    }
    return rows;
}

void update_core_masked(TnState& state, std::size_t k, const ObservationSet& obs,
                        const MaskedView& view, const AlsConfig& config, bool& fallback) {
    const std::size_t p = state.node_count();
    const std::size_t d = state.dims[k];
    const RowMatrix rows = masked_rows(state, k, view);
    const Eigen::Index n_cols = rows.cols();

    std::vector<std::vector<std::size_t>> groups(d);
    for (std::size_t o = 0; o < obs.count(); ++o) groups[view_index(view, p, o)[k]].push_back(o);

    RowMatrix coeffs = core_to_matrix(state.cores[k], k);
    for (std::size_t x = 0; x < d; ++x) {
        const auto& group = groups[x];
        if (group.empty()) continue;  // unobserved slice: nothing constrains it, keep it
        RowMatrix A(static_cast<Eigen::Index>(group.size()), n_cols);
        RowMatrix b(static_cast<Eigen::Index>(group.size()), 1);
        for (std::size_t g = 0; g < group.size(); ++g) {
            A.row(static_cast<Eigen::Index>(g)) = rows.row(static_cast<Eigen::Index>(group[g]));
            b(static_cast<Eigen::Index>(g), 0) = obs.values[group[g]];
        }
        coeffs.col(static_cast<Eigen::Index>(x)) =
            solve_least_squares(A, b, config.ridge, fallback);
    }
    state.cores[k] = matrix_to_core(coeffs, state.core_dims(k), k);
}

void update_slice_full(TnState& state, std::size_t k, std::size_t other, const DenseTensor& target,
                       const AlsConfig& config, bool& fallback) {
    const std::size_t d = state.dims[k];
    const DenseTensor env = environment(state, k);
    const std::size_t n_cols = state.cores[k].size() / d;
    const std::size_t n_rows = env.size() / n_cols;

    const DenseTensor tu = target_unfold(state, target, k);
    ConstMap E(env.data().data(), static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
    ConstMap T(tu.data().data(), static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(d));

    RowMatrix coeffs = core_to_matrix(state.cores[k], k);
    const std::vector<Eigen::Index> slice = new_slice_rows(state, k, other);

    RowMatrix E_s(E.rows(), static_cast<Eigen::Index>(slice.size()));
    RowMatrix G_s(static_cast<Eigen::Index>(slice.size()), coeffs.cols());
    for (std::size_t s = 0; s < slice.size(); ++s) {
        E_s.col(static_cast<Eigen::Index>(s)) = E.col(slice[s]);
        G_s.row(static_cast<Eigen::Index>(s)) = coeffs.row(slice[s]);
    }
    // Residual left for the slice once the frozen rows are accounted for.
    const RowMatrix residual = T - E * coeffs + E_s * G_s;
    const RowMatrix solution = solve_least_squares(E_s, residual, config.ridge, fallback);
    for (std::size_t s = 0; s < slice.size(); ++s)
        coeffs.row(slice[s]) = solution.row(static_cast<Eigen::Index>(s));
    state.cores[k] = matrix_to_core(coeffs, state.core_dims(k), k);
}

void update_slice_masked(TnState& state, std::size_t k, std::size_t other,
                         const ObservationSet& obs, const MaskedView& view,
                         const AlsConfig& config, bool& fallback) {
    const std::size_t p = state.node_count();
    const std::size_t d = state.dims[k];
    const RowMatrix rows = masked_rows(state, k, view);

    RowMatrix coeffs = core_to_matrix(state.cores[k], k);
    const std::vector<Eigen::Index> slice = new_slice_rows(state, k, other);

    RowMatrix rows_s(rows.rows(), static_cast<Eigen::Index>(slice.size()));
    RowMatrix G_s(static_cast<Eigen::Index>(slice.size()), coeffs.cols());
    for (std::size_t s = 0; s < slice.size(); ++s) {
        rows_s.col(static_cast<Eigen::Index>(s)) = rows.col(slice[s]);
        G_s.row(static_cast<Eigen::Index>(s)) = coeffs.row(slice[s]);
    }

    std::vector<std::vector<std::size_t>> groups(d);
    for (std::size_t o = 0; o < obs.count(); ++o) groups[view_index(view, p, o)[k]].push_back(o);

    for (std::size_t x = 0; x < d; ++x) {
        const auto& group = groups[x];
        if (group.empty()) continue;
        RowMatrix A(static_cast<Eigen::Index>(group.size()), static_cast<Eigen::Index>(slice.size()));
        RowMatrix b(static_cast<Eigen::Index>(group.size()), 1);
        for (std::size_t g = 0; g < group.size(); ++g) {
            const Eigen::Index o = static_cast<Eigen::Index>(group[g]);
            A.row(static_cast<Eigen::Index>(g)) = rows_s.row(o);
            b(static_cast<Eigen::Index>(g), 0) =
                obs.values[group[g]] - rows.row(o).dot(coeffs.col(static_cast<Eigen::Index>(x))) +
                rows_s.row(o).dot(G_s.col(static_cast<Eigen::Index>(x)));
        }
        const RowMatrix solution = solve_least_squares(A, b, config.ridge, fallback);
        for (std::size_t s = 0; s < slice.size(); ++s)
            coeffs(slice[s], static_cast<Eigen::Index>(x)) = solution(static_cast<Eigen::Index>(s), 0);
    }
    state.cores[k] = matrix_to_core(coeffs, state.core_dims(k), k);
}

void check_config(const AlsConfig& config) {
    if (config.max_sweeps == 0) throw ShapeError("als config: max_sweeps must be at least 1");
    if (config.rel_improvement_tol < 0 || config.ridge < 0)
        throw ShapeError("als config: tolerances must be nonnegative");
}

}  // namespace

void ObservationSet::validate() const {
    if (values.empty()) throw ShapeError("observation set is empty");
    if (indices.size() != values.size() * dims.size())
        throw ShapeError("observation indices/values length mismatch");
    std::vector<std::size_t> linear;
    linear.reserve(count());
    for (std::size_t o = 0; o < count(); ++o) {
        const auto idx = index(o);
        for (std::size_t m = 0; m < dims.size(); ++m)
            if (idx[m] >= dims[m]) throw ShapeError("observation index out of bounds");
        linear.push_back(ravel_index(dims, idx));
    }
    std::sort(linear.begin(), linear.end());
    if (std::adjacent_find(linear.begin(), linear.end()) != linear.end())
        throw ShapeError("observation indices must be unique");
}

LossSpec LossSpec::frobenius(DenseTensor target) {
    LossSpec spec;
    spec.kind = Kind::full_frobenius;
    spec.target = std::move(target);
    return spec;
}

LossSpec LossSpec::masked(ObservationSet observations) {
    observations.validate();
    LossSpec spec;
    spec.kind = Kind::masked_mse;
    spec.observations = std::move(observations);
    return spec;
}

double loss(const TnState& state, const LossSpec& spec) {
    check_compatible(state.dims, spec.output_dims());
    if (spec.kind == LossSpec::Kind::full_frobenius) {
        const DenseTensor w = evaluate(state);
        const auto wd = w.data();
        const auto td = spec.target.data();
        double sum = 0.0;
        for (std::size_t i = 0; i < wd.size(); ++i) {
            const double diff = wd[i] - td[i];
            sum += diff * diff;
        }
        return sum;
    }
    const ObservationSet& obs = spec.observations;
    const MaskedView view = masked_view(state, obs);
    double sum = 0.0;
    if (dims_product(state.dims) <= kFullEvalCap) {
        const DenseTensor w = evaluate(state);
        for (std::size_t o = 0; o < obs.count(); ++o) {
            const double diff = w[view.linear[o]] - obs.values[o];
            sum += diff * diff;
        }
    } else {
        const std::size_t p = state.node_count();
        for (std::size_t o = 0; o < obs.count(); ++o) {
            const double diff = predict_entry(state, view_index(view, p, o)) - obs.values[o];
            sum += diff * diff;
        }
    }
    return sum / static_cast<double>(obs.count());
}

SweepResult als_sweep(const TnState& state, const LossSpec& spec, const AlsConfig& config,
                      std::vector<double>* per_core_loss) {
    check_config(config);
    check_compatible(state.dims, spec.output_dims());
    SweepResult result{state, false};
    const std::size_t p = state.node_count();
    if (spec.kind == LossSpec::Kind::full_frobenius) {
        for (std::size_t k = 0; k < p; ++k) {
            update_core_full(result.state, k, spec.target, config, result.min_norm_fallback);
            if (per_core_loss) per_core_loss->push_back(loss(result.state, spec));
        }
    } else {
        const MaskedView view = masked_view(state, spec.observations);
        for (std::size_t k = 0; k < p; ++k) {
            update_core_masked(result.state, k, spec.observations, view, config,
                               result.min_norm_fallback);
            if (per_core_loss) per_core_loss->push_back(loss(result.state, spec));
        }
    }
    result.state.last_increment.reset();
    return result;
}

OptimizeResult optimize(const TnState& state, const LossSpec& spec, const AlsConfig& config) {
    check_config(config);
    OptimizeResult result{state, {loss(state, spec)}, false};
    for (std::size_t sweep = 0; sweep < config.max_sweeps; ++sweep) {
        SweepResult sr = als_sweep(result.state, spec, config);
        result.state = std::move(sr.state);
        result.min_norm_fallback = result.min_norm_fallback || sr.min_norm_fallback;
        const double prev = result.loss_history.back();
        const double cur = loss(result.state, spec);
        result.loss_history.push_back(cur);
        if (prev - cur <= config.rel_improvement_tol * prev) break;
    }
    result.state.last_increment.reset();
    return result;
}

NewSliceResult optimize_new_slices(const TnState& state, Edge edge, const LossSpec& spec,
                                   std::size_t iters, const AlsConfig& config) {
    if (edge.i > edge.j) std::swap(edge.i, edge.j);
    if (!state.last_increment || *state.last_increment != edge)
        throw StaleStateError("new-slice optimization needs a state freshly incremented on edge (" +
                              std::to_string(edge.i) + ", " + std::to_string(edge.j) + ")");
    if (iters == 0) throw ShapeError("new-slice optimization needs at least one iteration");
    check_compatible(state.dims, spec.output_dims());

    NewSliceResult result{state, 0.0};
    bool fallback = false;
    if (spec.kind == LossSpec::Kind::full_frobenius) {
        for (std::size_t it = 0; it < iters; ++it) {
            update_slice_full(result.state, edge.i, edge.j, spec.target, config, fallback);
            update_slice_full(result.state, edge.j, edge.i, spec.target, config, fallback);
        }
    } else {
        const MaskedView view = masked_view(state, spec.observations);
        for (std::size_t it = 0; it < iters; ++it) {
            update_slice_masked(result.state, edge.i, edge.j, spec.observations, view, config, fallback);
            update_slice_masked(result.state, edge.j, edge.i, spec.observations, view, config, fallback);
        }
    }
    result.loss_after = loss(result.state, spec);
    return result;
}

}  // namespace tn
