#include "tn/network.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "tn/rng.hpp"
#include "tn/tensor_ops.hpp"

namespace tn {

void RankMatrix::set_rank(std::size_t i, std::size_t j, std::size_t rank) {
    if (i == j) throw ShapeError("rank matrix diagonal is fixed to 1");
    if (i >= p_ || j >= p_) throw ShapeError("rank matrix index out of range");
    if (rank == 0) throw ShapeError("edge ranks must be positive");
    r_[i * p_ + j] = rank;
    r_[j * p_ + i] = rank;
}

RankMatrix RankMatrix::grown() const {
    RankMatrix out(p_ + 1);
    for (std::size_t i = 0; i < p_; ++i)
        for (std::size_t j = 0; j < p_; ++j) out.r_[i * (p_ + 1) + j] = r_[i * p_ + j];
    return out;
}

std::vector<std::size_t> TnState::core_dims(std::size_t k) const {
    const std::size_t p = node_count();
    std::vector<std::size_t> d(p);
    for (std::size_t j = 0; j < p; ++j) d[j] = (j == k) ? dims[k] : ranks.rank(k, j);
    return d;
}

void TnState::validate() const {
    const std::size_t p = node_count();
    if (ranks.node_count() != p || cores.size() != p)
        throw ShapeError("network state: node count mismatch between ranks, dims and cores");
    for (std::size_t k = 0; k < p; ++k) {
        if (dims[k] == 0) throw ShapeError("dangling sizes must be positive");
        if (cores[k].dims() != core_dims(k))
            throw ShapeError("core " + std::to_string(k) + " shape disagrees with the rank matrix");
    }
}

TnState random_state(const RankMatrix& ranks, std::span<const std::size_t> dims,
                     std::uint64_t rng_seed, double scale) {
    TnState state{ranks, {dims.begin(), dims.end()}, {}, std::nullopt};
    Rng rng(rng_seed);
    const std::size_t p = state.node_count();
    state.cores.reserve(p);
    for (std::size_t k = 0; k < p; ++k) {
        DenseTensor core(state.core_dims(k));
        for (double& v : core.mutable_data()) v = rng.uniform(-scale, scale);
        state.cores.push_back(std::move(core));
    }
    state.validate();
    return state;
}

TnState init_rank_one(std::span<const std::size_t> dims, std::uint64_t rng_seed, double scale) {
    if (dims.empty()) throw ShapeError("cannot initialize a network over zero dimensions");
    return random_state(RankMatrix(dims.size()), dims, rng_seed, scale);
}

namespace {

// One live node during pairwise contraction. Labels name legs: label of
// bond (i, j) is i * p + j with i < j; the dangling leg of node k is
// -(k + 1). A label shared by two nodes is summed when they merge.
struct LabeledNode {
    DenseTensor t;
    std::vector<long long> labels;
    std::size_t id;
};

long long bond_label(std::size_t i, std::size_t j, std::size_t p) {
    return static_cast<long long>(std::min(i, j) * p + std::max(i, j));
}

long long dangling_label(std::size_t k) { return -static_cast<long long>(k) - 1; }

LabeledNode merge(const LabeledNode& a, const LabeledNode& b) {
    ModePairing pairing;
    std::vector<bool> b_used(b.labels.size(), false);
    for (std::size_t ma = 0; ma < a.labels.size(); ++ma) {
        for (std::size_t mb = 0; mb < b.labels.size(); ++mb) {
            if (!b_used[mb] && a.labels[ma] == b.labels[mb]) {
                pairing.pairs.emplace_back(ma, mb);
                b_used[mb] = true;
                break;
            }
        }
    }
    LabeledNode out;
    for (std::size_t ma = 0; ma < a.labels.size(); ++ma) {
        bool paired = false;
        for (const auto& [pa, pb] : pairing.pairs) paired = paired || pa == ma;
        if (!paired) out.labels.push_back(a.labels[ma]);
    }
    for (std::size_t mb = 0; mb < b.labels.size(); ++mb)
        if (!b_used[mb]) out.labels.push_back(b.labels[mb]);
    out.t = contract_pair(a.t, b.t, pairing);
    out.id = std::min(a.id, b.id);
    return out;
}

std::size_t merged_size(const LabeledNode& a, const LabeledNode& b) {
    std::size_t shared = 1;
    for (std::size_t ma = 0; ma < a.labels.size(); ++ma) {
        for (std::size_t mb = 0; mb < b.labels.size(); ++mb) {
            if (a.labels[ma] == b.labels[mb]) {
                shared *= a.t.dim(ma);
                break;
            }
        }
    }
    return (a.t.size() / shared) * (b.t.size() / shared);
}

// Contracts everything down to one node, greedily picking the pair with
// the smallest merged size; ties go to the smallest (id, id) pair.
LabeledNode contract_all_greedy(std::vector<LabeledNode> nodes) {
    while (nodes.size() > 1) {
        std::size_t best_a = 0, best_b = 1;
        std::size_t best_size = std::numeric_limits<std::size_t>::max();
        std::pair<std::size_t, std::size_t> best_ids{0, 0};
        for (std::size_t x = 0; x < nodes.size(); ++x) {
            for (std::size_t y = x + 1; y < nodes.size(); ++y) {
                const std::size_t sz = merged_size(nodes[x], nodes[y]);
                const std::pair<std::size_t, std::size_t> ids{
                    std::min(nodes[x].id, nodes[y].id), std::max(nodes[x].id, nodes[y].id)};
                if (sz < best_size || (sz == best_size && ids < best_ids)) {
                    best_size = sz;
                    best_ids = ids;
                    best_a = x;
                    best_b = y;
                }
            }
        }
        LabeledNode m = merge(nodes[best_a], nodes[best_b]);
        nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(best_b));
        nodes[best_a] = std::move(m);
    }
    return std::move(nodes.front());
}

LabeledNode contract_all_sequential(std::vector<LabeledNode> nodes) {
    LabeledNode acc = std::move(nodes.back());
    for (std::size_t k = nodes.size() - 1; k-- > 0;) acc = merge(nodes[k], acc);
    return acc;
}

std::vector<LabeledNode> network_nodes(const TnState& state) {
    const std::size_t p = state.node_count();
    std::vector<LabeledNode> nodes(p);
    for (std::size_t k = 0; k < p; ++k) {
        nodes[k].t = state.cores[k];
        nodes[k].id = k;
        nodes[k].labels.resize(p);
        for (std::size_t m = 0; m < p; ++m)
            nodes[k].labels[m] = (m == k) ? dangling_label(k) : bond_label(k, m, p);
    }
    return nodes;
}

// Reorders the final node's modes to match the requested label order.
DenseTensor arrange(const LabeledNode& node, std::span<const long long> wanted) {
    std::vector<std::size_t> perm(wanted.size());
    for (std::size_t i = 0; i < wanted.size(); ++i) {
        const auto it = std::find(node.labels.begin(), node.labels.end(), wanted[i]);
        if (it == node.labels.end()) throw ShapeError("contraction lost an expected open leg");
        perm[i] = static_cast<std::size_t>(it - node.labels.begin());
    }
    return node.t.permuted(perm);
}

}  // namespace

DenseTensor evaluate(const TnState& state) {
    state.validate();
    const std::size_t p = state.node_count();
    const LabeledNode result = contract_all_greedy(network_nodes(state));
    std::vector<long long> wanted(p);
    for (std::size_t k = 0; k < p; ++k) wanted[k] = dangling_label(k);
    return arrange(result, wanted);
}

DenseTensor evaluate_sequential(const TnState& state) {
    state.validate();
    const std::size_t p = state.node_count();
    const LabeledNode result = contract_all_sequential(network_nodes(state));
    std::vector<long long> wanted(p);
    for (std::size_t k = 0; k < p; ++k) wanted[k] = dangling_label(k);
    return arrange(result, wanted);
}

DenseTensor brute_force_tn_eval(const TnState& state, std::uint64_t work_cap) {
    state.validate();
    const std::size_t p = state.node_count();

    std::vector<Edge> bonds;
    std::uint64_t work = dims_product(state.dims);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            bonds.push_back({i, j});
            work *= state.ranks.rank(i, j);
            if (work > work_cap)
                throw OracleCapError("brute-force evaluation would need " + std::to_string(work) +
                                     " loop steps, above the cap of " + std::to_string(work_cap));
        }
    }

    DenseTensor out(state.dims);
    std::vector<std::size_t> core_index(p);
    std::vector<std::size_t> bond_index(bonds.size(), 0);
    std::vector<std::vector<std::size_t>> core_strides(p);
    for (std::size_t k = 0; k < p; ++k) core_strides[k] = state.cores[k].strides();

    for (std::size_t lin = 0; lin < out.size(); ++lin) {
        const std::vector<std::size_t> iout = out.unravel(lin);
        double sum = 0.0;
        std::fill(bond_index.begin(), bond_index.end(), 0);
        for (;;) {
            double prod = 1.0;
            for (std::size_t k = 0; k < p; ++k) {
                std::size_t offset = iout[k] * core_strides[k][k];
                for (std::size_t b = 0; b < bonds.size(); ++b) {
                    if (bonds[b].i == k) offset += bond_index[b] * core_strides[k][bonds[b].j];
                    if (bonds[b].j == k) offset += bond_index[b] * core_strides[k][bonds[b].i];
                }
                prod *= state.cores[k][offset];
            }
            sum += prod;
            std::size_t b = bonds.size();
            while (b-- > 0) {
                if (++bond_index[b] < state.ranks.rank(bonds[b].i, bonds[b].j)) break;
                bond_index[b] = 0;
            }
            if (b == std::numeric_limits<std::size_t>::max()) break;
        }
        out[lin] = sum;
    }
    return out;
}

std::uint64_t param_count(const TnState& state) {
    std::uint64_t total = 0;
    const std::size_t p = state.node_count();
    for (std::size_t k = 0; k < p; ++k) {
        std::uint64_t n = state.dims[k];
        for (std::size_t j = 0; j < p; ++j)
            if (j != k) n *= state.ranks.rank(k, j);
        total += n;
    }
    return total;
}

std::uint64_t param_count_after_increment(const TnState& state, Edge edge) {
    const std::size_t p = state.node_count();
    std::uint64_t di = state.dims[edge.i], dj = state.dims[edge.j];
    for (std::size_t m = 0; m < p; ++m) {
        if (m != edge.i && m != edge.j) {
            di *= state.ranks.rank(edge.i, m);
            dj *= state.ranks.rank(edge.j, m);
        }
    }
    return param_count(state) + di + dj;
}

std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> edge_list(const TnState& state,
                                                                         bool include_unit) {
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> edges;
    const std::size_t p = state.node_count();
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const std::size_t r = state.ranks.rank(i, j);
            if (r > 1 || include_unit) edges.emplace_back(i, j, r);
        }
    }
    return edges;
}

DenseTensor environment(const TnState& state, std::size_t k) {
    const std::size_t p = state.node_count();
    if (k >= p) throw ShapeError("environment node out of range");
    if (p == 1) return DenseTensor::scalar(1.0);

    std::vector<LabeledNode> nodes = network_nodes(state);
    nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(k));
    const LabeledNode result = contract_all_greedy(std::move(nodes));

    std::vector<long long> wanted;
    for (std::size_t m = 0; m < p; ++m)
        if (m != k) wanted.push_back(dangling_label(m));
    for (std::size_t j = 0; j < p; ++j)
        if (j != k) wanted.push_back(bond_label(k, j, p));
    return arrange(result, wanted);
}

DenseTensor sliced_environment(const TnState& state, std::size_t k,
                               std::span<const std::size_t> out_index) {
    const std::size_t p = state.node_count();
    if (k >= p) throw ShapeError("environment node out of range");
    if (out_index.size() != p) throw ShapeError("output index order mismatch");
    if (p == 1) return DenseTensor::scalar(1.0);

    std::vector<LabeledNode> nodes;
    nodes.reserve(p - 1);
    for (std::size_t m = 0; m < p; ++m) {
        if (m == k) continue;
        LabeledNode node;
        node.t = state.cores[m].slice(m, out_index[m]);
        node.id = m;
        for (std::size_t j = 0; j < p; ++j)
            if (j != m) node.labels.push_back(bond_label(m, j, p));
        nodes.push_back(std::move(node));
    }
    const LabeledNode result = contract_all_greedy(std::move(nodes));

    std::vector<long long> wanted;
    for (std::size_t j = 0; j < p; ++j)
        if (j != k) wanted.push_back(bond_label(k, j, p));
    return arrange(result, wanted);
}

}  // namespace tn
