#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tn/baselines.hpp"
#include "tn/greedy.hpp"
#include "tn/io.hpp"
#include "tn/tensorize.hpp"

namespace {

using namespace tn;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_dims(std::span<const std::size_t> dims) {
    std::string out;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(dims[i]);
    }
    return out;
}

std::vector<std::size_t> parse_dims(const std::string& text) {
    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        dims.push_back(std::stoul(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (dims.empty()) throw CLI::ValidationError("--dims", "expected a comma-separated list");
    return dims;
}

// Flags shared by the greedy experiment subcommands.
struct GreedyFlags {
    std::string report_path;
    std::string out_network;
    double loss_threshold = -1.0;  // <0: no threshold
    std::uint64_t max_params = 0;
    std::size_t max_iterations = 1000;
    std::size_t edge_search_iters = 0;  // 0: subcommand default
    double split_threshold = 1e-5;
    double slice_sigma = 1e-3;
    bool no_split = false;
    bool no_transfer = false;
    bool random_walk = false;
    std::string constrain;  // "", "tt" or "tr"
    std::uint64_t seed = 0;
    std::size_t als_sweeps = 200;
    double als_tol = 1e-8;
    double als_ridge = 1e-10;

    void attach(CLI::App* cmd, std::size_t default_edge_iters) {
        edge_search_iters = default_edge_iters;
        cmd->add_option("--max-params", max_params, "parameter budget")->required();
        cmd->add_option("--loss-threshold", loss_threshold,
                        "stop when the relative error drops below this");
        cmd->add_option("--max-iterations", max_iterations, "greedy iteration cap");
        cmd->add_option("--edge-search-iters", edge_search_iters,
                        "restricted iterations per candidate edge");
        cmd->add_option("--split-threshold", split_threshold, "singular value cutoff for splits");
        cmd->add_option("--slice-sigma", slice_sigma,
                        "half-width of the noise filling new slices (0 = zeros)");
        cmd->add_flag("--no-split", no_split, "disable the internal-node search");
        cmd->add_flag("--no-transfer", no_transfer,
                      "restart each iteration from a fresh random init");
        cmd->add_flag("--random-walk", random_walk, "pick edges at random instead of searching");
        cmd->add_option("--constrain", constrain, "restrict increments to a topology (tt|tr)")
            ->check(CLI::IsMember({"tt", "tr"}));
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--als-sweeps", als_sweeps, "maximum ALS sweeps per optimization");
        cmd->add_option("--als-tol", als_tol, "relative improvement tolerance for ALS");
        cmd->add_option("--als-ridge", als_ridge, "ridge added to the ALS normal equations");
        cmd->add_option("--report", report_path, "experiment report destination")->required();
        cmd->add_option("--out-network", out_network, "write the final network to this TNET file");
    }

    GreedyConfig config(std::size_t p) const {
        GreedyConfig cfg;
        cfg.max_params = max_params;
        if (loss_threshold >= 0) cfg.loss_threshold = loss_threshold;
        cfg.max_iterations = max_iterations;
        cfg.edge_search_iters = edge_search_iters;
        cfg.split_threshold = split_threshold;
        cfg.slice_policy =
            slice_sigma > 0 ? SliceInitPolicy::noise(slice_sigma) : SliceInitPolicy::zeros();
        if (constrain == "tt" || constrain == "tr") {
            std::vector<Edge> chain;
            for (std::size_t i = 0; i + 1 < p; ++i) chain.push_back({i, i + 1});
            if (constrain == "tr" && p > 2) chain.push_back({0, p - 1});
            cfg.edge_whitelist = std::move(chain);
        }
        cfg.enable_split = !no_split;
        cfg.transfer_weights = !no_transfer;
        cfg.random_walk = random_walk;
        cfg.rng_seed = seed;
        cfg.als.max_sweeps = als_sweeps;
        cfg.als.rel_improvement_tol = als_tol;
        cfg.als.ridge = als_ridge;
        return cfg;
    }

    std::vector<std::pair<std::string, std::string>> echo(const std::string& command) const {
        return {
            {"command", command},
            {"max_params", std::to_string(max_params)},
            {"loss_threshold", loss_threshold >= 0 ? fmt(loss_threshold) : "none"},
            {"max_iterations", std::to_string(max_iterations)},
            {"edge_search_iters", std::to_string(edge_search_iters)},
            {"split_threshold", fmt(split_threshold)},
            {"slice_sigma", fmt(slice_sigma)},
            {"split", no_split ? "0" : "1"},
            {"transfer", no_transfer ? "0" : "1"},
            {"random_walk", random_walk ? "1" : "0"},
            {"constrain", constrain.empty() ? "none" : constrain},
            {"seed", std::to_string(seed)},
            {"als_sweeps", std::to_string(als_sweeps)},
            {"als_tol", fmt(als_tol)},
            {"als_ridge", fmt(als_ridge)},
        };
    }
};

int run_decompose(const std::string& target_path, const GreedyFlags& flags) {
    const DenseTensor target = read_tensor(target_path);
    const LossSpec spec = LossSpec::frobenius(target);
    const GreedyConfig cfg = flags.config(target.order());

    const GreedyResult result = greedy_search(target.dims(), spec, cfg);

    auto echo = flags.echo("decompose");
    echo.emplace_back("target", target_path);
    echo.emplace_back("dims", join_dims(target.dims()));
    write_report(flags.report_path, make_report(std::move(echo), result));
    if (!flags.out_network.empty()) write_network(flags.out_network, result.state);

    const TraceRow& last = result.trace.rows.back();
    std::cout << "decompose: " << termination_name(result.trace.status) << " after "
              << last.iteration << " iterations, relative error " << fmt(last.metric) << " with "
              << last.params << " parameters\n";
    return 0;
}

int run_complete(const std::string& obs_path, const std::string& indices_path,
                 double mask_fraction, const std::string& dims_text, const GreedyFlags& flags) {
    ObservationSet obs;
    std::optional<DenseTensor> truth;

    if (mask_fraction > 0) {
        truth = read_tensor(obs_path);
        obs = observe(*truth, sample_mask(truth->dims(), mask_fraction, flags.seed));
    } else {
        if (indices_path.empty() || dims_text.empty())
            throw CLI::ValidationError(
                "--observations",
                "a raw observation list needs --indices and --dims (or pass --mask-fraction "
                "with a full tensor)");
        const DenseTensor values = read_tensor(obs_path);
        const DenseTensor indices = read_tensor(indices_path);
        obs.dims = parse_dims(dims_text);
        if (values.order() != 1 || indices.order() != 2 || indices.dim(0) != values.dim(0) ||
            indices.dim(1) != obs.dims.size())
            throw FormatError("observation values must be a vector and indices an n x p tensor");
        obs.values.assign(values.data().begin(), values.data().end());
        obs.indices.reserve(indices.size());
        for (double v : indices.data()) {
            if (v < 0 || v != std::floor(v))
                throw FormatError("observation indices must be nonnegative integers");
            obs.indices.push_back(static_cast<std::size_t>(v));
        }
    }

    const LossSpec spec = LossSpec::masked(std::move(obs));
    const GreedyConfig cfg = flags.config(spec.output_dims().size());
    const GreedyResult result =
        greedy_search(spec.output_dims(), spec, cfg, truth ? &*truth : nullptr);

    auto echo = flags.echo("complete");
    echo.emplace_back("observations", obs_path);
    if (!indices_path.empty()) echo.emplace_back("indices", indices_path);
    if (mask_fraction > 0) echo.emplace_back("mask_fraction", fmt(mask_fraction));
    echo.emplace_back("dims", join_dims(spec.output_dims()));
    write_report(flags.report_path, make_report(std::move(echo), result));
    if (!flags.out_network.empty()) write_network(flags.out_network, result.state);

    const TraceRow& last = result.trace.rows.back();
    std::cout << "complete: " << termination_name(result.trace.status) << " after "
              << last.iteration << " iterations, observed relative error " << fmt(last.metric);
    if (last.test_rse) std::cout << ", held-out RSE " << fmt(*last.test_rse);
    std::cout << " with " << last.params << " parameters\n";
    return 0;
}

int run_baseline(const std::string& model_name, const std::string& rank_range,
                 std::uint64_t param_cap, const std::string& target_path, double mask_fraction,
                 std::uint64_t seed, std::size_t als_sweeps, double als_tol, double als_ridge,
                 const std::string& report_path) {
    BaselineModel model;
    if (model_name == "tt")
        model = BaselineModel::tt;
    else if (model_name == "tr")
        model = BaselineModel::tr;
    else
        model = BaselineModel::tucker;

    const std::size_t colon = rank_range.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError("--rank-range", "expected the form a:b");
    RankSweepSpec sweep;
    sweep.model = model;
    sweep.rank_start = std::stoul(rank_range.substr(0, colon));
    sweep.rank_end = std::stoul(rank_range.substr(colon + 1));
    sweep.param_cap = param_cap;

    const DenseTensor target = read_tensor(target_path);
    std::optional<DenseTensor> truth;
    LossSpec spec = LossSpec::frobenius(target);
    if (mask_fraction > 0) {
        truth = target;
        spec = LossSpec::masked(observe(target, sample_mask(target.dims(), mask_fraction, seed)));
    }

    AlsConfig als;
    als.max_sweeps = als_sweeps;
    als.rel_improvement_tol = als_tol;
    als.ridge = als_ridge;
    const auto curve = rank_sweep(sweep, spec, als, seed, truth ? &*truth : nullptr);

    ExperimentReport report;
    report.config = {{"command", "baseline"},
                     {"model", model_name},
                     {"rank_range", rank_range},
                     {"param_cap", std::to_string(param_cap)},
                     {"target", target_path},
                     {"dims", join_dims(target.dims())},
                     {"mask_fraction", mask_fraction > 0 ? fmt(mask_fraction) : "none"},
                     {"seed", std::to_string(seed)},
                     {"als_sweeps", std::to_string(als_sweeps)},
                     {"als_tol", fmt(als_tol)},
                     {"als_ridge", fmt(als_ridge)}};
    for (const SweepPoint& point : curve) {
        ReportRow row;
        row.iteration = point.rank;
        row.loss = point.final_loss;
        row.rel_error = point.rel_error;
        row.params = point.params;
        if (point.test_rse) row.test_rse = fmt(*point.test_rse);
        row.structure = model_name + ":" + std::to_string(point.rank);
        report.rows.push_back(std::move(row));
    }
    report.status = "sweep-finished";
    write_report(report_path, report);

    std::cout << "baseline " << model_name << ": " << curve.size() << " ranks swept\n";
    for (const SweepPoint& point : curve)
        std::cout << "  rank " << point.rank << ": params " << point.params << ", rel_error "
                  << fmt(point.rel_error)
                  << (point.test_rse ? ", test_rse " + fmt(*point.test_rse) : "") << "\n";
    return 0;
}

int run_contract(const std::string& network_path, const std::string& out_path) {
    const TnState state = read_network(network_path);
    write_tensor(out_path, evaluate(state));
    return 0;
}

int run_inspect(const std::string& network_path) {
    const TnState state = read_network(network_path);
    std::cout << "nodes " << state.node_count() << "\n";
    std::cout << "dims " << join_dims(state.dims) << "\n";
    std::cout << "params " << param_count(state) << "\n";
    for (const auto& [i, j, rank] : edge_list(state))
        std::cout << "edge " << i << " " << j << " " << rank << "\n";
    return 0;
}

int run_tensorize(const std::string& image_path, const std::string& preset_name,
                  const std::string& out_path, bool invert) {
    const DenseTensor input = read_tensor(image_path);
    const TensorizePreset preset = parse_preset(preset_name);
    if (invert) {
        write_tensor(out_path, undo_preset(input, preset));
        return 0;
    }
    const DenseTensor t = apply_preset(input, preset);
    write_tensor(out_path, t);
    std::cout << "tensorize: " << join_dims(input.dims()) << " -> " << join_dims(t.dims()) << "\n";
    return 0;
}

int run_plot(const std::string& report_path, const std::string& out_path) {
    const ExperimentReport report = read_report(report_path);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw FormatError(out_path + ": cannot open for writing");
        out = &file;
    }
    *out << "params\trel_error\ttest_rse\n";
    for (const ReportRow& row : report.rows)
        *out << row.params << '\t' << fmt(row.rel_error) << '\t' << row.test_rse << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"greedy tensor-network structure learning"};
    app.require_subcommand(1);

    // decompose
    auto* decompose = app.add_subcommand("decompose", "fit a full target tensor");
    std::string target_path;
    decompose->add_option("--target", target_path, "target TNSR file")->required();
    GreedyFlags dec_flags;
    dec_flags.attach(decompose, 2);

    // complete
    auto* complete = app.add_subcommand("complete", "fit observed entries only");
    std::string obs_path, indices_path, dims_text;
    double mask_fraction = 0.0;
    complete->add_option("--observations", obs_path,
                         "observed values (vector TNSR) or a full tensor with --mask-fraction")
        ->required();
    complete->add_option("--indices", indices_path, "n x p index TNSR for raw observations");
    complete->add_option("--mask-fraction", mask_fraction,
                         "sample this fraction of entries from a full tensor");
    complete->add_option("--dims", dims_text, "tensor dims for raw observations, e.g. 6,10,6,10,3");
    GreedyFlags cmp_flags;
    cmp_flags.attach(complete, 10);

    // baseline
    auto* baseline = app.add_subcommand("baseline", "uniform-rank TT/TR/Tucker sweeps");
    std::string model_name, rank_range, base_target, base_report;
    std::uint64_t base_cap = 25000, base_seed = 0;
    std::size_t base_sweeps = 200;
    double base_tol = 1e-8, base_ridge = 1e-10, base_fraction = 0.0;
    baseline->add_option("--model", model_name)
        ->required()
        ->check(CLI::IsMember({"tt", "tr", "tucker"}));
    baseline->add_option("--rank-range", rank_range, "a:b inclusive")->required();
    baseline->add_option("--param-cap", base_cap, "skip ranks above this parameter count");
    baseline->add_option("--target", base_target, "target TNSR file")->required();
    baseline->add_option("--mask-fraction", base_fraction, "completion mode: observe this fraction");
    baseline->add_option("--seed", base_seed);
    baseline->add_option("--als-sweeps", base_sweeps);
    baseline->add_option("--als-tol", base_tol);
    baseline->add_option("--als-ridge", base_ridge);
    baseline->add_option("--report", base_report)->required();

    // contract
    auto* contract = app.add_subcommand("contract", "evaluate a network to a dense tensor");
    std::string net_path, contract_out;
    contract->add_option("--network", net_path)->required();
    contract->add_option("--out", contract_out)->required();

    // inspect
    auto* inspect = app.add_subcommand("inspect", "print a network's structure");
    std::string inspect_path;
    inspect->add_option("--network", inspect_path)->required();

    // tensorize
    auto* tensorize = app.add_subcommand("tensorize", "reshape an image tensor for experiments");
    std::string image_path, preset_name, tensorize_out;
    bool invert = false;
    tensorize->add_option("--image", image_path, "H x W or H x W x C TNSR")->required();
    tensorize->add_option("--preset", preset_name, "einstein | live4x8 | custom:r,..xc,..")
        ->required();
    tensorize->add_option("--out", tensorize_out)->required();
    tensorize->add_flag("--invert", invert, "apply the inverse reshaping");

    // plot
    auto* plot = app.add_subcommand("plot", "extract a params/error curve from a report");
    std::string plot_report, plot_out;
    plot->add_option("--report", plot_report)->required();
    plot->add_option("--out", plot_out, "write TSV here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (decompose->parsed()) return run_decompose(target_path, dec_flags);
        if (complete->parsed())
            return run_complete(obs_path, indices_path, mask_fraction, dims_text, cmp_flags);
        if (baseline->parsed())
            return run_baseline(model_name, rank_range, base_cap, base_target, base_fraction,
                                base_seed, base_sweeps, base_tol, base_ridge, base_report);
        if (contract->parsed()) return run_contract(net_path, contract_out);
        if (inspect->parsed()) return run_inspect(inspect_path);
        if (tensorize->parsed())
            return run_tensorize(image_path, preset_name, tensorize_out, invert);
        if (plot->parsed()) return run_plot(plot_report, plot_out);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "tn: error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
