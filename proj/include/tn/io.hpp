#pragma once

#include <filesystem>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tn/greedy.hpp"
#include "tn/network.hpp"

namespace tn {

/// TNSR: "TNSR", version byte 1, u32-LE order p, p u32-LE mode sizes,
/// then product(dims) doubles (IEEE-754 LE, row-major).
void write_tensor(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tensor(const std::filesystem::path& path);

/// TNET: "TNET", version byte 1, u32-LE node count p, p u32-LE dangling
/// sizes, the p(p-1)/2 upper-triangular ranks in lexicographic (i, j)
/// order as u32-LE, then the p cores concatenated row-major.
void write_network(const std::filesystem::path& path, const TnState& state);
TnState read_network(const std::filesystem::path& path);

struct ReportRow {
    std::size_t iteration = 0;
    std::string edge = "-";  // "i-j" or "-"
    double loss = 0.0;
    double rel_error = 0.0;
    std::uint64_t params = 0;
    double wall_ms = 0.0;
    std::string splits = "-";    // "node>new:rank" joined by ';', or "-"
    std::string test_rse = "-";  // held-out error or "-"
    std::string structure = "-";
};

/// Line-oriented experiment record: config echo, one row per greedy
/// iteration, the final structure's super-unit edges and a termination
/// status. Everything except the wall-clock column is reproducible from
/// the echoed config.
struct ExperimentReport {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<ReportRow> rows;
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> final_edges;
    std::string status;
};

ExperimentReport make_report(std::vector<std::pair<std::string, std::string>> config,
                             const GreedyResult& result);

void write_report(const std::filesystem::path& path, const ExperimentReport& report);
ExperimentReport read_report(const std::filesystem::path& path);

/// Equality up to wall-clock times.
bool same_trace(const ExperimentReport& a, const ExperimentReport& b);

std::string termination_name(Termination status);

}  // namespace tn
