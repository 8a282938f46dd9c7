#include "tn/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tn {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class ByteReader {
public:
    ByteReader(const std::filesystem::path& path, std::vector<char> bytes)
        : path_(path.string()), bytes_(std::move(bytes)) {}

    std::size_t offset() const { return offset_; }
    std::size_t remaining() const { return bytes_.size() - offset_; }

    void expect_magic(const char* magic) {
        if (remaining() < 4 || std::memcmp(bytes_.data() + offset_, magic, 4) != 0)
            fail(std::string("bad magic, expected \"") + magic + '"');
        offset_ += 4;
    }

    std::uint8_t read_u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(bytes_[offset_++]);
    }

    std::uint32_t read_u32(const char* what) {
        need(4, what);
        std::uint32_t v;
        std::memcpy(&v, bytes_.data() + offset_, 4);
        offset_ += 4;
        return v;
    }

    double read_f64(const char* what) {
        need(8, what);
        double v;
        std::memcpy(&v, bytes_.data() + offset_, 8);
        offset_ += 8;
        return v;
    }

    void read_f64_block(double* out, std::size_t count, const char* what) {
        if (remaining() < count * 8)
            fail(std::string("truncated ") + what + ": expected " + std::to_string(count * 8) +
                 " bytes, found " + std::to_string(remaining()));
        std::memcpy(out, bytes_.data() + offset_, count * 8);
        offset_ += count * 8;
    }

    void expect_end() {
        if (remaining() != 0)
            fail(std::to_string(remaining()) + " trailing bytes after the payload");
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw FormatError(path_ + ": " + why + " (at byte offset " + std::to_string(offset_) + ")");
    }

private:
    void need(std::size_t n, const char* what) {
        if (remaining() < n)
            fail(std::string("truncated while reading ") + what + ": expected " + std::to_string(n) +
                 " bytes, found " + std::to_string(remaining()));
    }

    std::string path_;
    std::vector<char> bytes_;
    std::size_t offset_ = 0;
};

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open for reading");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

class ByteWriter {
public:
    explicit ByteWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw FormatError(path.string() + ": cannot open for writing");
    }

    void magic(const char* m) { out_.write(m, 4); }
    void u8(std::uint8_t v) { out_.write(reinterpret_cast<const char*>(&v), 1); }
    void u32(std::uint32_t v) { out_.write(reinterpret_cast<const char*>(&v), 4); }
    void f64_block(const double* v, std::size_t count) {
        out_.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(count * 8));
    }

private:
    std::ofstream out_;
};

}  // namespace

void write_tensor(const std::filesystem::path& path, const DenseTensor& t) {
    ByteWriter w(path);
    w.magic("TNSR");
    w.u8(1);
    w.u32(static_cast<std::uint32_t>(t.order()));
    for (std::size_t d : t.dims()) w.u32(static_cast<std::uint32_t>(d));
    w.f64_block(t.data().data(), t.size());
}

DenseTensor read_tensor(const std::filesystem::path& path) {
    ByteReader r(path, slurp(path));
    r.expect_magic("TNSR");
    const std::uint8_t version = r.read_u8("version");
    if (version != 1) r.fail("unknown TNSR version " + std::to_string(version));
    const std::uint32_t order = r.read_u32("order");
    std::vector<std::size_t> dims(order);
    for (auto& d : dims) {
        d = r.read_u32("mode size");
        if (d == 0) r.fail("zero mode size");
    }
    std::vector<double> data(dims_product(dims));
    r.read_f64_block(data.data(), data.size(), "tensor payload");
    r.expect_end();
    return DenseTensor(std::move(dims), std::move(data));
}

void write_network(const std::filesystem::path& path, const TnState& state) {
    state.validate();
    ByteWriter w(path);
    w.magic("TNET");
    w.u8(1);
    const std::size_t p = state.node_count();
    w.u32(static_cast<std::uint32_t>(p));
    for (std::size_t d : state.dims) w.u32(static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) w.u32(static_cast<std::uint32_t>(state.ranks.rank(i, j)));
    for (const DenseTensor& core : state.cores) w.f64_block(core.data().data(), core.size());
}

TnState read_network(const std::filesystem::path& path) {
    ByteReader r(path, slurp(path));
    r.expect_magic("TNET");
    const std::uint8_t version = r.read_u8("version");
    if (version != 1) r.fail("unknown TNET version " + std::to_string(version));
    const std::uint32_t p = r.read_u32("node count");
    if (p == 0) r.fail("empty network");

    TnState state{RankMatrix(p), std::vector<std::size_t>(p), {}, std::nullopt};
    for (auto& d : state.dims) {
        d = r.read_u32("dangling size");
        if (d == 0) r.fail("zero dangling size");
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const std::uint32_t rank = r.read_u32("edge rank");
            if (rank == 0) r.fail("zero edge rank");
            state.ranks.set_rank(i, j, rank);
        }
    }
    state.cores.reserve(p);
    for (std::size_t k = 0; k < p; ++k) {
        std::vector<std::size_t> core_dims = state.core_dims(k);
        std::vector<double> data(dims_product(core_dims));
        r.read_f64_block(data.data(), data.size(), "core payload");
        state.cores.push_back(DenseTensor(std::move(core_dims), std::move(data)));
    }
    r.expect_end();
    state.validate();
    return state;
}

std::string termination_name(Termination status) {
    switch (status) {
        case Termination::threshold_reached: return "threshold-reached";
        case Termination::budget_exhausted: return "budget-exhausted";
        case Termination::max_iterations_reached: return "max-iterations";
    }
    return "unknown";
}

ExperimentReport make_report(std::vector<std::pair<std::string, std::string>> config,
                             const GreedyResult& result) {
    ExperimentReport report;
    report.config = std::move(config);
    for (const TraceRow& row : result.trace.rows) {
        ReportRow out;
        out.iteration = row.iteration;
        if (row.edge) out.edge = std::to_string(row.edge->i) + "-" + std::to_string(row.edge->j);
        out.loss = row.loss;
        out.rel_error = row.metric;
        out.params = row.params;
        out.wall_ms = row.wall_ms;
        if (!row.splits.empty()) {
            std::ostringstream s;
            for (std::size_t e = 0; e < row.splits.size(); ++e) {
                if (e) s << ';';
                s << row.splits[e].node << '>' << row.splits[e].new_node << ':' << row.splits[e].rank;
            }
            out.splits = s.str();
        }
        if (row.test_rse) out.test_rse = fmt_double(*row.test_rse);
        out.structure = row.structure;
        report.rows.push_back(std::move(out));
    }
    report.final_edges = edge_list(result.state);
    report.status = termination_name(result.trace.status);
    return report;
}

void write_report(const std::filesystem::path& path, const ExperimentReport& report) {
    std::ofstream out(path);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out << "# tngreedy report 1\n";
    for (const auto& [key, value] : report.config) out << "config " << key << '=' << value << '\n';
    out << "columns iter edge loss rel_error params wall_ms splits test_rse structure\n";
    for (const ReportRow& row : report.rows) {
        out << "row " << row.iteration << ' ' << row.edge << ' ' << fmt_double(row.loss) << ' '
            << fmt_double(row.rel_error) << ' ' << row.params << ' ' << fmt_double(row.wall_ms)
            << ' ' << row.splits << ' ' << row.test_rse << ' ' << row.structure << '\n';
    }
    for (const auto& [i, j, rank] : report.final_edges)
        out << "edge " << i << ' ' << j << ' ' << rank << '\n';
    out << "status " << report.status << '\n';
}

ExperimentReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string() + ": cannot open for reading");
    std::string line;
    if (!std::getline(in, line) || line != "# tngreedy report 1")
        throw FormatError(path.string() + ": missing report header line");

    ExperimentReport report;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream s(line);
        std::string tag;
        s >> tag;
        if (tag == "config") {
            std::string rest;
            std::getline(s, rest);
            if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
            const std::size_t eq = rest.find('=');
            if (eq == std::string::npos)
                throw FormatError(path.string() + ": malformed config entry on line " +
                                  std::to_string(line_no));
            report.config.emplace_back(rest.substr(0, eq), rest.substr(eq + 1));
        } else if (tag == "columns") {
            continue;
        } else if (tag == "row") {
            ReportRow row;
            s >> row.iteration >> row.edge >> row.loss >> row.rel_error >> row.params >>
                row.wall_ms >> row.splits >> row.test_rse >> row.structure;
            if (!s)
                throw FormatError(path.string() + ": malformed row on line " + std::to_string(line_no));
            report.rows.push_back(std::move(row));
        } else if (tag == "edge") {
            std::size_t i, j, rank;
            s >> i >> j >> rank;
            if (!s)
                throw FormatError(path.string() + ": malformed edge on line " + std::to_string(line_no));
            report.final_edges.emplace_back(i, j, rank);
        } else if (tag == "status") {
            s >> report.status;
        } else {
            throw FormatError(path.string() + ": unknown line tag '" + tag + "' on line " +
                              std::to_string(line_no));
        }
    }
    return report;
}

bool same_trace(const ExperimentReport& a, const ExperimentReport& b) {
    if (a.config != b.config || a.status != b.status || a.final_edges != b.final_edges ||
        a.rows.size() != b.rows.size())
        return false;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        const ReportRow& x = a.rows[r];
        const ReportRow& y = b.rows[r];
        if (x.iteration != y.iteration || x.edge != y.edge || x.loss != y.loss ||
            x.rel_error != y.rel_error || x.params != y.params || x.splits != y.splits ||
            x.test_rse != y.test_rse || x.structure != y.structure)
            return false;
    }
    return true;
}

}  // namespace tn
