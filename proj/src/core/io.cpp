#include "io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace epinn::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

const std::vector<std::string>& csv_columns(CsvKind kind) {
    static const std::vector<std::string> training_log{
        "epoch", "L_total", "L_data", "L_pde", "L_bc", "L_kappa", "wall_seconds"};
    static const std::vector<std::string> metrics{
        "rho", "method", "sharpness", "coverage", "rmse", "time_s", "time_epinet_s"};
    static const std::vector<std::string> kappa{
        "rho", "method", "kappa_mean", "kappa_std", "time_s"};
    static const std::vector<std::string> kappa_histogram{"bin_left", "bin_right", "count"};
    static const std::vector<std::string> prediction_1d{"x", "u_exact", "mu", "sigma"};
    static const std::vector<std::string> prediction_2d_y{"x", "y", "u_exact", "mu", "sigma"};
    static const std::vector<std::string> prediction_2d_t{"x", "t", "u_exact", "mu", "sigma"};
    static const std::vector<std::string> bands{
        "x", "u_exact", "mu", "mu_minus_2sigma", "mu_plus_2sigma"};
    static const std::vector<std::string> sweep{
        "axis", "value", "sharpness", "coverage", "rmse", "time_s", "time_epinet_s", "status"};
    static const std::vector<std::string> report{
        "problem", "rho", "method", "sharpness", "coverage", "rmse", "time_s", "time_epinet_s"};
    switch (kind) {
        case CsvKind::training_log: return training_log;
        case CsvKind::metrics: return metrics;
        case CsvKind::kappa: return kappa;
        case CsvKind::kappa_histogram: return kappa_histogram;
        case CsvKind::prediction_1d: return prediction_1d;
        case CsvKind::prediction_2d_y: return prediction_2d_y;
        case CsvKind::prediction_2d_t: return prediction_2d_t;
        case CsvKind::bands: return bands;
        case CsvKind::sweep: return sweep;
        case CsvKind::report: return report;
    }
    throw UsageError("csv_columns: unknown kind");
}

const char* csv_kind_name(CsvKind kind) {
    switch (kind) {
        case CsvKind::training_log: return "training_log";
        case CsvKind::metrics: return "metrics";
        case CsvKind::kappa: return "kappa";
        case CsvKind::kappa_histogram: return "kappa_histogram";
        case CsvKind::prediction_1d: return "prediction_1d";
        case CsvKind::prediction_2d_y: return "prediction_2d_y";
        case CsvKind::prediction_2d_t: return "prediction_2d_t";
        case CsvKind::bands: return "bands";
        case CsvKind::sweep: return "sweep";
        case CsvKind::report: return "report";
    }
    throw UsageError("csv_kind_name: unknown kind");
}

std::string csv_cell(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string csv_cell(long v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, CsvKind kind,
               const std::vector<std::vector<std::string>>& rows) {
    const auto& cols = csv_columns(kind);
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += ',';
        out += cols[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        if (row.size() != cols.size())
            throw UsageError("write_csv: row arity does not match schema " +
                             std::string(csv_kind_name(kind)));
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    write_text(path, out);
}

CsvFile read_csv(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    CsvFile file;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (header) {
            file.columns = std::move(cells);
            header = false;
        } else {
            file.rows.push_back(std::move(cells));
        }
    }
    if (file.columns.empty()) throw IoError("empty or header-less csv: " + path.string());
    return file;
}

void require_columns(const CsvFile& file, CsvKind kind, const std::filesystem::path& path) {
    for (const auto& col : csv_columns(kind)) {
        bool found = false;
        for (const auto& have : file.columns)
            if (have == col) {
                found = true;
                break;
            }
        if (!found)
            throw ConfigError("schema error: " + path.string() + " is missing column '" + col +
                              "' required by schema " + csv_kind_name(kind));
    }
}

std::size_t column_index(const CsvFile& file, const std::string& name,
                         const std::filesystem::path& path) {
    for (std::size_t i = 0; i < file.columns.size(); ++i)
        if (file.columns[i] == name) return i;
    throw ConfigError("schema error: " + path.string() + " is missing column '" + name + "'");
}

// ---------------------------------------------------------------------------
// Binary artifacts
// ---------------------------------------------------------------------------

namespace {

void write_blob(const std::filesystem::path& path, const json& header,
                std::span<const double> payload) {
    const std::string head = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + path.string());
    const std::uint64_t head_len = head.size();
    const std::uint64_t count = payload.size();
    out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path.string());
}

json read_blob(const std::filesystem::path& path, std::vector<double>& payload) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::uint64_t head_len = 0;
    in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
    if (!in || head_len > (1u << 20)) throw IoError("corrupt header in " + path.string());
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in) throw IoError("corrupt payload prefix in " + path.string());
    payload.resize(count);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw IoError("truncated payload in " + path.string());
    json header = json::parse(head, nullptr, false);
    if (header.is_discarded()) throw IoError("unparseable header in " + path.string());
    return header;
}

json arch_to_json(const ad::Architecture& arch) {
    return json{{"input_dim", arch.input_dim}, {"hidden", arch.hidden},
                {"output_dim", arch.output_dim}};
}

ad::Architecture arch_from_json(const json& j, const std::filesystem::path& path) {
    if (!j.is_object() || !j.contains("input_dim") || !j.contains("hidden") ||
        !j.contains("output_dim"))
        throw IoError("missing architecture fields in " + path.string());
    ad::Architecture arch;
    arch.input_dim = j.at("input_dim").get<int>();
    arch.hidden = j.at("hidden").get<std::vector<int>>();
    arch.output_dim = j.at("output_dim").get<int>();
    return arch;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ad::Architecture& arch,
                     std::span<const double> params, std::uint64_t seed, long epochs) {
    if (params.size() != ad::param_count(arch))
        throw UsageError("save_checkpoint: parameter vector does not match architecture");
    json header{{"kind", "checkpoint"},
                {"arch", arch_to_json(arch)},
                {"seed", seed},
                {"epochs", epochs}};
    write_blob(path, header, params);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Checkpoint ckpt;
    const json header = read_blob(path, ckpt.params);
    if (header.value("kind", "") != std::string("checkpoint"))
        throw IoError("not a checkpoint file: " + path.string());
    ckpt.arch = arch_from_json(header.at("arch"), path);
    ckpt.seed = header.value("seed", std::uint64_t{0});
    ckpt.epochs = header.value("epochs", 0L);
    if (ckpt.params.size() != ad::param_count(ckpt.arch))
        throw IoError("checkpoint payload does not match architecture: " + path.string());
    return ckpt;
}

void save_chain(const std::filesystem::path& path, const bayes::Chain& chain,
                const bayes::HmcConfig& cfg) {
    json header{{"kind", "chain"},
                {"config",
                 {{"eps", cfg.eps},
                  {"leapfrog", cfg.leapfrog},
                  {"burn_in", cfg.burn_in},
                  {"total", cfg.total},
                  {"seed", cfg.seed}}},
                {"dim", chain.dim},
                {"acceptance", chain.acceptance},
                {"acceptance_burnin", chain.acceptance_burnin},
                {"rejected_nonfinite", chain.rejected_nonfinite},
                {"median_abs_dH", chain.median_abs_dH},
                {"low_acceptance_warning", chain.low_acceptance_warning},
                {"has_kappa", chain.has_kappa}};
    write_blob(path, header, chain.samples);
}

ChainFile load_chain(const std::filesystem::path& path) {
    ChainFile file;
    const json header = read_blob(path, file.chain.samples);
    if (header.value("kind", "") != std::string("chain"))
        throw IoError("not a chain file: " + path.string());
    file.chain.dim = header.value("dim", std::size_t{0});
    file.chain.acceptance = header.value("acceptance", 0.0);
    file.chain.acceptance_burnin = header.value("acceptance_burnin", 0.0);
    file.chain.rejected_nonfinite = header.value("rejected_nonfinite", 0L);
    file.chain.median_abs_dH = header.value("median_abs_dH", 0.0);
    file.chain.low_acceptance_warning = header.value("low_acceptance_warning", false);
    file.chain.has_kappa = header.value("has_kappa", false);
    if (file.chain.dim == 0 || file.chain.samples.size() % file.chain.dim != 0)
        throw IoError("chain payload does not match dimension: " + path.string());
    const json& cfg = header.at("config");
    file.config.eps = cfg.value("eps", 0.0);
    file.config.leapfrog = cfg.value("leapfrog", 0);
    file.config.burn_in = cfg.value("burn_in", 0L);
    file.config.total = cfg.value("total", 0L);
    file.config.seed = cfg.value("seed", std::uint64_t{0});
    return file;
}

// ---------------------------------------------------------------------------
// Text
// ---------------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace epinn::io
