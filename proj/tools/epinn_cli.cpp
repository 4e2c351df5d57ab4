// Command-line front end for the experiment runner. Talks to the library
// exclusively through the C API.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "epinn/epinn_c.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitDiverged = 2;

struct ConfigDeleter {
    void operator()(epinn_config* c) const { epinn_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<epinn_config, ConfigDeleter>;

struct StringDeleter {
    void operator()(char* s) const { epinn_free_string(s); }
};
using StringPtr = std::unique_ptr<char, StringDeleter>;

struct CommonFlags {
    std::string config_path;
    std::string scale;
    std::string out;
    long long seed = -1;
    bool seed_set = false;
    std::vector<std::string> sets;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--scale", flags.scale, "schedule preset (desk or paper)")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--seed", flags.seed, "RNG seed")->each([&](const std::string&) {
        flags.seed_set = true;
    });
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--set", flags.sets, "config override key=value (repeatable)");
}

int report_error(const char* verb, epinn_status st) {
    std::fprintf(stderr, "%s failed: %s\n", verb, epinn_last_error());
    return st == EPINN_ERR_DIVERGED ? kExitDiverged : kExitValidation;
}

// Builds the effective config: file, then --scale/--seed/--out, then --set
// overrides in order.
int build_config(const CommonFlags& flags, ConfigPtr& cfg) {
    epinn_config* raw = nullptr;
    epinn_status st = flags.config_path.empty()
                          ? epinn_config_create(&raw)
                          : epinn_config_load(flags.config_path.c_str(), &raw);
    if (st != EPINN_OK) return report_error("loading config", st);
    cfg.reset(raw);

    auto set = [&](const char* key, const std::string& value) -> int {
        const epinn_status s = epinn_config_set(cfg.get(), key, value.c_str());
        if (s != EPINN_OK) return report_error("applying override", s);
        return kExitOk;
    };
    if (!flags.scale.empty())
        if (int rc = set("scale", "\"" + flags.scale + "\"")) return rc;
    if (flags.seed_set)
        if (int rc = set("seed", std::to_string(flags.seed))) return rc;
    if (!flags.out.empty()) {
        const std::string quoted = json(flags.out).dump();
        if (int rc = set("out_dir", quoted)) return rc;
    }
    for (const std::string& kv : flags.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "--set expects key=value, got '%s'\n", kv.c_str());
            return kExitValidation;
        }
        const epinn_status s =
            epinn_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (s != EPINN_OK) return report_error("applying --set", s);
    }
    return kExitOk;
}

void print_metrics_line(const json& rec) {
    if (!rec.contains("metrics")) return;
    const json& m = rec["metrics"];
    std::printf("  sharpness %.6g  coverage %.4g  rmse %.6g  time %.1fs (epinet %.1fs)\n",
                m.value("sharpness", 0.0), m.value("coverage", 0.0), m.value("rmse", 0.0),
                m.value("time_s", 0.0), m.value("time_epinet_s", 0.0));
    if (rec.contains("kappa"))
        std::printf("  kappa mean %.6g  std %.6g\n", rec["kappa"].value("mean", 0.0),
                    rec["kappa"].value("std", 0.0));
}

int cmd_run(const CommonFlags& flags) {
    ConfigPtr cfg;
    if (int rc = build_config(flags, cfg)) return rc;

    char* raw = nullptr;
    const epinn_status st = epinn_run(cfg.get(), &raw);
    StringPtr record(raw);
    if (record) {
        const json rec = json::parse(record.get(), nullptr, false);
        if (!rec.is_discarded()) {
            const std::string out_dir = rec["config"].value("out_dir", std::string("?"));
            std::printf("run %s: %s\n", rec.value("status", "?").c_str(), out_dir.c_str());
            print_metrics_line(rec);
            if (rec.contains("error"))
                std::fprintf(stderr, "error: %s\n", rec["error"].get<std::string>().c_str());
        }
    }
    if (st == EPINN_OK) return kExitOk;
    if (!record) return report_error("run", st);
    return st == EPINN_ERR_DIVERGED ? kExitDiverged : kExitValidation;
}

int cmd_sweep(const CommonFlags& flags) {
    ConfigPtr cfg;
    if (int rc = build_config(flags, cfg)) return rc;

    char* raw = nullptr;
    const epinn_status st = epinn_sweep(cfg.get(), &raw);
    StringPtr result(raw);
    if (st != EPINN_OK) return report_error("sweep", st);

    const json res = json::parse(result.get(), nullptr, false);
    bool any_failed = false;
    if (!res.is_discarded()) {
        any_failed = res.value("any_failed", false);
        std::printf("sweep: %zu runs, aggregate %s\n", res["records"].size(),
                    res.value("aggregate_csv", std::string("?")).c_str());
        for (const json& rec : res["records"]) {
            const std::string out_dir = rec["config"].value("out_dir", std::string("?"));
            std::printf("run %s: %s\n", rec.value("status", "?").c_str(), out_dir.c_str());
            print_metrics_line(rec);
        }
    }
    return any_failed ? kExitDiverged : kExitOk;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out) {
    std::vector<const char*> ptrs;
    ptrs.reserve(dirs.size());
    for (const auto& d : dirs) ptrs.push_back(d.c_str());

    char* raw = nullptr;
    const epinn_status st =
        epinn_report(ptrs.data(), ptrs.size(), out.empty() ? "." : out.c_str(), &raw);
    StringPtr result(raw);
    if (st != EPINN_OK) return report_error("report", st);

    const json res = json::parse(result.get(), nullptr, false);
    if (!res.is_discarded()) {
        std::printf("report: %s\n", res.value("report_csv", std::string("?")).c_str());
        if (res.contains("kappa_csv"))
            std::printf("kappa table: %s\n", res["kappa_csv"].get<std::string>().c_str());
        for (const json& b : res["band_files"])
            std::printf("bands: %s\n", b.get<std::string>().c_str());
    }
    return kExitOk;
}

int cmd_check(const std::string& run_dir) {
    char* raw = nullptr;
    const epinn_status st = epinn_check(run_dir.empty() ? nullptr : run_dir.c_str(), &raw);
    StringPtr result(raw);
    if (st != EPINN_OK) return report_error("check", st);

    const json res = json::parse(result.get(), nullptr, false);
    bool all_pass = true;
    if (!res.is_discarded()) {
        for (const json& r : res) {
            const bool pass = r.value("pass", false);
            all_pass = all_pass && pass;
            std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL",
                        r.value("name", std::string("?")).c_str(),
                        r.value("detail", std::string()).c_str());
        }
    }
    return all_pass ? kExitOk : kExitValidation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uncertainty-aware PINN experiment runner"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "execute one experiment");
    add_common_flags(run_cmd, run_flags);

    CommonFlags sweep_flags;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "execute an ablation sweep");
    add_common_flags(sweep_cmd, sweep_flags);

    std::vector<std::string> report_dirs;
    std::string report_out;
    CLI::App* report_cmd = app.add_subcommand("report", "consolidate completed runs");
    report_cmd->add_option("dirs", report_dirs, "run directories")->required();
    report_cmd->add_option("--out", report_out, "output directory (default .)");

    std::string check_dir;
    CLI::App* check_cmd = app.add_subcommand("check", "run the invariant/oracle suites");
    check_cmd->add_option("--out", check_dir, "also validate this run directory");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags);
    if (report_cmd->parsed()) return cmd_report(report_dirs, report_out);
    if (check_cmd->parsed()) return cmd_check(check_dir);
    return kExitValidation;
}
