#include "epinn/epinn_c.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/io.hpp"
#include "core/runner.hpp"

using nlohmann::json;

struct epinn_config {
    json j = json::object();
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

epinn_status fail(epinn_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
epinn_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const epinn::ConfigError& e) {
        return fail(EPINN_ERR_CONFIG, e.what());
    } catch (const epinn::UsageError& e) {
        return fail(EPINN_ERR_USAGE, e.what());
    } catch (const epinn::DivergedError& e) {
        return fail(EPINN_ERR_DIVERGED, e.what());
    } catch (const epinn::IoError& e) {
        return fail(EPINN_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(EPINN_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(EPINN_ERR_INTERNAL, "unknown error");
    }
}

// Dotted-key assignment; intermediate objects are created as needed.
void set_path(json& root, const std::string& key, json value) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (part.empty()) throw epinn::ConfigError("invalid config key '" + key + "'");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        json& next = (*node)[part];
        if (!next.is_object()) next = json::object();
        node = &next;
        start = dot + 1;
    }
}

} // namespace

extern "C" {

epinn_status epinn_config_create(epinn_config** out) {
    return guarded([&]() -> epinn_status {
        if (!out) return fail(EPINN_ERR_INVALID_ARGUMENT, "out must not be NULL");
        *out = new epinn_config();
        return EPINN_OK;
    });
}

epinn_status epinn_config_load(const char* path, epinn_config** out) {
    return guarded([&]() -> epinn_status {
        if (!path || !out)
            return fail(EPINN_ERR_INVALID_ARGUMENT, "path and out must not be NULL");
        const std::string text = epinn::io::read_text(path);
        json j = json::parse(text, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            return fail(EPINN_ERR_CONFIG, std::string(path) + " is not a JSON object");
        auto cfg = new epinn_config();
        cfg->j = std::move(j);
        *out = cfg;
        return EPINN_OK;
    });
}

epinn_status epinn_config_set(epinn_config* cfg, const char* key, const char* value) {
    return guarded([&]() -> epinn_status {
        if (!cfg || !key || !value)
            return fail(EPINN_ERR_INVALID_ARGUMENT, "cfg, key and value must not be NULL");
        json lit = json::parse(value, nullptr, false);
        if (lit.is_discarded()) lit = std::string(value);
        set_path(cfg->j, key, std::move(lit));
        return EPINN_OK;
    });
}

epinn_status epinn_config_serialize(const epinn_config* cfg, char** json_out) {
    return guarded([&]() -> epinn_status {
        if (!cfg || !json_out)
            return fail(EPINN_ERR_INVALID_ARGUMENT, "cfg and json_out must not be NULL");
        const epinn::run::ExperimentConfig parsed =
            epinn::run::config_from_json_text(cfg->j.dump());
        *json_out = dup_string(epinn::run::config_to_json_text(parsed));
        return *json_out ? EPINN_OK : fail(EPINN_ERR_INTERNAL, "allocation failed");
    });
}

void epinn_config_destroy(epinn_config* cfg) { delete cfg; }

epinn_status epinn_run(const epinn_config* cfg, char** record_json_out) {
    return guarded([&]() -> epinn_status {
        if (!cfg || !record_json_out)
            return fail(EPINN_ERR_INVALID_ARGUMENT, "cfg and record_json_out must not be NULL");
        const epinn::run::ExperimentConfig parsed =
            epinn::run::config_from_json_text(cfg->j.dump());
        const epinn::run::RunRecord rec = epinn::run::run(parsed);
        *record_json_out = dup_string(epinn::run::record_to_json_text(rec));
        if (!*record_json_out) return fail(EPINN_ERR_INTERNAL, "allocation failed");
        if (rec.status != "ok") return fail(EPINN_ERR_DIVERGED, rec.error);
        return EPINN_OK;
    });
}

epinn_status epinn_sweep(const epinn_config* cfg, char** records_json_out) {
    return guarded([&]() -> epinn_status {
        if (!cfg || !records_json_out)
            return fail(EPINN_ERR_INVALID_ARGUMENT, "cfg and records_json_out must not be NULL");
        const epinn::run::SweepSpec spec =
            epinn::run::sweep_spec_from_json_text(cfg->j.dump());
        const epinn::run::SweepResult res = epinn::run::sweep(spec);
        json out;
        out["aggregate_csv"] = res.aggregate_csv;
        out["any_failed"] = res.any_failed;
        out["records"] = json::array();
        for (const auto& rec : res.records)
            out["records"].push_back(json::parse(epinn::run::record_to_json_text(rec)));
        *records_json_out = dup_string(out.dump(2) + "\n");
        return *records_json_out ? EPINN_OK : fail(EPINN_ERR_INTERNAL, "allocation failed");
    });
}

epinn_status epinn_report(const char* const* run_dirs, size_t n_dirs, const char* out_dir,
                          char** report_json_out) {
    return guarded([&]() -> epinn_status {
        if ((!run_dirs && n_dirs > 0) || !out_dir || !report_json_out)
            return fail(EPINN_ERR_INVALID_ARGUMENT,
                        "run_dirs, out_dir and report_json_out must not be NULL");
        std::vector<std::string> dirs;
        dirs.reserve(n_dirs);
        for (size_t i = 0; i < n_dirs; ++i) {
            if (!run_dirs[i])
                return fail(EPINN_ERR_INVALID_ARGUMENT, "run_dirs entries must not be NULL");
            dirs.emplace_back(run_dirs[i]);
        }
        const epinn::run::ReportResult res = epinn::run::report(dirs, out_dir);
        json out;
        out["report_csv"] = res.report_csv;
        if (!res.kappa_csv.empty()) out["kappa_csv"] = res.kappa_csv;
        out["band_files"] = res.band_files;
        *report_json_out = dup_string(out.dump(2) + "\n");
        return *report_json_out ? EPINN_OK : fail(EPINN_ERR_INTERNAL, "allocation failed");
    });
}

epinn_status epinn_check(const char* run_dir, char** results_json_out) {
    return guarded([&]() -> epinn_status {
        if (!results_json_out)
            return fail(EPINN_ERR_INVALID_ARGUMENT, "results_json_out must not be NULL");
        const std::vector<epinn::run::CheckResult> results =
            epinn::run::check(run_dir ? run_dir : std::string());
        json out = json::array();
        for (const auto& r : results)
            out.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        *results_json_out = dup_string(out.dump(2) + "\n");
        return *results_json_out ? EPINN_OK : fail(EPINN_ERR_INTERNAL, "allocation failed");
    });
}

const char* epinn_last_error(void) { return g_last_error.c_str(); }

void epinn_free_string(char* s) { std::free(s); }

} // extern "C"
