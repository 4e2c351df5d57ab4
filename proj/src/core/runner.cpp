#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>

#include <json.hpp>

#include "errors.hpp"
#include "io.hpp"
#include "kappa.hpp"
#include "models.hpp"
#include "pde.hpp"
#include "predict.hpp"

namespace epinn::run {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string method_label(const ExperimentConfig& cfg) {
    if (cfg.method == "dropout") return "dropout-" + io::csv_cell(cfg.dropout_rate);
    return cfg.method;
}

io::CsvKind pred_kind(const pde::Problem& p) {
    if (p.dim() == 1) return io::CsvKind::prediction_1d;
    return p.time_dependent() ? io::CsvKind::prediction_2d_t : io::CsvKind::prediction_2d_y;
}

double parse_num(const std::string& cell, const fs::path& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("schema error: " + path.string() + " has non-numeric cell '" + cell +
                          "'");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Scales
// ---------------------------------------------------------------------------

Scale desk_scale() { return {30000, 5000, 2500, 500, 2000}; }
Scale paper_scale() { return {100000, 10000, 11000, 1000, 10000}; }

Scale named_scale(const std::string& name) {
    if (name == "desk") return desk_scale();
    if (name == "paper") return paper_scale();
    throw ConfigError("unknown scale '" + name + "' (expected desk or paper)");
}

void apply_scale(ExperimentConfig& cfg, const std::string& name) {
    const Scale s = named_scale(name);
    cfg.scale = name;
    cfg.base_epochs = s.base_epochs;
    cfg.epinet_epochs = s.epinet_epochs;
    cfg.hmc.total = s.hmc_total;
    cfg.hmc.burn_in = s.hmc_burn_in;
    cfg.M = s.M;
}

// ---------------------------------------------------------------------------
// Config validation and JSON glue
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    named_scale(scale);
    pde::find_problem(problem); // throws on unknown names
    if (method != "epinn" && method != "dropout" && method != "bpinn")
        throw ConfigError("unknown method '" + method + "' (expected epinn, dropout or bpinn)");
    if (!(rho == 0.0 || rho == 0.1 || rho == 0.3))
        throw ConfigError("rho must be one of 0.0, 0.1, 0.3");
    if (method == "dropout") {
        if (dropout_rate < 0.0)
            throw ConfigError("dropout method requires a dropout_rate");
        if (dropout_rate <= 0.0 || dropout_rate >= 1.0)
            throw ConfigError("dropout_rate must lie in (0, 1)");
    } else if (dropout_rate >= 0.0) {
        throw ConfigError("dropout_rate is only valid with the dropout method");
    }
    if (method == "bpinn" && rho <= 0.0)
        throw ConfigError("bpinn requires rho > 0 (no noise-free posterior runs)");
    if (base_epochs < 0 || epinet_epochs < 0) throw ConfigError("epoch counts must be >= 0");
    if (n_colloc < 0) throw ConfigError("n_colloc must be >= 0 (0 selects the problem default)");
    if (n_sensors < -1) throw ConfigError("n_sensors must be >= 0 or -1 for the default");
    if (epinet_hidden.empty()) throw ConfigError("epinet_hidden must name at least one layer");
    for (int h : epinet_hidden)
        if (h <= 0) throw ConfigError("epinet_hidden widths must be positive");
    if (method != "bpinn" && M < 2) throw ConfigError("M must be >= 2");
    if (method == "bpinn") {
        if (hmc.eps <= 0.0) throw ConfigError("hmc.eps must be > 0");
        if (hmc.leapfrog < 1) throw ConfigError("hmc.leapfrog must be >= 1");
        if (hmc.burn_in < 0 || hmc.burn_in >= hmc.total)
            throw ConfigError("hmc.burn_in must satisfy 0 <= burn_in < total");
    }
    if (divergence_threshold <= 0.0) throw ConfigError("divergence_threshold must be > 0");
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

namespace {

const json& jfield(const json& j, const char* key) { return j.at(key); }

double jnum(const json& j, const char* key) {
    const json& v = jfield(j, key);
    if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
}

long jlong(const json& j, const char* key) {
    const json& v = jfield(j, key);
    if (!v.is_number_integer()) {
        if (v.is_number() && v.get<double>() == std::floor(v.get<double>()))
            return static_cast<long>(v.get<double>());
        throw ConfigError(std::string("config key '") + key + "' must be an integer");
    }
    return v.get<long>();
}

std::string jstr(const json& j, const char* key) {
    const json& v = jfield(j, key);
    if (!v.is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON");
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    static const char* known[] = {"scale",         "problem",      "method",
                                  "rho",           "dropout_rate", "base_epochs",
                                  "epinet_epochs", "n_colloc",     "n_sensors",
                                  "epinet_hidden", "hmc",          "M",
                                  "divergence_threshold",          "seed",
                                  "out_dir",       "sweep"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown config key '" + it.key() + "'");
    }

    ExperimentConfig cfg;
    if (j.contains("scale")) apply_scale(cfg, jstr(j, "scale"));
    if (j.contains("problem")) cfg.problem = jstr(j, "problem");
    if (j.contains("method")) cfg.method = jstr(j, "method");
    if (j.contains("rho")) cfg.rho = jnum(j, "rho");
    if (j.contains("dropout_rate") && !j["dropout_rate"].is_null())
        cfg.dropout_rate = jnum(j, "dropout_rate");
    if (j.contains("base_epochs")) cfg.base_epochs = jlong(j, "base_epochs");
    if (j.contains("epinet_epochs")) cfg.epinet_epochs = jlong(j, "epinet_epochs");
    if (j.contains("n_colloc")) cfg.n_colloc = static_cast<int>(jlong(j, "n_colloc"));
    if (j.contains("n_sensors")) cfg.n_sensors = static_cast<int>(jlong(j, "n_sensors"));
    if (j.contains("epinet_hidden")) {
        const json& v = j["epinet_hidden"];
        if (!v.is_array() || v.empty())
            throw ConfigError("epinet_hidden must be a non-empty array of widths");
        cfg.epinet_hidden.clear();
        for (const auto& e : v) {
            if (!e.is_number_integer()) throw ConfigError("epinet_hidden entries must be integers");
            cfg.epinet_hidden.push_back(e.get<int>());
        }
    }
    if (j.contains("hmc")) {
        const json& h = j["hmc"];
        if (!h.is_object()) throw ConfigError("hmc must be an object");
        for (auto it = h.begin(); it != h.end(); ++it)
            if (it.key() != "eps" && it.key() != "leapfrog" && it.key() != "total" &&
                it.key() != "burn_in")
                throw ConfigError("unknown hmc key '" + it.key() + "'");
        if (h.contains("eps")) cfg.hmc.eps = jnum(h, "eps");
        if (h.contains("leapfrog")) cfg.hmc.leapfrog = static_cast<int>(jlong(h, "leapfrog"));
        if (h.contains("total")) cfg.hmc.total = jlong(h, "total");
        if (h.contains("burn_in")) cfg.hmc.burn_in = jlong(h, "burn_in");
    }
    if (j.contains("M")) cfg.M = jlong(j, "M");
    if (j.contains("divergence_threshold"))
        cfg.divergence_threshold = jnum(j, "divergence_threshold");
    if (j.contains("seed")) cfg.seed = static_cast<std::uint64_t>(jlong(j, "seed"));
    if (j.contains("out_dir")) cfg.out_dir = jstr(j, "out_dir");
    return cfg;
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
    json j;
    j["scale"] = cfg.scale;
    j["problem"] = cfg.problem;
    j["method"] = cfg.method;
    j["rho"] = cfg.rho;
    if (cfg.dropout_rate >= 0.0) j["dropout_rate"] = cfg.dropout_rate;
    j["base_epochs"] = cfg.base_epochs;
    j["epinet_epochs"] = cfg.epinet_epochs;
    j["n_colloc"] = cfg.n_colloc;
    j["n_sensors"] = cfg.n_sensors;
    j["epinet_hidden"] = cfg.epinet_hidden;
    j["hmc"] = {{"eps", cfg.hmc.eps},
                {"leapfrog", cfg.hmc.leapfrog},
                {"total", cfg.hmc.total},
                {"burn_in", cfg.hmc.burn_in}};
    j["M"] = cfg.M;
    j["divergence_threshold"] = cfg.divergence_threshold;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    return j.dump(2) + "\n";
}

SweepSpec sweep_spec_from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON");
    if (!j.is_object() || !j.contains("sweep"))
        throw ConfigError("sweep requires a \"sweep\" block ({\"axis\": ..., \"values\": [...]})");
    const json& s = j["sweep"];
    if (!s.is_object()) throw ConfigError("sweep block must be an object");
    for (auto it = s.begin(); it != s.end(); ++it)
        if (it.key() != "axis" && it.key() != "values")
            throw ConfigError("unknown sweep key '" + it.key() + "'");
    if (!s.contains("axis")) throw ConfigError("sweep block needs an \"axis\" key");

    SweepSpec spec;
    spec.axis = jstr(s, "axis");
    if (s.contains("values")) {
        const json& v = s["values"];
        if (!v.is_array()) throw ConfigError("sweep values must be an array");
        spec.use_default_grid = false;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError("sweep values must be numbers");
            spec.values.push_back(e.get<double>());
        }
    }
    spec.base = config_from_json_text(text);
    return spec;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

std::string record_to_json_text(const RunRecord& rec) {
    json j;
    j["config"] = json::parse(config_to_json_text(rec.config));
    j["status"] = rec.status;
    if (!rec.error.empty()) j["error"] = rec.error;
    if (rec.status == "ok") {
        j["metrics"] = {{"sharpness", rec.metrics.sharpness},
                        {"coverage", rec.metrics.coverage},
                        {"rmse", rec.metrics.rmse},
                        {"time_s", rec.metrics.time_s},
                        {"time_epinet_s", rec.metrics.time_epinet_s}};
        if (rec.kappa)
            j["kappa"] = {{"mean", rec.kappa->mean}, {"std", rec.kappa->std}};
    }
    json paths = json::object();
    auto put = [&](const char* key, const std::string& v) {
        if (!v.empty()) paths[key] = v;
    };
    put("metrics_csv", rec.metrics_csv);
    put("prediction_csv", rec.prediction_csv);
    put("training_log_csv", rec.training_log_csv);
    put("epinet_training_log_csv", rec.epinet_training_log_csv);
    put("checkpoint_base", rec.checkpoint_base);
    put("checkpoint_epinet", rec.checkpoint_epinet);
    put("chain_file", rec.chain_file);
    put("kappa_csv", rec.kappa_csv);
    put("kappa_histogram_csv", rec.kappa_histogram_csv);
    put("config_json", rec.config_json);
    put("record_json", rec.record_json);
    j["paths"] = paths;
    j["files"] = rec.files;
    return j.dump(2) + "\n";
}

RunRecord run(const ExperimentConfig& cfg) {
    cfg.validate();
    const pde::Problem& p = pde::find_problem(cfg.problem);
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);

    RunRecord rec;
    rec.config = cfg;
    rec.config_json = "config.json";
    io::write_text(dir / rec.config_json, config_to_json_text(cfg));
    rec.files.push_back(rec.config_json);

    pde::SampleSpec sspec;
    sspec.n_colloc = cfg.n_colloc;
    sspec.n_sensors = cfg.n_sensors;
    sspec.rho = cfg.rho;
    const pde::PointSet ps = pde::sample_points(p, sspec, cfg.seed);

    std::size_t n_grid = 0;
    const std::vector<double> grid = pde::validation_grid(p, &n_grid);
    std::vector<double> exact(n_grid);
    for (std::size_t i = 0; i < n_grid; ++i) exact[i] = p.exact(grid.data() + i * p.dim());

    const train::LossWeights weights;
    train::TrainOptions topt;
    topt.divergence_threshold = cfg.divergence_threshold;

    auto run_training = [&](models::TrainableModel& m, long epochs, Rng rng,
                            const std::string& name, std::string& rec_field) {
        std::vector<train::TrainLogRow> log_rows;
        train::TrainOptions o = topt;
        o.log_sink = &log_rows;
        auto flush = [&] {
            std::vector<std::vector<std::string>> cells;
            cells.reserve(log_rows.size());
            for (const auto& r : log_rows)
                cells.push_back({io::csv_cell(r.epoch), io::csv_cell(r.total),
                                 io::csv_cell(r.data), io::csv_cell(r.pde), io::csv_cell(r.bc),
                                 io::csv_cell(r.kappa), io::csv_cell(r.wall_seconds)});
            io::write_csv(dir / name, io::CsvKind::training_log, cells);
            rec_field = name;
            rec.files.push_back(name);
        };
        try {
            train::train(m, ps, weights, epochs, rng, o);
        } catch (...) {
            flush();
            throw;
        }
        flush();
    };

    auto save_ckpt = [&](const std::string& name, const ad::Architecture& arch,
                         std::span<const double> params, long epochs, std::string& rec_field) {
        io::save_checkpoint(dir / name, arch, params, cfg.seed, epochs);
        rec_field = name;
        rec.files.push_back(name);
    };

    uq::Ensemble ens;
    std::vector<double> kdraws;
    Timer total;
    try {
        if (cfg.method == "epinn") {
            const ad::Architecture base_arch = models::BaseModel::arch_for(p);
            Rng binit(cfg.seed, Stream::base_init);
            models::BaseModel base(p, ad::NetworkParams::xavier(base_arch, binit));
            run_training(base, cfg.base_epochs, Rng(cfg.seed, Stream::epistemic_index),
                         "training_log.csv", rec.training_log_csv);
            save_ckpt("checkpoint_base.bin", base_arch, base.net().flat(), cfg.base_epochs,
                      rec.checkpoint_base);

            models::EpinetConfig ecfg;
            ecfg.hidden = cfg.epinet_hidden;
            models::EpinetModel ep(p, base.net(), ecfg, cfg.seed);
            Timer epinet_timer;
            run_training(ep, cfg.epinet_epochs, Rng(cfg.seed, Stream::epistemic_index),
                         "epinet_training_log.csv", rec.epinet_training_log_csv);
            rec.metrics.time_epinet_s = epinet_timer.elapsed();
            save_ckpt("checkpoint_epinet.bin", ep.learnable().arch(), ep.learnable().flat(),
                      cfg.epinet_epochs, rec.checkpoint_epinet);

            uq::EpinnArtifacts art;
            art.base = &base.net();
            art.learnable = &ep.learnable();
            art.prior = &ep.prior();
            art.alpha = ecfg.alpha;
            art.d_z = ecfg.d_z;
            ens = uq::predict_epinn(p, art, grid, n_grid, cfg.M, cfg.seed);
            if (p.inverse())
                kdraws = inverse::kappa_draws_epinn(p, art, ps.colloc, ps.n_colloc(), cfg.M,
                                                    cfg.seed);
        } else if (cfg.method == "dropout") {
            const ad::Architecture arch = models::BaseModel::arch_for(p);
            Rng binit(cfg.seed, Stream::base_init);
            // Monte Carlo dropout is applied at prediction only. Training with
            // masks active drives this composite loss into a mask-robust
            // near-zero solution instead of a fit, at any mask granularity,
            // learning rate, or epoch budget we tried; mask-free training
            // followed by stochastic prediction is what actually yields the
            // wide, rate-ordered bands the method is used for.
            models::BaseModel model(p, ad::NetworkParams::xavier(arch, binit));
            run_training(model, cfg.base_epochs, Rng(cfg.seed, Stream::dropout_mask),
                         "training_log.csv", rec.training_log_csv);
            save_ckpt("checkpoint_base.bin", arch, model.net().flat(), cfg.base_epochs,
                      rec.checkpoint_base);

            ens = uq::predict_dropout(p, model.net(), cfg.dropout_rate, grid, n_grid, cfg.M,
                                      cfg.seed);
            if (p.inverse())
                kdraws = inverse::kappa_draws_dropout(p, model.net(), cfg.dropout_rate, ps.colloc,
                                                      ps.n_colloc(), cfg.M, cfg.seed);
        } else { // bpinn
            ad::Architecture arch = models::BaseModel::arch_for(p);
            // The posterior carries a single global latent; the network
            // itself keeps one output channel even for inverse problems.
            if (p.inverse()) arch.output_dim = 1;
            bayes::LikelihoodSpec lik;
            lik.sigma_u = ps.sigma_noise;
            bayes::PinnPosterior post(p, ps, lik, arch);
            bayes::HmcConfig hc = cfg.hmc;
            hc.seed = cfg.seed;
            const std::vector<double> init = post.initial_position(cfg.seed);
            bayes::Chain chain = bayes::sample(post, hc, init);
            chain.has_kappa = post.has_kappa();
            io::save_chain(dir / "chain.bin", chain, hc);
            rec.chain_file = "chain.bin";
            rec.files.push_back(rec.chain_file);

            ens = uq::predict_bpinn(p, chain, arch, grid, n_grid);
            if (p.inverse()) kdraws = inverse::kappa_draws_bpinn(chain, arch);
        }
    } catch (const DivergedError& e) {
        rec.status = "failed";
        rec.error = e.what();
        rec.record_json = "run_record.json";
        rec.files.push_back(rec.record_json);
        io::write_text(dir / rec.record_json, record_to_json_text(rec));
        return rec;
    }

    rec.metrics.sharpness = uq::sharpness(ens);
    rec.metrics.coverage = uq::coverage(ens, exact);
    rec.metrics.rmse = uq::rmse(ens, exact);
    if (p.inverse()) {
        const inverse::KappaSummary ksum = inverse::kappa_summarize(std::move(kdraws));
        rec.kappa = KappaResult{ksum.mean, ksum.std};

        std::vector<std::vector<std::string>> krow{
            {io::csv_cell(cfg.rho), method_label(cfg), io::csv_cell(ksum.mean),
             io::csv_cell(ksum.std), io::csv_cell(0.0)}};
        // time_s cell is patched below once the total is known
        const inverse::Histogram hist = inverse::histogram(ksum.draws);
        std::vector<std::vector<std::string>> hrows;
        hrows.reserve(hist.count.size());
        for (std::size_t b = 0; b < hist.count.size(); ++b)
            hrows.push_back({io::csv_cell(hist.bin_left[b]), io::csv_cell(hist.bin_right[b]),
                             io::csv_cell(hist.count[b])});
        rec.metrics.time_s = total.elapsed();
        krow[0][4] = io::csv_cell(rec.metrics.time_s);
        io::write_csv(dir / "kappa.csv", io::CsvKind::kappa, krow);
        rec.kappa_csv = "kappa.csv";
        rec.files.push_back(rec.kappa_csv);
        io::write_csv(dir / "kappa_histogram.csv", io::CsvKind::kappa_histogram, hrows);
        rec.kappa_histogram_csv = "kappa_histogram.csv";
        rec.files.push_back(rec.kappa_histogram_csv);
    } else {
        rec.metrics.time_s = total.elapsed();
    }

    // Prediction dump over the validation grid.
    {
        const int dim = p.dim();
        std::vector<std::vector<std::string>> rows;
        rows.reserve(n_grid);
        for (std::size_t i = 0; i < n_grid; ++i) {
            std::vector<std::string> row;
            row.reserve(static_cast<std::size_t>(dim) + 3);
            for (int d = 0; d < dim; ++d) row.push_back(io::csv_cell(grid[i * dim + d]));
            row.push_back(io::csv_cell(exact[i]));
            row.push_back(io::csv_cell(ens.mu[i]));
            row.push_back(io::csv_cell(std::sqrt(ens.var[i])));
            rows.push_back(std::move(row));
        }
        io::write_csv(dir / "prediction.csv", pred_kind(p), rows);
        rec.prediction_csv = "prediction.csv";
        rec.files.push_back(rec.prediction_csv);
    }

    // Metrics row.
    {
        std::vector<std::vector<std::string>> rows{
            {io::csv_cell(cfg.rho), method_label(cfg), io::csv_cell(rec.metrics.sharpness),
             io::csv_cell(rec.metrics.coverage), io::csv_cell(rec.metrics.rmse),
             io::csv_cell(rec.metrics.time_s), io::csv_cell(rec.metrics.time_epinet_s)}};
        io::write_csv(dir / "metrics.csv", io::CsvKind::metrics, rows);
        rec.metrics_csv = "metrics.csv";
        rec.files.push_back(rec.metrics_csv);
    }

    rec.record_json = "run_record.json";
    rec.files.push_back(rec.record_json);
    io::write_text(dir / rec.record_json, record_to_json_text(rec));
    return rec;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

std::vector<double> default_grid(const std::string& axis) {
    // Desk-scaled versions of the published ablation grids: epoch grids are
    // scaled by the desk/paper schedule ratio, the others are used as-is.
    if (axis == "n_colloc") return {20, 100, 500, 1000};
    if (axis == "epinet_width") return {4, 8, 16, 32, 64};
    if (axis == "epinet_epochs") return {5000, 50000, 500000};
    if (axis == "base_epochs") return {3000, 30000, 300000};
    if (axis == "rho") return {0.0, 0.1, 0.3};
    throw ConfigError("unknown sweep axis '" + axis +
                      "' (expected n_colloc, epinet_width, epinet_epochs, base_epochs or rho)");
}

namespace {

std::string axis_value_cell(const std::string& axis, double v) {
    if (axis == "rho") return io::csv_cell(v);
    return io::csv_cell(static_cast<long>(std::llround(v)));
}

void apply_axis(ExperimentConfig& cfg, const std::string& axis, double v) {
    if (axis == "n_colloc") {
        cfg.n_colloc = static_cast<int>(std::llround(v));
    } else if (axis == "epinet_width") {
        const int w = static_cast<int>(std::llround(v));
        // width ablation keeps the epinet at two hidden layers
        cfg.epinet_hidden = {w, w};
    } else if (axis == "epinet_epochs") {
        cfg.epinet_epochs = std::llround(v);
    } else if (axis == "base_epochs") {
        cfg.base_epochs = std::llround(v);
    } else if (axis == "rho") {
        cfg.rho = v;
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "'");
    }
}

} // namespace

SweepResult sweep(const SweepSpec& spec) {
    default_grid(spec.axis); // validates the axis name
    std::vector<double> values = spec.values;
    if (values.empty() && spec.use_default_grid) values = default_grid(spec.axis);

    const fs::path root(spec.base.out_dir);
    fs::create_directories(root);

    SweepResult out;
    std::vector<std::vector<std::string>> rows;
    for (double v : values) {
        const std::string vcell = axis_value_cell(spec.axis, v);
        ExperimentConfig c = spec.base;
        c.out_dir = (root / (spec.axis + "=" + vcell)).string();
        apply_axis(c, spec.axis, v);

        RunRecord rec;
        try {
            rec = run(c);
        } catch (const std::exception& e) {
            rec = RunRecord{};
            rec.config = c;
            rec.status = "failed";
            rec.error = e.what();
        }
        if (rec.status != "ok") out.any_failed = true;

        const bool ok = rec.status == "ok";
        rows.push_back({spec.axis, vcell,
                        ok ? io::csv_cell(rec.metrics.sharpness) : "nan",
                        ok ? io::csv_cell(rec.metrics.coverage) : "nan",
                        ok ? io::csv_cell(rec.metrics.rmse) : "nan",
                        ok ? io::csv_cell(rec.metrics.time_s) : "nan",
                        ok ? io::csv_cell(rec.metrics.time_epinet_s) : "nan", rec.status});
        out.records.push_back(std::move(rec));
    }
    io::write_csv(root / "sweep.csv", io::CsvKind::sweep, rows);
    out.aggregate_csv = "sweep.csv";
    return out;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

namespace {

std::string sanitize_name(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
            c = '_';
    return s.empty() ? std::string("run") : s;
}

std::string dir_basename(const fs::path& d) {
    fs::path p = d;
    if (p.filename().empty()) p = p.parent_path();
    return sanitize_name(p.filename().string());
}

} // namespace

ReportResult report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty())
        throw ConfigError("report requires at least one completed run directory");
    const fs::path out(out_dir);
    fs::create_directories(out);

    struct Row {
        double rho = 0.0;
        std::string method;
        std::vector<std::string> cells;
    };
    std::vector<Row> metric_rows, kappa_rows;
    ReportResult res;

    for (std::size_t i = 0; i < run_dirs.size(); ++i) {
        const fs::path d(run_dirs[i]);
        const ExperimentConfig cfg = config_from_json_text(io::read_text(d / "config.json"));
        const pde::Problem& p = pde::find_problem(cfg.problem);

        const fs::path mpath = d / "metrics.csv";
        const io::CsvFile m = io::read_csv(mpath);
        io::require_columns(m, io::CsvKind::metrics, mpath);
        const std::size_t c_rho = io::column_index(m, "rho", mpath);
        const std::size_t c_method = io::column_index(m, "method", mpath);
        for (const auto& r : m.rows) {
            Row row;
            row.rho = parse_num(r.at(c_rho), mpath);
            row.method = r.at(c_method);
            row.cells = {cfg.problem,
                         r.at(c_rho),
                         r.at(c_method),
                         r.at(io::column_index(m, "sharpness", mpath)),
                         r.at(io::column_index(m, "coverage", mpath)),
                         r.at(io::column_index(m, "rmse", mpath)),
                         r.at(io::column_index(m, "time_s", mpath)),
                         r.at(io::column_index(m, "time_epinet_s", mpath))};
            metric_rows.push_back(std::move(row));
        }

        const fs::path kpath = d / "kappa.csv";
        if (fs::exists(kpath)) {
            const io::CsvFile k = io::read_csv(kpath);
            io::require_columns(k, io::CsvKind::kappa, kpath);
            for (const auto& r : k.rows) {
                Row row;
                row.rho = parse_num(r.at(io::column_index(k, "rho", kpath)), kpath);
                row.method = r.at(io::column_index(k, "method", kpath));
                row.cells = {r.at(io::column_index(k, "rho", kpath)),
                             r.at(io::column_index(k, "method", kpath)),
                             r.at(io::column_index(k, "kappa_mean", kpath)),
                             r.at(io::column_index(k, "kappa_std", kpath)),
                             r.at(io::column_index(k, "time_s", kpath))};
                kappa_rows.push_back(std::move(row));
            }
        }

        // Band file: mean +/- 2 sigma against x. 2D runs are sliced along
        // the second axis (latest time / mid-domain y).
        const fs::path ppath = d / "prediction.csv";
        const io::CsvFile pred = io::read_csv(ppath);
        io::require_columns(pred, pred_kind(p), ppath);
        const std::size_t c_x = io::column_index(pred, "x", ppath);
        const std::size_t c_u = io::column_index(pred, "u_exact", ppath);
        const std::size_t c_mu = io::column_index(pred, "mu", ppath);
        const std::size_t c_sigma = io::column_index(pred, "sigma", ppath);

        std::vector<const std::vector<std::string>*> selected;
        if (p.dim() == 1) {
            for (const auto& r : pred.rows) selected.push_back(&r);
        } else {
            const std::string second = p.time_dependent() ? "t" : "y";
            const std::size_t c_2 = io::column_index(pred, second, ppath);
            std::string pick;
            double best = 0.0;
            const double mid = 0.5 * (p.lo()[1] + p.hi()[1]);
            for (const auto& r : pred.rows) {
                const double v = parse_num(r.at(c_2), ppath);
                const double score = p.time_dependent() ? v : -std::abs(v - mid);
                if (pick.empty() || score > best) {
                    pick = r.at(c_2);
                    best = score;
                }
            }
            for (const auto& r : pred.rows)
                if (r.at(c_2) == pick) selected.push_back(&r);
        }
        std::stable_sort(selected.begin(), selected.end(),
                         [&](const std::vector<std::string>* a, const std::vector<std::string>* b) {
                             return parse_num(a->at(c_x), ppath) < parse_num(b->at(c_x), ppath);
                         });

        std::vector<std::vector<std::string>> brows;
        brows.reserve(selected.size());
        for (const auto* r : selected) {
            const double mu = parse_num(r->at(c_mu), ppath);
            const double sigma = parse_num(r->at(c_sigma), ppath);
            brows.push_back({r->at(c_x), r->at(c_u), r->at(c_mu), io::csv_cell(mu - 2.0 * sigma),
                             io::csv_cell(mu + 2.0 * sigma)});
        }
        const std::string bname =
            "bands_" + std::to_string(i) + "_" + dir_basename(d) + ".csv";
        io::write_csv(out / bname, io::CsvKind::bands, brows);
        res.band_files.push_back(bname);
    }

    auto by_rho_method = [](const Row& a, const Row& b) {
        if (a.rho != b.rho) return a.rho < b.rho;
        return a.method < b.method;
    };
    std::stable_sort(metric_rows.begin(), metric_rows.end(), by_rho_method);
    std::stable_sort(kappa_rows.begin(), kappa_rows.end(), by_rho_method);

    std::vector<std::vector<std::string>> mcells;
    for (auto& r : metric_rows) mcells.push_back(std::move(r.cells));
    io::write_csv(out / "report.csv", io::CsvKind::report, mcells);
    res.report_csv = "report.csv";

    if (!kappa_rows.empty()) {
        std::vector<std::vector<std::string>> kcells;
        for (auto& r : kappa_rows) kcells.push_back(std::move(r.cells));
        io::write_csv(out / "report_kappa.csv", io::CsvKind::kappa, kcells);
        res.kappa_csv = "report_kappa.csv";
    }
    return res;
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

std::string fmt(double v) { return io::csv_cell(v); }

} // namespace

std::vector<CheckResult> check(const std::string& run_dir) {
    std::vector<CheckResult> out;
    auto add = [&](const std::string& name, auto&& fn) {
        CheckResult r;
        r.name = name;
        try {
            r.detail = fn();
            r.pass = true;
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = e.what();
        }
        out.push_back(std::move(r));
    };

    add("manufactured_residuals", [] {
        double worst = 0.0;
        for (const auto& name : pde::problem_names()) {
            const pde::Problem& p = pde::find_problem(name);
            Rng rng(99);
            for (int i = 0; i < 200; ++i) {
                double x[2];
                for (int d = 0; d < p.dim(); ++d) x[d] = rng.uniform(p.lo()[d], p.hi()[d]);
                pde::Jet jets[2];
                p.exact_jets(x, jets);
                const double r = pde::residual_at(p, jets, p.kappa_true(), x);
                worst = std::max(worst, std::abs(r));
            }
        }
        require(worst < 1e-8, "max |residual| = " + fmt(worst) + " >= 1e-8");
        return "max |residual| = " + fmt(worst) + " over 200 random points x 6 problems";
    });

    add("metric_oracles", [] {
        uq::EnsembleAccumulator acc(1);
        const double s0[] = {0.0};
        const double s1[] = {2.0};
        acc.add(std::span<const double>(s0, 1));
        acc.add(std::span<const double>(s1, 1));
        const uq::Ensemble two = acc.finish();
        require(two.mu[0] == 1.0 && two.var[0] == 1.0, "Welford {0,2} must give mu=1, var=1");

        uq::Ensemble e;
        e.n = 4;
        e.M = 2;
        e.mu = {0.0, 0.0, 0.0, 0.0};
        e.var = {0.0625, 0.0625, 0.0625, 0.0625}; // sigma = 0.25
        require(uq::sharpness(e) == 1.0, "sharpness of constant sigma=0.25 must be 1");

        uq::Ensemble c;
        c.n = 2;
        c.M = 2;
        c.mu = {0.0, 0.0};
        c.var = {1.0, 1.0};
        const std::vector<double> inside{0.1, 0.2}, outside{10.0, 12.0}, half{0.1, 12.0};
        require(uq::coverage(c, inside) == 1.0, "all-inside coverage must be 1");
        require(uq::coverage(c, outside) == 0.0, "all-outside coverage must be 0");
        require(uq::coverage(c, half) == 0.5, "half coverage must be 0.5");
        const std::vector<double> ex{0.0, 1.0};
        require(std::abs(uq::rmse(c, ex) - std::sqrt(0.5)) < 1e-12, "rmse oracle mismatch");
        return std::string("ensemble reduction, sharpness, coverage and rmse oracles hold");
    });

    add("quantile_oracles", [] {
        require(std::abs(uq::normal_quantile(0.975) - 1.959963984540054) < 1e-8,
                "Phi^-1(0.975) mismatch");
        require(std::abs(uq::normal_quantile(0.5)) < 1e-12, "Phi^-1(0.5) must be 0");
        require(std::abs(uq::normal_quantile(0.841344746068543) - 1.0) < 1e-8,
                "Phi^-1 at one sigma mismatch");
        return std::string("normal quantile pins hold");
    });

    add("kappa_oracles", [] {
        const inverse::KappaSummary s = inverse::kappa_summarize({0.0, 0.2});
        require(std::abs(s.mean - 0.1) < 1e-15, "kappa mean oracle mismatch");
        require(std::abs(s.std - std::sqrt(0.02)) < 1e-15, "kappa std oracle mismatch");
        std::vector<double> ramp(100);
        for (int i = 0; i < 100; ++i) ramp[i] = 0.1 * i;
        const inverse::Histogram h = inverse::histogram(ramp);
        long totaln = 0;
        for (long c : h.count) totaln += c;
        require(h.count.size() == 50 && totaln == 100 && h.bin_left.front() == 0.0 &&
                    h.bin_right.back() == 9.9,
                "histogram oracle mismatch");
        return std::string("kappa summary and histogram oracles hold");
    });

    add("config_roundtrip", [] {
        ExperimentConfig cfg;
        cfg.method = "dropout";
        cfg.dropout_rate = 0.05;
        cfg.rho = 0.1;
        cfg.seed = 42;
        const std::string once = config_to_json_text(cfg);
        const std::string twice = config_to_json_text(config_from_json_text(once));
        require(once == twice, "serialize(parse(serialize(cfg))) is not byte-identical");
        return std::string("config serialization round-trips byte-identically");
    });

    add("csv_schema_selfcheck", [] {
        const fs::path tmp =
            fs::temp_directory_path() / ("epinn_schema_check_" + std::to_string(::getpid()));
        fs::create_directories(tmp);
        const io::CsvKind kinds[] = {
            io::CsvKind::training_log,    io::CsvKind::metrics,
            io::CsvKind::kappa,           io::CsvKind::kappa_histogram,
            io::CsvKind::prediction_1d,   io::CsvKind::prediction_2d_y,
            io::CsvKind::prediction_2d_t, io::CsvKind::bands,
            io::CsvKind::sweep,           io::CsvKind::report};
        for (io::CsvKind k : kinds) {
            const fs::path f = tmp / (std::string(io::csv_kind_name(k)) + ".csv");
            std::vector<std::string> row(io::csv_columns(k).size(), "0");
            io::write_csv(f, k, {row});
            const io::CsvFile back = io::read_csv(f);
            io::require_columns(back, k, f);
        }
        fs::remove_all(tmp);
        return std::string("all pinned CSV schemas write and re-validate");
    });

    add("loss_decrease", [] {
        const pde::Problem& p = pde::find_problem("poisson1d");
        pde::SampleSpec spec;
        const pde::PointSet ps = pde::sample_points(p, spec, 7);
        Rng init(7, Stream::base_init);
        models::BaseModel m(p, ad::NetworkParams::xavier(models::BaseModel::arch_for(p), init));
        Rng rng(7, Stream::epistemic_index);
        train::TrainOptions opt;
        opt.log_every = 1;
        const train::TrainResult res = train::train(m, ps, {}, 400, rng, opt);
        const std::size_t k = res.log.size() / 20; // 5% slices
        std::vector<double> first, last;
        for (std::size_t i = 0; i < k; ++i) first.push_back(res.log[i].total);
        for (std::size_t i = res.log.size() - k; i < res.log.size(); ++i)
            last.push_back(res.log[i].total);
        const double mf = median_of(first), ml = median_of(last);
        require(ml < mf, "median loss over last 5% (" + fmt(ml) +
                             ") not below first 5% (" + fmt(mf) + ")");
        return "median loss fell from " + fmt(mf) + " to " + fmt(ml);
    });

    add("determinism", [] {
        const fs::path tmp =
            fs::temp_directory_path() / ("epinn_det_check_" + std::to_string(::getpid()));
        ExperimentConfig cfg;
        cfg.problem = "poisson1d";
        cfg.method = "epinn";
        cfg.base_epochs = 60;
        cfg.epinet_epochs = 30;
        cfg.M = 8;
        cfg.seed = 11;
        cfg.out_dir = (tmp / "a").string();
        const RunRecord a = run(cfg);
        cfg.out_dir = (tmp / "b").string();
        const RunRecord b = run(cfg);
        fs::remove_all(tmp);
        require(a.status == "ok" && b.status == "ok", "determinism runs failed");
        require(a.metrics.sharpness == b.metrics.sharpness &&
                    a.metrics.coverage == b.metrics.coverage &&
                    a.metrics.rmse == b.metrics.rmse,
                "repeated run produced different metric values");
        return std::string("repeated run reproduced metrics bit-identically");
    });

    if (!run_dir.empty()) {
        const fs::path d(run_dir);
        add("run_dir_schemas", [d] {
            struct Entry {
                const char* file;
                io::CsvKind kind;
            };
            const Entry entries[] = {
                {"metrics.csv", io::CsvKind::metrics},
                {"training_log.csv", io::CsvKind::training_log},
                {"epinet_training_log.csv", io::CsvKind::training_log},
                {"kappa.csv", io::CsvKind::kappa},
                {"kappa_histogram.csv", io::CsvKind::kappa_histogram},
                {"sweep.csv", io::CsvKind::sweep},
                {"report.csv", io::CsvKind::report},
            };
            int checked = 0;
            for (const Entry& e : entries) {
                const fs::path f = d / e.file;
                if (!fs::exists(f)) continue;
                io::require_columns(io::read_csv(f), e.kind, f);
                ++checked;
            }
            const fs::path predf = d / "prediction.csv";
            if (fs::exists(predf)) {
                const ExperimentConfig cfg =
                    config_from_json_text(io::read_text(d / "config.json"));
                io::require_columns(io::read_csv(predf),
                                    pred_kind(pde::find_problem(cfg.problem)), predf);
                ++checked;
            }
            require(checked > 0, "no recognized CSV artifacts in " + d.string());
            return std::to_string(checked) + " CSV artifacts match their schemas";
        });

        add("run_record_files", [d] {
            const fs::path rj = d / "run_record.json";
            const json j = json::parse(io::read_text(rj), nullptr, false);
            require(!j.is_discarded(), "run_record.json is not valid JSON");
            require(j.contains("files") && j["files"].is_array(),
                    "run_record.json lacks a files list");
            for (const auto& f : j["files"])
                require(fs::exists(d / f.get<std::string>()),
                        "listed file missing: " + f.get<std::string>());
            return std::to_string(j["files"].size()) + " listed files all present";
        });

        add("timing_split", [d] {
            const fs::path mpath = d / "metrics.csv";
            const io::CsvFile m = io::read_csv(mpath);
            io::require_columns(m, io::CsvKind::metrics, mpath);
            const std::size_t ct = io::column_index(m, "time_s", mpath);
            const std::size_t ce = io::column_index(m, "time_epinet_s", mpath);
            for (const auto& r : m.rows)
                require(parse_num(r.at(ce), mpath) <= parse_num(r.at(ct), mpath),
                        "time_epinet_s exceeds time_s");
            return std::string("time_epinet_s <= time_s holds for every row");
        });

        add("config_file_roundtrip", [d] {
            const std::string text = io::read_text(d / "config.json");
            const std::string again = config_to_json_text(config_from_json_text(text));
            require(text == again, "config.json does not round-trip byte-identically");
            return std::string("config.json round-trips byte-identically");
        });
    }

    return out;
}

} // namespace epinn::run
