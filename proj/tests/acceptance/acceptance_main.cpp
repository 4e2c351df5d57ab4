// End-to-end acceptance gauntlet. Each numbered criterion prints one
// PASS/FAIL line; the binary keeps going after a failure and exits nonzero
// only if any criterion failed. Long-running criteria use the library's
// desk-scale schedules through the experiment runner, so this doubles as an
// integration test of the artifact pipeline.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "core/hmc.hpp"
#include "core/io.hpp"
#include "core/kappa.hpp"
#include "core/models.hpp"
#include "core/pde.hpp"
#include "core/predict.hpp"
#include "core/rng.hpp"
#include "core/runner.hpp"
#include "core/tape.hpp"
#include "core/training.hpp"

using namespace epinn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

double now_s() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared run cache: several criteria consume the same desk-scale runs.
// ---------------------------------------------------------------------------

fs::path runs_root() {
    static const fs::path root = [] {
        fs::path p = fs::current_path() / "acceptance_runs";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

run::ExperimentConfig desk_config(const std::string& problem, const std::string& method,
                                  double rho, double dropout_rate, std::uint64_t seed) {
    run::ExperimentConfig cfg;
    cfg.problem = problem;
    cfg.method = method;
    cfg.rho = rho;
    cfg.dropout_rate = dropout_rate;
    cfg.seed = seed;
    std::ostringstream name;
    name << problem << "_" << method;
    if (dropout_rate >= 0.0) name << io::csv_cell(dropout_rate);
    name << "_rho" << io::csv_cell(rho) << "_s" << seed;
    cfg.out_dir = (runs_root() / name.str()).string();
    return cfg;
}

const run::RunRecord& cached_run(const run::ExperimentConfig& cfg) {
    static std::map<std::string, run::RunRecord> cache;
    const auto it = cache.find(cfg.out_dir);
    if (it != cache.end()) return it->second;
    std::printf("    [running %s]\n", fs::path(cfg.out_dir).filename().string().c_str());
    std::fflush(stdout);
    return cache.emplace(cfg.out_dir, run::run(cfg)).first->second;
}

// ---------------------------------------------------------------------------
// 1. Derivative oracle equivalence on randomized small networks
// ---------------------------------------------------------------------------

Outcome criterion_gradients() {
    Outcome out;
    const double t0 = now_s();
    std::mt19937_64 meta(20240817);
    const std::vector<std::string> names = pde::problem_names();
    double worst_grad = 0.0, worst_d1 = 0.0, worst_d2 = 0.0;

    for (int trial = 0; trial < 100; ++trial) {
        const pde::Problem& p = pde::find_problem(names[meta() % names.size()]);
        std::vector<int> hidden{3 + static_cast<int>(meta() % 4)};
        if (meta() % 2) hidden.push_back(3 + static_cast<int>(meta() % 3));
        Rng init(meta(), Stream::base_init);
        models::BaseModel m(p, ad::NetworkParams::xavier(models::BaseModel::arch_for(p, hidden),
                                                         init));
        const pde::PointSet ps = pde::sample_points(p, pde::SampleSpec{4, 3, 0.1}, meta());
        const std::vector<double> sources = train::source_cache(p, ps);
        const train::LossWeights w{};
        Rng rng(meta(), Stream::epistemic_index);

        auto loss_value = [&]() {
            ad::Tape tape;
            return ad::val(train::composite_loss(m, ps, w, sources, tape, nullptr));
        };

        // reverse-mode parameter gradient vs central differences
        std::vector<double> grad(m.trainable_params().size(), 0.0);
        {
            ad::Tape tape;
            const ad::Var loss = train::composite_loss(m, ps, w, sources, tape, nullptr);
            tape.backward(loss);
            m.backward(tape, grad);
        }
        auto params = m.trainable_params();
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double keep = params[i];
            const double h = 1e-6 * std::max(1.0, std::abs(keep));
            params[i] = keep + h;
            const double up = loss_value();
            params[i] = keep - h;
            const double dn = loss_value();
            params[i] = keep;
            const double fd = (up - dn) / (2.0 * h);
            const double rel = std::abs(grad[i] - fd) / std::max(1.0, std::abs(fd));
            worst_grad = std::max(worst_grad, rel);
        }

        // input-direction jets vs finite differences of the value pass
        auto value_at = [&](const double* x) {
            ad::Tape tape;
            return ad::val(m.value_forward(tape, x));
        };
        const int dim = p.dim();
        for (int rep = 0; rep < 3; ++rep) {
            double x[2];
            for (int d = 0; d < dim; ++d)
                x[d] = p.lo()[d] + (p.hi()[d] - p.lo()[d]) * (0.2 + 0.6 * (meta() % 97) / 96.0);
            ad::Var kap{};
            ad::Tape tape;
            const pde::FieldState<ad::Var> s =
                m.colloc_forward(tape, x, m.has_kappa() ? &kap : nullptr);
            const double h = 1e-5;
            for (int d = 0; d < dim; ++d) {
                double xp[2] = {x[0], dim > 1 ? x[1] : 0.0};
                double xm[2] = {x[0], dim > 1 ? x[1] : 0.0};
                xp[d] += h;
                xm[d] -= h;
                const double up = value_at(xp), dn = value_at(xm), mid = value_at(x);
                const double fd1 = (up - dn) / (2.0 * h);
                const double fd2 = (up - 2.0 * mid + dn) / (h * h);
                const double d1 = d == 0 ? ad::val(s.dx)
                                         : (p.time_dependent() ? ad::val(s.dt)
                                                               : ad::val(s.dy));
                worst_d1 =
                    std::max(worst_d1, std::abs(d1 - fd1) / std::max(1.0, std::abs(fd1)));
                const bool has_second = p.want_second()[d];
                if (has_second) {
                    const double d2 = d == 0 ? ad::val(s.dxx) : ad::val(s.dyy);
                    worst_d2 =
                        std::max(worst_d2, std::abs(d2 - fd2) / std::max(1.0, std::abs(fd2)));
                }
            }
        }
    }

    const double dt = now_s() - t0;
    if (worst_grad >= 1e-5) out.fail("gradient rel err " + fmt(worst_grad));
    if (worst_d1 >= 1e-6) out.fail("first-derivative rel err " + fmt(worst_d1));
    if (worst_d2 >= 1e-4) out.fail("second-derivative rel err " + fmt(worst_d2));
    if (dt >= 60.0) out.fail("took " + fmt(dt) + "s (budget 60s)");
    out.note("100 nets; max rel: grad " + fmt(worst_grad, 2) + ", d1 " + fmt(worst_d1, 2) +
             ", d2 " + fmt(worst_d2, 2) + "; " + fmt(dt, 3) + "s");
    return out;
}

// ---------------------------------------------------------------------------
// 2. Exact solutions annihilate their residuals
// ---------------------------------------------------------------------------

Outcome criterion_residuals() {
    Outcome out;
    double worst = 0.0;
    std::string worst_name;
    for (const std::string& name : pde::problem_names()) {
        const pde::Problem& p = pde::find_problem(name);
        Rng rng(42);
        pde::Jet jets[2];
        for (int i = 0; i < 1000; ++i) {
            double x[2];
            for (int d = 0; d < p.dim(); ++d)
                x[d] = rng.uniform(p.lo()[d], p.hi()[d]);
            p.exact_jets(x, jets);
            const double r = std::abs(pde::residual_at(p, jets, p.kappa_true(), x));
            if (r > worst) {
                worst = r;
                worst_name = name;
            }
        }
    }
    if (worst >= 1e-8) out.fail("max |residual| " + fmt(worst) + " on " + worst_name);
    out.note("6 benchmarks x 1000 points; max |residual| " + fmt(worst, 2));
    return out;
}

// ---------------------------------------------------------------------------
// 3. Calibration metrics: closed-form cases exact, oracles to 1e-12
// ---------------------------------------------------------------------------

Outcome criterion_metrics() {
    Outcome out;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) out.fail(what);
    };

    // closed-form ensemble statistics
    {
        uq::EnsembleAccumulator acc(1);
        const double a[1] = {0.0}, b[1] = {2.0};
        acc.add(a);
        acc.add(b);
        const uq::Ensemble e = acc.finish();
        expect(e.mu[0] == 1.0 && e.var[0] == 1.0, "two-pass ensemble {0,2} != (1,1)");
    }
    {
        uq::Ensemble e;
        e.n = 4;
        e.mu = {0, 0, 0, 0};
        e.var = {0.0625, 0.0625, 0.0625, 0.0625}; // sigma = 0.25
        expect(uq::sharpness(e) == 1.0, "sharpness(sigma=0.25) != 1");
        e.var = {0, 0, 0, 0};
        expect(uq::sharpness(e) == 0.0, "sharpness(sigma=0) != 0");

        const std::vector<double> exact{0, 0, 0, 0};
        e.var = {1, 1, 1, 1};
        expect(uq::coverage(e, exact) == 1.0, "coverage(mu==u) != 1");
        e.mu = {3, 3, 3, 3}; // |mu-u| = 3 sigma > 1.96 sigma
        expect(uq::coverage(e, exact) == 0.0, "coverage(3-sigma miss) != 0");
        e.mu = {0, 0, 0, 0};
        e.var = {0, 0, 0, 0};
        expect(uq::coverage(e, exact) == 1.0, "coverage(sigma=0, exact fit) != 1");
        expect(uq::rmse(e, exact) == 0.0, "rmse(mu==u) != 0");
        e.mu = {0.1, 0.1, 0.1, 0.1};
        expect(std::abs(uq::rmse(e, exact) - 0.1) < 1e-16, "rmse(const 0.1 error) != 0.1");
    }

    // a silenced correction term produces zero predictive variance
    {
        const pde::Problem& p = pde::find_problem("poisson1d");
        Rng rng(3);
        ad::NetworkParams base =
            ad::NetworkParams::xavier(models::BaseModel::arch_for(p, {6, 6}), rng);
        models::EpinetConfig cfg;
        cfg.hidden = {4};
        cfg.alpha = 0.0;
        models::EpinetModel model(p, base, cfg, 5);
        uq::EpinnArtifacts a{&base, &model.learnable(), &model.prior(), 0.0, cfg.d_z};
        const std::vector<double> pts{-0.5, 0.0, 0.5};
        const uq::Ensemble e = uq::predict_epinn(p, a, pts, 3, 64, 9);
        for (double v : e.var) expect(v == 0.0, "silenced correction variance != 0");
    }

    // latent-field summaries on constant and two-point inputs
    {
        const inverse::KappaSummary one = inverse::kappa_summarize({0.1, 0.1});
        expect(one.mean == 0.1 && one.std == 0.0, "kappa {0.1,0.1} summary");
        const ad::Architecture arch{1, {}, 1};
        bayes::Chain chain;
        chain.dim = 3;
        chain.samples = {0.0, 0.0, 0.08, 0.0, 0.0, 0.12};
        const std::vector<double> draws = inverse::kappa_draws_bpinn(chain, arch);
        expect(draws == std::vector<double>{0.08, 0.12}, "posterior latent extraction");
    }
    {
        // constant latent field: every stochastic draw hits the level exactly
        const pde::Problem& p = pde::find_problem("heat_inverse");
        ad::Architecture arch{2, {4}, 2};
        ad::NetworkParams params(arch);
        params.biases(1)[1] = 0.1;
        const std::vector<double> pts{0.25, 0.25, 0.5, 0.5, 0.75, 0.75};
        const auto draws = inverse::kappa_draws_dropout(p, params, 0.05, pts, 3, 16, 3);
        for (double d : draws)
            expect(std::abs(d - 0.1) < 1e-15, "constant latent dropout draw != level");
    }

    // randomized ensembles against independent two-pass oracles
    {
        std::mt19937_64 g(99);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        const std::size_t n = 257;
        uq::Ensemble e;
        e.n = n;
        std::vector<double> exact(n);
        for (std::size_t i = 0; i < n; ++i) {
            e.mu.push_back(u(g));
            e.var.push_back(std::abs(u(g)) + 0.01);
            exact[i] = u(g);
        }
        // sharpness oracle: sum widths, then divide
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += 4.0 * std::sqrt(e.var[i]);
        const double sharp_oracle = acc / static_cast<double>(n);
        expect(std::abs(uq::sharpness(e) - sharp_oracle) <= 1e-12 * std::abs(sharp_oracle),
               "sharpness oracle mismatch");
        // coverage oracle: explicit quantile threshold count
        const double q = uq::normal_quantile(0.975);
        long covered = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(e.mu[i] - exact[i]) <= q * std::sqrt(e.var[i])) ++covered;
        const double cov_oracle = static_cast<double>(covered) / static_cast<double>(n);
        expect(uq::coverage(e, exact) == cov_oracle, "coverage oracle mismatch");
        // rmse oracle: two passes (mean of squares, then root)
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = e.mu[i] - exact[i];
            ss += d * d;
        }
        const double rmse_oracle = std::sqrt(ss / static_cast<double>(n));
        expect(std::abs(uq::rmse(e, exact) - rmse_oracle) <= 1e-12 * std::abs(rmse_oracle),
               "rmse oracle mismatch");
        // kappa oracle: mean then sample std
        std::vector<double> draws(e.mu);
        double mean = 0.0;
        for (double d : draws) mean += d;
        mean /= static_cast<double>(draws.size());
        double varacc = 0.0;
        for (double d : draws) varacc += (d - mean) * (d - mean);
        const double std_oracle = std::sqrt(varacc / static_cast<double>(draws.size() - 1));
        const inverse::KappaSummary ks = inverse::kappa_summarize(draws);
        expect(std::abs(ks.mean - mean) <= 1e-12 * std::abs(mean) &&
                   std::abs(ks.std - std_oracle) <= 1e-12 * std::abs(std_oracle),
               "kappa summary oracle mismatch");
    }

    if (out.pass) out.note("closed-form cases exact; randomized oracles within 1e-12");
    return out;
}

// ---------------------------------------------------------------------------
// 4. Physics-only 1D Poisson at desk scale: accuracy, calibration, and the
//    additive-correction bands are narrower than MC-dropout's
// ---------------------------------------------------------------------------

Outcome criterion_poisson_desk() {
    Outcome out;
    const double t0 = now_s();
    double rmse_sum = 0.0, cov_sum = 0.0, sharp_epinn = 0.0, sharp_drop = 0.0;
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    for (const std::uint64_t s : seeds) {
        const run::RunRecord& e = cached_run(desk_config("poisson1d", "epinn", 0.0, -1.0, s));
        const run::RunRecord& d =
            cached_run(desk_config("poisson1d", "dropout", 0.0, 0.10, s));
        if (e.status != "ok") out.fail("epinn seed " + std::to_string(s) + " failed");
        if (d.status != "ok") out.fail("dropout seed " + std::to_string(s) + " failed");
        if (!out.pass) return out;
        rmse_sum += e.metrics.rmse;
        cov_sum += e.metrics.coverage;
        sharp_epinn += e.metrics.sharpness;
        sharp_drop += d.metrics.sharpness;
    }
    const double k = static_cast<double>(seeds.size());
    const double rmse = rmse_sum / k, cov = cov_sum / k;
    const double se = sharp_epinn / k, sd = sharp_drop / k;
    if (!(rmse < 0.05)) out.fail("seed-averaged RMSE " + fmt(rmse) + " >= 0.05");
    if (!(cov >= 0.90)) out.fail("seed-averaged coverage " + fmt(cov) + " < 0.90");
    if (!(se < sd))
        out.fail("correction bands (" + fmt(se) + ") not narrower than dropout (" + fmt(sd) +
                 ")");
    const double dt = now_s() - t0;
    out.note("RMSE " + fmt(rmse, 3) + ", coverage " + fmt(cov, 3) + ", sharpness " +
             fmt(se, 3) + " vs dropout-10% " + fmt(sd, 3) + "; " + fmt(dt, 3) + "s");
    return out;
}

// ---------------------------------------------------------------------------
// 5. Dropout band width is strictly increasing in the dropout rate
// ---------------------------------------------------------------------------

Outcome criterion_dropout_ordering() {
    Outcome out;
    const double t0 = now_s();
    int checked = 0;
    for (const std::string problem : {"poisson1d", "nonlinear_poisson1d"}) {
        for (const double rho : {0.0, 0.1, 0.3}) {
            for (const std::uint64_t s : {0ull, 1ull, 2ull}) {
                const run::RunRecord& lo =
                    cached_run(desk_config(problem, "dropout", rho, 0.05, s));
                const run::RunRecord& hi =
                    cached_run(desk_config(problem, "dropout", rho, 0.10, s));
                if (lo.status != "ok" || hi.status != "ok") {
                    out.fail(problem + " rho " + fmt(rho) + " seed " + std::to_string(s) +
                             " failed to train");
                    continue;
                }
                ++checked;
                if (!(lo.metrics.sharpness < hi.metrics.sharpness))
                    out.fail(problem + " rho " + fmt(rho) + " seed " + std::to_string(s) +
                             ": sharpness(5%) " + fmt(lo.metrics.sharpness) + " !< " +
                             "sharpness(10%) " + fmt(hi.metrics.sharpness));
            }
        }
    }
    out.note(std::to_string(checked) + "/18 rate pairs strictly ordered; " +
             fmt(now_s() - t0, 3) + "s");
    return out;
}

// ---------------------------------------------------------------------------
// 6. Posterior sampling: toy moments, then the porous-channel posterior
// ---------------------------------------------------------------------------

Outcome criterion_hmc() {
    Outcome out;
    const double t0 = now_s();

    struct StdNormal final : bayes::Target {
        std::size_t dim() const override { return 1; }
        double potential(std::span<const double> pos, std::span<double> grad) override {
            grad[0] = pos[0];
            return 0.5 * pos[0] * pos[0];
        }
    } toy;
    bayes::HmcConfig toy_cfg;
    toy_cfg.eps = 0.2;
    toy_cfg.leapfrog = 20;
    toy_cfg.burn_in = 500;
    toy_cfg.total = 5500;
    toy_cfg.seed = 2024;
    const bayes::Chain chain = bayes::sample(toy, toy_cfg);
    double mean = 0.0;
    for (std::size_t i = 0; i < chain.n(); ++i) mean += chain.samples[i];
    mean /= static_cast<double>(chain.n());
    double var = 0.0;
    for (std::size_t i = 0; i < chain.n(); ++i) {
        const double d = chain.samples[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(chain.n());
    if (!(std::abs(mean) < 0.05)) out.fail("toy |mean| " + fmt(std::abs(mean)) + " >= 0.05");
    if (!(std::abs(var - 1.0) < 0.1)) out.fail("toy |var-1| " + fmt(std::abs(var - 1.0)) +
                                               " >= 0.1");

    const run::RunRecord& rec = cached_run(desk_config("porous1d", "bpinn", 0.1, -1.0, 0));
    if (rec.status != "ok") {
        out.fail("posterior run failed: " + rec.error);
        return out;
    }
    if (!(rec.metrics.coverage >= 0.85))
        out.fail("porous coverage " + fmt(rec.metrics.coverage) + " < 0.85");
    if (!(rec.metrics.rmse < 0.2)) out.fail("porous RMSE " + fmt(rec.metrics.rmse) + " >= 0.2");
    const double dt = now_s() - t0;
    if (dt > 20.0 * 60.0) out.fail("took " + fmt(dt) + "s (budget ~20 min)");
    out.note("toy mean " + fmt(mean, 2) + ", var " + fmt(var, 3) + "; porous coverage " +
             fmt(rec.metrics.coverage, 3) + ", RMSE " + fmt(rec.metrics.rmse, 3) + "; " +
             fmt(dt, 3) + "s");
    return out;
}

// ---------------------------------------------------------------------------
// 7. Inverse heat: recovered diffusivity and spread ordering
// ---------------------------------------------------------------------------

Outcome criterion_inverse_heat() {
    Outcome out;
    const double t0 = now_s();
    const run::RunRecord& e = cached_run(desk_config("heat_inverse", "epinn", 0.1, -1.0, 0));
    const run::RunRecord& d = cached_run(desk_config("heat_inverse", "dropout", 0.1, 0.05, 0));
    if (e.status != "ok" || d.status != "ok") {
        out.fail("inverse run failed");
        return out;
    }
    if (!e.kappa || !d.kappa) {
        out.fail("inverse run missing latent summary");
        return out;
    }
    const double mean = e.kappa->mean;
    if (!(mean >= 0.07 && mean <= 0.13))
        out.fail("recovered diffusivity mean " + fmt(mean) + " outside [0.07, 0.13]");
    if (!(d.kappa->std > e.kappa->std))
        out.fail("dropout-5% latent std " + fmt(d.kappa->std) +
                 " not larger than correction-model std " + fmt(e.kappa->std));
    const double dt = now_s() - t0;
    if (dt > 30.0 * 60.0) out.fail("took " + fmt(dt) + "s (budget ~30 min)");
    out.note("diffusivity " + fmt(mean, 3) + " +/- " + fmt(e.kappa->std, 2) +
             " (dropout spread " + fmt(d.kappa->std, 2) + "); " + fmt(dt, 3) + "s");
    return out;
}

// ---------------------------------------------------------------------------
// 8. Burgers noise ablation: bands widen (weakly) with noise, coverage holds
// ---------------------------------------------------------------------------

Outcome criterion_burgers_ablation() {
    Outcome out;
    const double t0 = now_s();
    std::vector<double> sharp;
    for (const double rho : {0.0, 0.1, 0.3}) {
        const run::RunRecord& rec = cached_run(desk_config("burgers", "epinn", rho, -1.0, 0));
        if (rec.status != "ok") {
            out.fail("rho " + fmt(rho) + " run failed");
            return out;
        }
        if (!(rec.metrics.coverage >= 0.90))
            out.fail("rho " + fmt(rho) + " coverage " + fmt(rec.metrics.coverage) + " < 0.90");
        sharp.push_back(rec.metrics.sharpness);
    }
    for (std::size_t i = 1; i < sharp.size(); ++i)
        if (!(sharp[i] >= sharp[i - 1]))
            out.fail("sharpness decreased: " + fmt(sharp[i - 1]) + " -> " + fmt(sharp[i]));
    out.note("sharpness " + fmt(sharp[0], 3) + " / " + fmt(sharp[1], 3) + " / " +
             fmt(sharp[2], 3) + "; " + fmt(now_s() - t0, 3) + "s");
    return out;
}

// ---------------------------------------------------------------------------
// 9. Determinism: the same seed reproduces every metric bit for bit
// ---------------------------------------------------------------------------

// CSV bytes must match except the wall-clock columns.
bool csv_equal_modulo_time(const fs::path& a, const fs::path& b, std::string& why) {
    const io::CsvFile fa = io::read_csv(a), fb = io::read_csv(b);
    if (fa.columns != fb.columns) {
        why = "column mismatch in " + a.filename().string();
        return false;
    }
    if (fa.rows.size() != fb.rows.size()) {
        why = "row-count mismatch in " + a.filename().string();
        return false;
    }
    for (std::size_t r = 0; r < fa.rows.size(); ++r) {
        for (std::size_t c = 0; c < fa.columns.size(); ++c) {
            const std::string& col = fa.columns[c];
            if (col == "time_s" || col == "time_epinet_s" || col == "wall_seconds") continue;
            if (fa.rows[r][c] != fb.rows[r][c]) {
                why = a.filename().string() + " row " + std::to_string(r) + " column " + col +
                      ": " + fa.rows[r][c] + " != " + fb.rows[r][c];
                return false;
            }
        }
    }
    return true;
}

Outcome criterion_determinism() {
    Outcome out;
    const double t0 = now_s();

    auto repeat_and_compare = [&](run::ExperimentConfig cfg, const std::string& label) {
        cfg.out_dir = (runs_root() / ("det_" + label + "_a")).string();
        const run::RunRecord ra = run::run(cfg);
        cfg.out_dir = (runs_root() / ("det_" + label + "_b")).string();
        const run::RunRecord rb = run::run(cfg);
        if (ra.status != "ok" || rb.status != "ok") {
            out.fail(label + ": run failed");
            return;
        }
        if (ra.metrics.sharpness != rb.metrics.sharpness ||
            ra.metrics.coverage != rb.metrics.coverage || ra.metrics.rmse != rb.metrics.rmse)
            out.fail(label + ": metrics differ between repeats");
        if (ra.kappa.has_value() != rb.kappa.has_value())
            out.fail(label + ": latent summary presence differs");
        if (ra.kappa && (ra.kappa->mean != rb.kappa->mean || ra.kappa->std != rb.kappa->std))
            out.fail(label + ": latent summary differs");
        for (const char* f : {"metrics.csv", "prediction.csv"}) {
            std::string why;
            if (!csv_equal_modulo_time(fs::path(ra.config.out_dir) / f,
                                       fs::path(rb.config.out_dir) / f, why))
                out.fail(label + ": " + why);
        }
    };

    // one full desk-scale repetition
    repeat_and_compare(desk_config("poisson1d", "epinn", 0.0, -1.0, 0), "desk_epinn");

    // reduced schedules covering each remaining method and the inverse path
    run::ExperimentConfig drop = desk_config("poisson1d", "dropout", 0.1, 0.10, 7);
    drop.base_epochs = 300;
    drop.M = 64;
    repeat_and_compare(drop, "dropout");

    run::ExperimentConfig bp = desk_config("porous1d", "bpinn", 0.1, -1.0, 7);
    bp.hmc.total = 80;
    bp.hmc.burn_in = 20;
    repeat_and_compare(bp, "bpinn");

    run::ExperimentConfig inv = desk_config("heat_inverse", "epinn", 0.1, -1.0, 7);
    inv.base_epochs = 200;
    inv.epinet_epochs = 100;
    inv.n_colloc = 64;
    inv.M = 64;
    repeat_and_compare(inv, "inverse");

    out.note("4 configurations repeated bit-identically; " + fmt(now_s() - t0, 3) + "s");
    return out;
}

} // namespace

int main() {
    struct Entry {
        int number;
        const char* title;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {1, "derivatives match finite differences", criterion_gradients},
        {2, "exact solutions annihilate residuals", criterion_residuals},
        {3, "calibration metrics match oracles", criterion_metrics},
        {4, "poisson desk-scale accuracy and calibration", criterion_poisson_desk},
        {5, "dropout band width increases with rate", criterion_dropout_ordering},
        {6, "posterior sampling moments and porous coverage", criterion_hmc},
        {7, "inverse heat diffusivity recovery", criterion_inverse_heat},
        {8, "burgers noise ablation ordering", criterion_burgers_ablation},
        {9, "same seed reproduces metrics bit-identically", criterion_determinism},
    };

    int failed = 0;
    for (const Entry& e : entries) {
        std::printf("criterion %d (%s): running...\n", e.number, e.title);
        std::fflush(stdout);
        Outcome o;
        try {
            o = e.fn();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        std::printf("criterion %d (%s): %s%s%s\n", e.number, e.title,
                    o.pass ? "PASS" : "FAIL", o.detail.empty() ? "" : " - ",
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("acceptance: %d/9 criteria passed\n", 9 - failed);
    return failed == 0 ? 0 : 1;
}
