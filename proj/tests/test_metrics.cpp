#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/errors.hpp"
#include "core/models.hpp"
#include "core/predict.hpp"

using namespace epinn;
using namespace epinn::uq;

namespace {

Ensemble make_ensemble(std::vector<double> mu, std::vector<double> var, long M = 16) {
    Ensemble e;
    e.n = mu.size();
    e.M = M;
    e.mu = std::move(mu);
    e.var = std::move(var);
    return e;
}

} // namespace

TEST_CASE("sharpness is four times the mean predictive sigma") {
    const auto e = make_ensemble({0, 0, 0, 0}, {0.0625, 0.0625, 0.0625, 0.0625});
    CHECK(sharpness(e) == doctest::Approx(1.0).epsilon(1e-15)); // sigma = 0.25
    const auto z = make_ensemble({1, 2}, {0.0, 0.0});
    CHECK(sharpness(z) == 0.0);
}

TEST_CASE("sharpness scales linearly with sigma") {
    std::vector<double> var{0.01, 0.09, 0.25};
    const auto e1 = make_ensemble({0, 0, 0}, var);
    for (auto& v : var) v *= 4.0; // sigma doubled
    const auto e2 = make_ensemble({0, 0, 0}, var);
    CHECK(sharpness(e2) == doctest::Approx(2.0 * sharpness(e1)).epsilon(1e-14));
}

TEST_CASE("ensemble moments for a two-member ensemble") {
    EnsembleAccumulator acc(1);
    acc.add(std::vector<double>{0.0});
    acc.add(std::vector<double>{2.0});
    const Ensemble e = acc.finish();
    CHECK(e.M == 2);
    CHECK(e.mu[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.var[0] == doctest::Approx(1.0).epsilon(1e-15)); // population variance
}

TEST_CASE("streaming moments match a two-pass oracle") {
    Rng rng(13);
    const std::size_t n = 7;
    const long M = 33;
    std::vector<std::vector<double>> samples(M, std::vector<double>(n));
    for (auto& s : samples)
        for (auto& x : s) x = rng.normal() * 2.0 + 0.5;

    EnsembleAccumulator acc(n);
    for (const auto& s : samples) acc.add(s);
    const Ensemble e = acc.finish();

    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (const auto& s : samples) mean += s[i];
        mean /= M;
        double var = 0.0;
        for (const auto& s : samples) var += (s[i] - mean) * (s[i] - mean);
        var /= M;
        CHECK(e.mu[i] == doctest::Approx(mean).epsilon(1e-12));
        CHECK(e.var[i] == doctest::Approx(var).epsilon(1e-12));
    }
}

TEST_CASE("accumulator rejects misuse") {
    EnsembleAccumulator acc(2);
    CHECK_THROWS_AS(acc.add(std::vector<double>{1.0}), UsageError);
    acc.add(std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(acc.finish(), UsageError); // single sample has no spread
}

TEST_CASE("inverse normal quantile hits reference values") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-8));
    CHECK(std::abs(normal_quantile(0.5)) < 1e-12);
    CHECK(normal_quantile(0.841344746068543) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(normal_quantile(0.998650101968370) == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(normal_quantile(0.001) == doctest::Approx(-3.090232306167813).epsilon(1e-8));
    // symmetry
    for (double p : {0.6, 0.9, 0.99, 0.0001})
        CHECK(normal_quantile(p) == doctest::Approx(-normal_quantile(1.0 - p)).epsilon(1e-10));
    CHECK_THROWS_AS(normal_quantile(0.0), UsageError);
    CHECK_THROWS_AS(normal_quantile(1.0), UsageError);
    CHECK_THROWS_AS(normal_quantile(-0.3), UsageError);
}

TEST_CASE("coverage counts points inside the central band") {
    // sigma = 1; |u - mu| = 1 is inside the 95% band (q = 1.96), 3 is outside
    const auto e = make_ensemble({0, 0, 0, 0}, {1, 1, 1, 1});
    CHECK(coverage(e, std::vector<double>{1.0, -1.0, 3.0, -3.0}) == doctest::Approx(0.5));
    CHECK(coverage(e, std::vector<double>{0, 0, 0, 0}) == doctest::Approx(1.0));
    CHECK(coverage(e, std::vector<double>{3, 3, -3, 4}) == doctest::Approx(0.0));
}

TEST_CASE("zero-variance points are covered only on exact agreement") {
    const auto e = make_ensemble({0.5, 0.5}, {0.0, 0.0});
    CHECK(coverage(e, std::vector<double>{0.5, 0.5000001}) == doctest::Approx(0.5));
}

TEST_CASE("coverage is monotone in the band level") {
    const auto e = make_ensemble({0, 0, 0, 0, 0}, {1, 1, 1, 1, 1});
    const std::vector<double> exact{0.1, 0.9, 1.5, 2.2, 3.0};
    double prev = 0.0;
    for (double gamma : {0.5, 0.8, 0.95, 0.999}) {
        const double c = coverage(e, exact, gamma);
        CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("coverage and rmse are shift-invariant") {
    const auto e = make_ensemble({0.2, -0.4, 1.0}, {0.5, 0.25, 2.0});
    const std::vector<double> exact{0.3, -0.2, 0.6};
    auto shifted = e;
    std::vector<double> exact_shifted = exact;
    for (auto& m : shifted.mu) m += 5.0;
    for (auto& u : exact_shifted) u += 5.0;
    CHECK(coverage(shifted, exact_shifted) == coverage(e, exact));
    CHECK(rmse(shifted, exact_shifted) == doctest::Approx(rmse(e, exact)).epsilon(1e-12));
}

TEST_CASE("rmse on hand values and a two-pass oracle") {
    const auto exact0 = make_ensemble({1.0, 2.0, 3.0}, {0, 0, 0});
    CHECK(rmse(exact0, std::vector<double>{1.0, 2.0, 3.0}) == 0.0);

    const auto off = make_ensemble({1.1, 2.1, 3.1}, {0, 0, 0});
    CHECK(rmse(off, std::vector<double>{1.0, 2.0, 3.0}) == doctest::Approx(0.1).epsilon(1e-12));

    Rng rng(8);
    std::vector<double> mu(11), u(11);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        mu[i] = rng.normal();
        u[i] = rng.normal();
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) ss += (mu[i] - u[i]) * (mu[i] - u[i]);
    const auto e = make_ensemble(mu, std::vector<double>(11, 0.3));
    CHECK(rmse(e, u) == doctest::Approx(std::sqrt(ss / 11.0)).epsilon(1e-12));
}

TEST_CASE("metric length mismatches are rejected") {
    const auto e = make_ensemble({0, 0}, {1, 1});
    CHECK_THROWS_AS(coverage(e, std::vector<double>{0.0}), UsageError);
    CHECK_THROWS_AS(rmse(e, std::vector<double>{0.0, 0.0, 0.0}), UsageError);
}

TEST_CASE("synthetic gaussian errors hit nominal coverage") {
    // mu - u ~ N(0, sigma^2) with the reported sigma: coverage ~ 0.95
    Rng rng(99);
    const std::size_t n = 2000;
    std::vector<double> mu(n), var(n, 0.09), exact(n, 0.0);
    for (auto& m : mu) m = 0.3 * rng.normal();
    const auto e = make_ensemble(mu, var);
    const double c = coverage(e, exact);
    const double se = std::sqrt(0.95 * 0.05 / static_cast<double>(n));
    CHECK(std::abs(c - 0.95) < 3.0 * se);
}

TEST_CASE("additive-correction prediction collapses when the correction is off") {
    const auto& prob = pde::find_problem("poisson1d");
    Rng rng(5);
    ad::NetworkParams base =
        ad::NetworkParams::xavier(models::BaseModel::arch_for(prob, {8, 8}), rng);
    models::EpinetConfig cfg;
    cfg.hidden = {6, 6};
    cfg.alpha = 0.0;
    models::EpinetModel model(prob, base, cfg, 3);

    EpinnArtifacts a;
    a.base = &base;
    a.learnable = &model.learnable();
    a.prior = &model.prior();
    a.alpha = 0.0;
    a.d_z = cfg.d_z;

    const std::vector<double> pts{-0.5, 0.0, 0.5};
    const Ensemble e = predict_epinn(prob, a, pts, pts.size(), 16, 42);
    CHECK(e.M == 16);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto ref = ad::forward_values(base, {&pts[i], 1});
        CHECK(e.mu[i] == doctest::Approx(ref[0]).epsilon(1e-12));
        CHECK(e.var[i] == doctest::Approx(0.0));
    }
    CHECK(sharpness(e) == doctest::Approx(0.0));
}

TEST_CASE("additive-correction evaluator agrees with the training model") {
    const auto& prob = pde::find_problem("poisson1d");
    Rng rng(6);
    ad::NetworkParams base =
        ad::NetworkParams::xavier(models::BaseModel::arch_for(prob, {8, 8}), rng);
    models::EpinetConfig cfg;
    cfg.hidden = {6, 6};
    models::EpinetModel model(prob, base, cfg, 7);
    // give the learnable net something to say
    Rng nudge(8);
    for (auto& w : model.trainable_params()) w += 0.05 * nudge.normal();

    EpinnArtifacts a;
    a.base = &base;
    a.learnable = &model.learnable();
    a.prior = &model.prior();
    a.alpha = cfg.alpha;
    a.d_z = cfg.d_z;

    const std::vector<double> pts{-0.7, -0.1, 0.3, 0.9};
    EpinnValueEvaluator ev(prob, a, pts, pts.size());
    std::vector<double> z(cfg.d_z);
    Rng zr(9);
    for (auto& zi : z) zi = zr.normal();

    std::vector<double> out(pts.size());
    ev.eval(z, 0, out);

    Rng epoch(1);
    model.begin_epoch(epoch);
    model.set_z(z);
    ad::Tape tape;
    for (std::size_t i = 0; i < pts.size(); ++i)
        CHECK(out[i] ==
              doctest::Approx(val(model.value_forward(tape, &pts[i]))).epsilon(1e-12));
}

TEST_CASE("epistemic spread grows with the prior weight") {
    const auto& prob = pde::find_problem("poisson1d");
    Rng rng(10);
    ad::NetworkParams base =
        ad::NetworkParams::xavier(models::BaseModel::arch_for(prob, {8, 8}), rng);
    models::EpinetConfig cfg;
    cfg.hidden = {6, 6};
    models::EpinetModel model(prob, base, cfg, 11);

    EpinnArtifacts a;
    a.base = &base;
    a.learnable = &model.learnable();
    a.prior = &model.prior();
    a.d_z = cfg.d_z;

    const std::vector<double> pts{-0.5, 0.0, 0.5};
    a.alpha = 0.05;
    const Ensemble small = predict_epinn(prob, a, pts, pts.size(), 64, 1);
    a.alpha = 0.10;
    const Ensemble big = predict_epinn(prob, a, pts, pts.size(), 64, 1);
    CHECK(sharpness(big) == doctest::Approx(2.0 * sharpness(small)).epsilon(1e-10));
}

TEST_CASE("dropout prediction at rate zero is deterministic") {
    const auto& prob = pde::find_problem("poisson1d");
    Rng rng(12);
    ad::NetworkParams params =
        ad::NetworkParams::xavier(models::BaseModel::arch_for(prob, {8, 8}), rng);
    const std::vector<double> pts{-0.3, 0.4};
    const Ensemble e = predict_dropout(prob, params, 0.0, pts, pts.size(), 8, 5);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto ref = ad::forward_values(params, {&pts[i], 1});
        CHECK(e.mu[i] == doctest::Approx(ref[0]).epsilon(1e-14));
        CHECK(e.var[i] == 0.0);
    }
}

TEST_CASE("dropout prediction shares one mask across points within a sample") {
    const auto& prob = pde::find_problem("poisson1d");
    Rng rng(14);
    ad::NetworkParams params =
        ad::NetworkParams::xavier(models::BaseModel::arch_for(prob, {16}), rng);
    const std::vector<double> pts{0.2, 0.2}; // duplicated point
    DropoutValueEvaluator ev(prob, params, 0.5, pts, pts.size());
    Rng mask_rng(3);
    ev.draw_mask(mask_rng);
    std::vector<double> out(2);
    ev.eval(0, out);
    CHECK(out[0] == out[1]); // same mask, same point, same value

    // repeated eval under the same mask is unchanged; a redraw shifts it
    std::vector<double> again(2);
    ev.eval(0, again);
    CHECK(again == out);
    ev.draw_mask(mask_rng);
    std::vector<double> shifted(2);
    ev.eval(0, shifted);
    CHECK(shifted != out);
}

TEST_CASE("dropout prediction is seed-reproducible") {
    const auto& prob = pde::find_problem("poisson1d");
    Rng rng(15);
    ad::NetworkParams params =
        ad::NetworkParams::xavier(models::BaseModel::arch_for(prob, {16, 16}), rng);
    const std::vector<double> pts{-0.6, 0.1, 0.7};
    const Ensemble a = predict_dropout(prob, params, 0.1, pts, pts.size(), 32, 77);
    const Ensemble b = predict_dropout(prob, params, 0.1, pts, pts.size(), 32, 77);
    CHECK(a.mu == b.mu);
    CHECK(a.var == b.var);
    const Ensemble c = predict_dropout(prob, params, 0.1, pts, pts.size(), 32, 78);
    CHECK(a.mu != c.mu);
}

TEST_CASE("posterior-chain prediction from a hand-built chain") {
    const auto& prob = pde::find_problem("poisson1d");
    const ad::Architecture arch{1, {}, 1}; // u = w x + b
    bayes::Chain chain;
    chain.dim = 2;
    chain.samples = {1.0, 0.0, /* second sample */ 0.0, 1.0};

    const std::vector<double> pts{2.0};
    const Ensemble e = predict_bpinn(prob, chain, arch, pts, 1);
    // predictions are 2 and 1
    CHECK(e.mu[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(e.var[0] == doctest::Approx(0.25).epsilon(1e-15));

    bayes::Chain empty;
    empty.dim = 2;
    CHECK_THROWS_AS(predict_bpinn(prob, empty, arch, pts, 1), UsageError);

    bayes::Chain tiny;
    tiny.dim = 1;
    tiny.samples = {1.0};
    CHECK_THROWS_AS(predict_bpinn(prob, tiny, arch, pts, 1), UsageError);
}

TEST_CASE("monte carlo prediction requires at least two samples") {
    const auto& prob = pde::find_problem("poisson1d");
    Rng rng(16);
    ad::NetworkParams params =
        ad::NetworkParams::xavier(models::BaseModel::arch_for(prob, {8}), rng);
    const std::vector<double> pts{0.0};
    CHECK_THROWS_AS(predict_dropout(prob, params, 0.1, pts, 1, 1, 1), UsageError);
}
