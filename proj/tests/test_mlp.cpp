#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/errors.hpp"
#include "core/mlp.hpp"
#include "core/rng.hpp"

using namespace epinn;
using namespace epinn::ad;

namespace {

// value-only evaluation used as the FD oracle (independent of JetPass layout
// choices beyond the value channel itself)
double eval1(const NetworkParams& p, double x) { return forward_values(p, {&x, 1})[0]; }

} // namespace

TEST_CASE("parameter layout round-trips through layer views") {
    Architecture arch{2, {3, 4}, 1};
    CHECK(param_count(arch) == 2 * 3 + 3 + 3 * 4 + 4 + 4 * 1 + 1);
    NetworkParams p(arch);
    // write via layer views, read back through the flat vector
    double v = 0.5;
    for (int l = 0; l < arch.layer_count(); ++l) {
        for (auto& w : p.weights(l)) w = v += 0.25;
        for (auto& b : p.biases(l)) b = v += 0.25;
    }
    std::vector<double> snapshot = p.flat();
    NetworkParams q(arch);
    q.flat() = snapshot;
    for (int l = 0; l < arch.layer_count(); ++l) {
        REQUIRE(q.weights(l).size() == p.weights(l).size());
        for (std::size_t i = 0; i < q.weights(l).size(); ++i)
            CHECK(q.weights(l)[i] == p.weights(l)[i]);
    }
}

TEST_CASE("single linear neuron") {
    Architecture arch{1, {}, 1};
    NetworkParams p(arch);
    p.weights(0)[0] = 2.0;
    p.biases(0)[0] = 0.5;
    CHECK(eval1(p, 1.0) == doctest::Approx(2.5));
}

TEST_CASE("zero network is identically zero") {
    Architecture arch{1, {8, 8}, 1};
    NetworkParams p(arch);
    for (double x : {-1.0, 0.0, 0.3, 2.0}) CHECK(eval1(p, x) == 0.0);
}

TEST_CASE("one-unit tanh network value and jets") {
    // u(x) = tanh(2x + 0.5)
    Architecture arch{1, {1}, 1};
    NetworkParams p(arch);
    p.weights(0)[0] = 2.0;
    p.biases(0)[0] = 0.5;
    p.weights(1)[0] = 1.0;

    CHECK(eval1(p, 0.0) == doctest::Approx(0.46211715726000974).epsilon(1e-12));

    const auto jets = forward_jets(p, std::vector<double>{0.0});
    CHECK(jets[0].value == doctest::Approx(0.46211715726000974).epsilon(1e-12));
    CHECK(jets[0].d1 == doctest::Approx(1.5728954659318548).epsilon(1e-10));
    CHECK(jets[0].d2 == doctest::Approx(-2.907447925534349).epsilon(1e-10));
}

TEST_CASE("pure tanh(x) jet at the origin") {
    Architecture arch{1, {1}, 1};
    NetworkParams p(arch);
    p.weights(0)[0] = 1.0;
    p.weights(1)[0] = 1.0;
    const auto jets = forward_jets(p, std::vector<double>{0.0});
    CHECK(jets[0].value == doctest::Approx(0.0));
    CHECK(jets[0].d1 == doctest::Approx(1.0));
    CHECK(jets[0].d2 == doctest::Approx(0.0));
}

TEST_CASE("affine network has zero second derivative") {
    Architecture arch{1, {}, 1};
    NetworkParams p(arch);
    p.weights(0)[0] = -3.7;
    p.biases(0)[0] = 1.1;
    const auto jets = forward_jets(p, std::vector<double>{0.42});
    CHECK(jets[0].d1 == doctest::Approx(-3.7));
    CHECK(jets[0].d2 == doctest::Approx(0.0));
}

TEST_CASE("jets match finite differences on random networks") {
    Rng rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        Architecture arch{1, {5, 4}, 1};
        NetworkParams p = NetworkParams::xavier(arch, rng);
        for (auto& b : p.biases(0)) b = rng.uniform(-0.5, 0.5);
        const double x0 = rng.uniform(-1.0, 1.0);

        const auto jets = forward_jets(p, {&x0, 1});
        const double h = 1e-5;
        const double fp = eval1(p, x0 + h), fm = eval1(p, x0 - h), f0 = eval1(p, x0);
        const double fd1 = (fp - fm) / (2 * h);
        const double fd2 = (fp - 2 * f0 + fm) / (h * h);
        CHECK(jets[0].value == doctest::Approx(f0).epsilon(1e-12));
        CHECK(jets[0].d1 == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(jets[0].d2 ==
              doctest::Approx(fd2).epsilon(1e-4).scale(std::max(1.0, std::abs(fd2))));
    }
}

TEST_CASE("two-input jets match finite differences per axis") {
    Rng rng(99);
    Architecture arch{2, {6, 5}, 2};
    NetworkParams p = NetworkParams::xavier(arch, rng);
    const double pt[2] = {0.3, -0.4};
    const auto jets = forward_jets(p, {pt, 2});
    const double h = 1e-5;
    for (int comp = 0; comp < 2; ++comp) {
        for (int axis = 0; axis < 2; ++axis) {
            auto f = [&](double t) {
                double q[2] = {pt[0], pt[1]};
                q[axis] = t;
                return forward_values(p, {q, 2})[comp];
            };
            const double x0 = pt[axis];
            const double fd1 = (f(x0 + h) - f(x0 - h)) / (2 * h);
            const double fd2 = (f(x0 + h) - 2 * f(x0) + f(x0 - h)) / (h * h);
            const auto& j = jets[comp * 2 + axis];
            CHECK(j.d1 == doctest::Approx(fd1).epsilon(1e-6));
            CHECK(j.d2 == doctest::Approx(fd2).epsilon(1e-4).scale(std::max(1.0, std::abs(fd2))));
        }
    }
}

TEST_CASE("xavier init is deterministic and bounded") {
    Architecture arch{1, {32, 32, 32}, 1};
    Rng r1(7), r2(7);
    NetworkParams a = NetworkParams::xavier(arch, r1);
    NetworkParams b = NetworkParams::xavier(arch, r2);
    CHECK(a.flat() == b.flat());
    bool any_bias_nonzero = false;
    for (int l = 0; l < arch.layer_count(); ++l) {
        const auto& lp = a.plans()[l];
        const double bound = std::sqrt(6.0 / (lp.in + lp.out));
        for (double w : a.weights(l)) CHECK(std::abs(w) <= bound);
        for (double bias : a.biases(l)) {
            CHECK(std::abs(bias) <= bound);
            any_bias_nonzero |= (bias != 0.0);
        }
    }
    // biases are drawn, not zeroed: tanh units must not all inflect at the origin
    CHECK(any_bias_nonzero);
}

TEST_CASE("zero-head init leaves only the final layer zero") {
    Architecture arch{3, {4, 4}, 2};
    Rng rng(5);
    NetworkParams p = NetworkParams::xavier_zero_head(arch, rng);
    bool any_nonzero = false;
    for (double w : p.weights(0)) any_nonzero |= (w != 0.0);
    CHECK(any_nonzero);
    for (double w : p.weights(2)) CHECK(w == 0.0);
    for (double b : p.biases(2)) CHECK(b == 0.0);
}

TEST_CASE("dropout masks scale surviving activations") {
    // one hidden layer, all-surviving mask at p=0.5 doubles the hidden
    // activations relative to the plain forward, pre-output
    Architecture arch{1, {3}, 1};
    Rng rng(11);
    NetworkParams p = NetworkParams::xavier(arch, rng);
    p.biases(1)[0] = 0.0; // output bias would spoil the exact doubling below

    JetPass pass(arch, ChannelLayout::values_only());
    Trace plain, masked;
    pass.prepare(plain);
    pass.prepare(masked);
    plain.input()[0] = masked.input()[0] = 0.7;
    masked.masks.assign(3, 1);
    masked.keep_scale = 2.0; // p = 0.5
    pass.forward(p.flat(), plain);
    pass.forward(p.flat(), masked);
    CHECK(pass.outputs(masked)[0] == doctest::Approx(2.0 * pass.outputs(plain)[0]));

    // all-dropped mask kills the signal; only the output bias survives
    masked.masks.assign(3, 0);
    pass.forward(p.flat(), masked);
    CHECK(pass.outputs(masked)[0] == doctest::Approx(p.biases(1)[0]));
}

TEST_CASE("invalid architectures are rejected") {
    CHECK_THROWS_AS(param_count(Architecture{0, {3}, 1}), ConfigError);
    CHECK_THROWS_AS(param_count(Architecture{1, {0}, 1}), ConfigError);
}
