#include "pde.hpp"

#include <cmath>

#include "errors.hpp"

namespace epinn::pde {

namespace {

constexpr double kPi = 3.14159265358979323846;

inline double square(double x) { return x * x; }
using ad::square;
using ad::tanh;
using std::tanh;

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = a;
        return v;
    }
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

// n points strictly inside (a, b), evenly spaced
std::vector<double> interior_linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * (i + 1) / (n + 1);
    return v;
}

// --------------------------------------------------------------------------
// 1D Poisson: lambda * u_xx = f on [-1,1], u = sin^3(6x)
// --------------------------------------------------------------------------
struct Poisson1d : Problem {
    static constexpr double lambda = 0.01;

    const char* name() const override { return "poisson1d"; }
    int dim() const override { return 1; }
    bool time_dependent() const override { return false; }
    std::array<double, 2> lo() const override { return {-1.0, 0.0}; }
    std::array<double, 2> hi() const override { return {1.0, 0.0}; }
    std::vector<bool> want_second() const override { return {true}; }

    double exact(const double* x) const override {
        const double s = std::sin(6.0 * x[0]);
        return s * s * s;
    }
    void exact_jets(const double* x, Jet* j) const override {
        const double s = std::sin(6.0 * x[0]);
        const double c = std::cos(6.0 * x[0]);
        j[0].value = s * s * s;
        j[0].d1 = 18.0 * s * s * c;
        j[0].d2 = 216.0 * s * c * c - 108.0 * s * s * s;
    }
    template <class S>
    S op(const FieldState<S>& s) const {
        return lambda * s.dxx;
    }
    double residual(const FieldState<double>& s, double, double f) const override { return op(s) - f; }
    ad::Var residual(const FieldState<ad::Var>& s, ad::Var, double f) const override { return op(s) - f; }

    int default_colloc() const override { return 100; }
    int default_sensors() const override { return 32; }
};

// --------------------------------------------------------------------------
// 1D nonlinear Poisson: lambda * u_xx + k * tanh(u) = f on [-0.7,0.7]
// --------------------------------------------------------------------------
struct NonlinearPoisson1d : Problem {
    static constexpr double lambda = 0.01;
    static constexpr double k = 0.7;

    const char* name() const override { return "nonlinear_poisson1d"; }
    int dim() const override { return 1; }
    bool time_dependent() const override { return false; }
    std::array<double, 2> lo() const override { return {-0.7, 0.0}; }
    std::array<double, 2> hi() const override { return {0.7, 0.0}; }
    std::vector<bool> want_second() const override { return {true}; }

    double exact(const double* x) const override {
        const double s = std::sin(6.0 * x[0]);
        return s * s * s;
    }
    void exact_jets(const double* x, Jet* j) const override {
        const double s = std::sin(6.0 * x[0]);
        const double c = std::cos(6.0 * x[0]);
        j[0].value = s * s * s;
        j[0].d1 = 18.0 * s * s * c;
        j[0].d2 = 216.0 * s * c * c - 108.0 * s * s * s;
    }
    template <class S>
    S op(const FieldState<S>& s) const {
        return lambda * s.dxx + k * tanh(s.u);
    }
    double residual(const FieldState<double>& s, double, double f) const override { return op(s) - f; }
    ad::Var residual(const FieldState<ad::Var>& s, ad::Var, double f) const override { return op(s) - f; }

    int default_colloc() const override { return 100; }
    int default_sensors() const override { return 32; }
};

// --------------------------------------------------------------------------
// Darcy-Brinkman porous channel on [0,1]:
//   -(nu_e/phi) u_xx + (nu/K) u = f,  f = 1
//   u = 1 - cosh(r(x-1/2))/cosh(r/2), r = sqrt(nu*phi/(nu_e*K)) = 20
// --------------------------------------------------------------------------
struct Porous1d : Problem {
    static constexpr double nu_e = 1e-3;
    static constexpr double nu = 1e-3;
    static constexpr double K = 1e-3;
    static constexpr double phi = 0.4;
    static constexpr double forcing = 1.0;

    static double r() { return std::sqrt(nu * phi / (nu_e * K)); }

    const char* name() const override { return "porous1d"; }
    int dim() const override { return 1; }
    bool time_dependent() const override { return false; }
    std::array<double, 2> lo() const override { return {0.0, 0.0}; }
    std::array<double, 2> hi() const override { return {1.0, 0.0}; }
    std::vector<bool> want_second() const override { return {true}; }

    double exact(const double* x) const override {
        const double rr = r();
        return 1.0 - std::cosh(rr * (x[0] - 0.5)) / std::cosh(0.5 * rr);
    }
    void exact_jets(const double* x, Jet* j) const override {
        const double rr = r();
        const double denom = std::cosh(0.5 * rr);
        const double a = rr * (x[0] - 0.5);
        j[0].value = 1.0 - std::cosh(a) / denom;
        j[0].d1 = -rr * std::sinh(a) / denom;
        j[0].d2 = -rr * rr * std::cosh(a) / denom;
    }
    template <class S>
    S op(const FieldState<S>& s) const {
        return (-nu_e / phi) * s.dxx + (nu / K) * s.u;
    }
    double residual(const FieldState<double>& s, double, double f) const override { return op(s) - f; }
    ad::Var residual(const FieldState<ad::Var>& s, ad::Var, double f) const override { return op(s) - f; }

    int default_colloc() const override { return 64; }
    int default_sensors() const override { return 32; }
};

// --------------------------------------------------------------------------
// 2D nonlinear Poisson on [-1,1]^2:
//   lambda * (u_xx + u_yy) + u (u^2 - 1) = f,  u = sin(pi x) sin(pi y)
// --------------------------------------------------------------------------
struct NonlinearPoisson2d : Problem {
    static constexpr double lambda = 0.01;

    const char* name() const override { return "nonlinear_poisson2d"; }
    int dim() const override { return 2; }
    bool time_dependent() const override { return false; }
    std::array<double, 2> lo() const override { return {-1.0, -1.0}; }
    std::array<double, 2> hi() const override { return {1.0, 1.0}; }
    std::vector<bool> want_second() const override { return {true, true}; }

    double exact(const double* x) const override {
        return std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
    }
    void exact_jets(const double* x, Jet* j) const override {
        const double sx = std::sin(kPi * x[0]), cx = std::cos(kPi * x[0]);
        const double sy = std::sin(kPi * x[1]), cy = std::cos(kPi * x[1]);
        const double u = sx * sy;
        j[0].value = u;
        j[0].d1 = kPi * cx * sy;
        j[0].d2 = -kPi * kPi * u;
        j[1].value = u;
        j[1].d1 = kPi * sx * cy;
        j[1].d2 = -kPi * kPi * u;
    }
    template <class S>
    S op(const FieldState<S>& s) const {
        return lambda * (s.dxx + s.dyy) + s.u * (square(s.u) - 1.0);
    }
    double residual(const FieldState<double>& s, double, double f) const override { return op(s) - f; }
    ad::Var residual(const FieldState<ad::Var>& s, ad::Var, double f) const override { return op(s) - f; }

    int default_colloc() const override { return 1024; }
    int default_sensors() const override { return 32; }
};

// --------------------------------------------------------------------------
// Inverse heat on [0,1] x [0,1]:
//   u_t - kappa u_xx = 0, kappa_true = 0.1, u = sin(pi x) exp(-kappa pi^2 t)
// --------------------------------------------------------------------------
struct HeatInverse : Problem {
    static constexpr double kappa0 = 0.1;

    const char* name() const override { return "heat_inverse"; }
    int dim() const override { return 2; }
    bool time_dependent() const override { return true; }
    std::array<double, 2> lo() const override { return {0.0, 0.0}; }
    std::array<double, 2> hi() const override { return {1.0, 1.0}; }
    std::vector<bool> want_second() const override { return {true, false}; }
    bool inverse() const override { return true; }
    double kappa_true() const override { return kappa0; }

    double exact(const double* x) const override {
        return std::sin(kPi * x[0]) * std::exp(-kappa0 * kPi * kPi * x[1]);
    }
    void exact_jets(const double* x, Jet* j) const override {
        const double decay = std::exp(-kappa0 * kPi * kPi * x[1]);
        const double u = std::sin(kPi * x[0]) * decay;
        j[0].value = u;
        j[0].d1 = kPi * std::cos(kPi * x[0]) * decay;
        j[0].d2 = -kPi * kPi * u;
        j[1].value = u;
        j[1].d1 = -kappa0 * kPi * kPi * u;
        j[1].d2 = kappa0 * kappa0 * kPi * kPi * kPi * kPi * u;
    }
    template <class S, class L>
    S op(const FieldState<S>& s, const L& kappa) const {
        return s.dt - kappa * s.dxx;
    }
    double residual(const FieldState<double>& s, double kappa, double f) const override {
        return op(s, kappa) - f;
    }
    ad::Var residual(const FieldState<ad::Var>& s, ad::Var kappa, double f) const override {
        return op(s, kappa) - f;
    }

    int default_colloc() const override { return 1024; }
    int default_sensors() const override { return 64; }
};

// --------------------------------------------------------------------------
// Viscous Burgers on [-1,1] x [0,1]:
//   u_t + u u_x - nu u_xx = f,  nu = 0.01/pi,  u = sin(k x + w t), k = pi, w = 2
// --------------------------------------------------------------------------
struct Burgers : Problem {
    static constexpr double k = kPi;
    static constexpr double w = 2.0;
    static double nu() { return 0.01 / kPi; }

    const char* name() const override { return "burgers"; }
    int dim() const override { return 2; }
    bool time_dependent() const override { return true; }
    std::array<double, 2> lo() const override { return {-1.0, 0.0}; }
    std::array<double, 2> hi() const override { return {1.0, 1.0}; }
    std::vector<bool> want_second() const override { return {true, false}; }
    bool gridded_colloc() const override { return false; }

    double exact(const double* x) const override { return std::sin(k * x[0] + w * x[1]); }
    void exact_jets(const double* x, Jet* j) const override {
        const double ph = k * x[0] + w * x[1];
        const double s = std::sin(ph), c = std::cos(ph);
        j[0].value = s;
        j[0].d1 = k * c;
        j[0].d2 = -k * k * s;
        j[1].value = s;
        j[1].d1 = w * c;
        j[1].d2 = -w * w * s;
    }
    template <class S>
    S op(const FieldState<S>& s) const {
        return s.dt + s.u * s.dx - nu() * s.dxx;
    }
    double residual(const FieldState<double>& s, double, double f) const override { return op(s) - f; }
    ad::Var residual(const FieldState<ad::Var>& s, ad::Var, double f) const override { return op(s) - f; }

    int default_colloc() const override { return 1000; }
    int default_sensors() const override { return 64; }
};

const Poisson1d g_poisson1d;
const NonlinearPoisson1d g_nonlinear_poisson1d;
const Porous1d g_porous1d;
const NonlinearPoisson2d g_nonlinear_poisson2d;
const HeatInverse g_heat_inverse;
const Burgers g_burgers;

const Problem* const g_all[] = {&g_poisson1d,          &g_nonlinear_poisson1d, &g_porous1d,
                                &g_nonlinear_poisson2d, &g_heat_inverse,        &g_burgers};

} // namespace

const Problem& find_problem(const std::string& name) {
    for (const Problem* p : g_all)
        if (name == p->name()) return *p;
    throw ConfigError("unknown problem: " + name);
}

std::vector<std::string> problem_names() {
    std::vector<std::string> names;
    for (const Problem* p : g_all) names.emplace_back(p->name());
    return names;
}

double Problem::manufacture_source(const double* x) const {
    std::vector<Jet> jets(dim());
    exact_jets(x, jets.data());
    const FieldState<double> s = field_from_jets(*this, jets.data());
    return residual(s, kappa_true(), 0.0);
}

FieldState<double> field_from_jets(const Problem& p, const Jet* jets) {
    FieldState<double> s;
    s.u = jets[0].value;
    s.dx = jets[0].d1;
    s.dxx = jets[0].d2;
    if (p.dim() > 1) {
        if (p.time_dependent()) {
            s.dt = jets[1].d1;
        } else {
            s.dy = jets[1].d1;
            s.dyy = jets[1].d2;
        }
    }
    return s;
}

double residual_at(const Problem& p, const Jet* jets, double latent, const double* x) {
    const FieldState<double> s = field_from_jets(p, jets);
    return p.residual(s, latent, p.manufacture_source(x));
}

double sup_norm(const Problem& p) {
    double m = 0.0;
    if (p.dim() == 1) {
        for (double x : linspace(p.lo()[0], p.hi()[0], 1024)) m = std::max(m, std::abs(p.exact(&x)));
    } else {
        const auto xs = linspace(p.lo()[0], p.hi()[0], 128);
        const auto ys = linspace(p.lo()[1], p.hi()[1], 128);
        for (double x : xs)
            for (double y : ys) {
                const double pt[2] = {x, y};
                m = std::max(m, std::abs(p.exact(pt)));
            }
    }
    return m;
}

std::vector<double> validation_grid(const Problem& p, std::size_t* n_out) {
    std::vector<double> pts;
    if (p.dim() == 1) {
        const auto xs = linspace(p.lo()[0], p.hi()[0], 256);
        pts = xs;
        if (n_out) *n_out = xs.size();
    } else {
        const auto xs = linspace(p.lo()[0], p.hi()[0], 64);
        const auto ys = linspace(p.lo()[1], p.hi()[1], 64);
        pts.reserve(xs.size() * ys.size() * 2);
        for (double y : ys)
            for (double x : xs) {
                pts.push_back(x);
                pts.push_back(y);
            }
        if (n_out) *n_out = xs.size() * ys.size();
    }
    return pts;
}

namespace {

void push_point(std::vector<double>& xs, std::vector<double>& us, const Problem& p,
                const double* pt) {
    for (int d = 0; d < p.dim(); ++d) xs.push_back(pt[d]);
    us.push_back(p.exact(pt));
}

} // namespace

PointSet sample_points(const Problem& p, const SampleSpec& spec, std::uint64_t seed) {
    if (spec.rho < 0.0) throw ConfigError("sample_points: rho must be >= 0");
    const int n_colloc = spec.n_colloc > 0 ? spec.n_colloc : p.default_colloc();
    int n_sensors = spec.n_sensors >= 0 ? spec.n_sensors : p.default_sensors();
    if (spec.rho == 0.0) n_sensors = 0;

    PointSet ps;
    ps.dim = p.dim();
    const auto lo = p.lo(), hi = p.hi();

    // collocation
    if (p.dim() == 1) {
        ps.colloc = interior_linspace(lo[0], hi[0], n_colloc);
    } else if (p.gridded_colloc()) {
        const int g = static_cast<int>(std::llround(std::sqrt(static_cast<double>(n_colloc))));
        if (g * g != n_colloc)
            throw ConfigError("sample_points: gridded 2D collocation needs a perfect-square count");
        const auto xs = interior_linspace(lo[0], hi[0], g);
        const auto ys = interior_linspace(lo[1], hi[1], g);
        for (double y : ys)
            for (double x : xs) {
                ps.colloc.push_back(x);
                ps.colloc.push_back(y);
            }
    } else {
        Rng rng(seed, Stream::colloc_location);
        for (int i = 0; i < n_colloc; ++i) {
            ps.colloc.push_back(rng.uniform(lo[0], hi[0]));
            ps.colloc.push_back(rng.uniform(lo[1], hi[1]));
        }
    }

    // boundary (+ initial) with exact targets
    if (p.dim() == 1) {
        const double a = lo[0], b = hi[0];
        push_point(ps.boundary_x, ps.boundary_u, p, &a);
        push_point(ps.boundary_x, ps.boundary_u, p, &b);
    } else if (!p.time_dependent()) {
        const int per_edge = 64;
        const auto xs = linspace(lo[0], hi[0], per_edge);
        const auto ys = linspace(lo[1], hi[1], per_edge);
        for (double x : xs) {
            const double p0[2] = {x, lo[1]}, p1[2] = {x, hi[1]};
            push_point(ps.boundary_x, ps.boundary_u, p, p0);
            push_point(ps.boundary_x, ps.boundary_u, p, p1);
        }
        for (double y : ys) {
            const double p0[2] = {lo[0], y}, p1[2] = {hi[0], y};
            push_point(ps.boundary_x, ps.boundary_u, p, p0);
            push_point(ps.boundary_x, ps.boundary_u, p, p1);
        }
    } else {
        const int per_edge = 64;
        const auto ts = linspace(lo[1], hi[1], per_edge);
        for (double t : ts) {
            const double p0[2] = {lo[0], t}, p1[2] = {hi[0], t};
            push_point(ps.boundary_x, ps.boundary_u, p, p0);
            push_point(ps.boundary_x, ps.boundary_u, p, p1);
        }
        const auto xs = linspace(lo[0], hi[0], per_edge);
        for (double x : xs) {
            const double p0[2] = {x, lo[1]};
            push_point(ps.initial_x, ps.initial_u, p, p0);
        }
        if (std::string(p.name()) == "burgers") {
            // final-time edge also carries exact Dirichlet data
            for (double x : xs) {
                const double p1[2] = {x, hi[1]};
                push_point(ps.initial_x, ps.initial_u, p, p1);
            }
        }
    }

    // sensors: uniform random interior locations, noisy targets
    if (n_sensors > 0) {
        const double sigma = spec.rho * sup_norm(p);
        ps.sigma_noise = sigma;
        Rng loc(seed, Stream::sensor_location);
        Rng noise(seed, Stream::sensor_noise);
        for (int i = 0; i < n_sensors; ++i) {
            double pt[2] = {0.0, 0.0};
            for (int d = 0; d < p.dim(); ++d) pt[d] = loc.uniform(lo[d], hi[d]);
            for (int d = 0; d < p.dim(); ++d) ps.sensor_x.push_back(pt[d]);
            ps.sensor_u.push_back(p.exact(pt) + sigma * noise.normal());
        }
    }

    return ps;
}

} // namespace epinn::pde
