#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tape.hpp"

namespace epinn::pde {

// Second-order directional jet of a scalar field along one coordinate axis.
struct Jet {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// Field derivatives an operator may read at a point. Only the slots relevant
// to the problem's axes are populated (dy/dyy for a second spatial axis, dt
// for a time axis).
template <class S>
struct FieldState {
    S u{};
    S dx{};
    S dxx{};
    S dy{};
    S dyy{};
    S dt{};
};

// Sampled training data for one experiment. Initial-condition points are kept
// in their own channel; the boundary loss averages over boundary+initial
// jointly.
struct PointSet {
    int dim = 1;
    std::vector<double> colloc;     // [n_colloc * dim]
    std::vector<double> boundary_x; // [n_boundary * dim]
    std::vector<double> boundary_u;
    std::vector<double> initial_x;  // [n_initial * dim]
    std::vector<double> initial_u;
    std::vector<double> sensor_x;   // [n_sensors * dim]
    std::vector<double> sensor_u;   // noisy targets
    double sigma_noise = 0.0;       // rho * sup|u_exact|, as used for the draws

    std::size_t n_colloc() const { return dim ? colloc.size() / dim : 0; }
    std::size_t n_boundary() const { return boundary_u.size(); }
    std::size_t n_initial() const { return initial_u.size(); }
    std::size_t n_sensors() const { return sensor_u.size(); }
};

struct SampleSpec {
    int n_colloc = 0;  // <= 0: problem default
    int n_sensors = -1; // < 0: problem default; ignored (forced 0) when rho == 0
    double rho = 0.0;
};

class Problem {
public:
    virtual ~Problem() = default;

    virtual const char* name() const = 0;
    virtual int dim() const = 0;
    virtual bool time_dependent() const = 0; // axis dim-1 is time
    virtual std::array<double, 2> lo() const = 0;
    virtual std::array<double, 2> hi() const = 0;
    // per-axis: does the operator need a second derivative along this axis?
    virtual std::vector<bool> want_second() const = 0;

    virtual bool inverse() const { return false; }
    virtual double kappa_true() const { return 0.0; }

    virtual double exact(const double* x) const = 0;
    // jets_per_axis must have dim() entries; value is replicated across axes
    virtual void exact_jets(const double* x, Jet* jets_per_axis) const = 0;

    // N_x(u) - f with the caller-supplied source value f
    virtual double residual(const FieldState<double>& s, double kappa, double f) const = 0;
    virtual ad::Var residual(const FieldState<ad::Var>& s, ad::Var kappa, double f) const = 0;

    // Source produced by running the operator on the exact solution's jets.
    double manufacture_source(const double* x) const;

    virtual int default_colloc() const = 0;
    virtual int default_sensors() const = 0;
    // gridded samplers require a perfect-square count in 2D
    virtual bool gridded_colloc() const { return true; }
};

const Problem& find_problem(const std::string& name);
std::vector<std::string> problem_names();

// Fills a FieldState from per-axis jets respecting the problem's axis roles.
FieldState<double> field_from_jets(const Problem& p, const Jet* jets_per_axis);

// Residual of arbitrary jets against the manufactured source at x.
double residual_at(const Problem& p, const Jet* jets_per_axis, double latent, const double* x);

// sup |u_exact| over a dense closure grid (1024 points in 1D, 128x128 in 2D).
double sup_norm(const Problem& p);

// Dense evaluation grid for metrics/bands: 256 points (1D), 64x64 (2D).
std::vector<double> validation_grid(const Problem& p, std::size_t* n_out);

PointSet sample_points(const Problem& p, const SampleSpec& spec, std::uint64_t seed);

} // namespace epinn::pde
