#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mg/geometry.hpp"
#include "mg/volume.hpp"

namespace mg {

enum class SdeMode { Contour, Trajectory };

std::string mode_name(SdeMode m);
SdeMode mode_from_name(const std::string& s);

// Stochastic process driving the kernels. Time is the evolution parameter; positions are
// reported in pixels (and s in frames) after multiplying by scale.
//   contour:    d gamma = X1 dt + sqrt(2) kappa X2 dW1 + sqrt(2) alpha X4 dW2
//   trajectory: d gamma = X5 dt + sqrt(2) kappa X2 dW1 + sqrt(2) alpha X4 dW2
struct SdeSpec {
    SdeMode mode = SdeMode::Contour;
    double kappa = 2.0;
    double alpha = 1.0;
    double dt = 0.0;
    double T = 0.0;
    std::int64_t n_paths = 100000;
    std::uint64_t seed = 0;
    double scale = 1.0;  // pixels (frames) per unit of evolution parameter

    void validate() const;
    int n_steps() const;
};

// T = pi / (2 kappa^2), dt = T / 200, scale = reach / T. reach is the spatial half-width in
// pixels (contour) or the kernel's time extent in frames (trajectory).
SdeSpec make_sde(SdeMode mode, double kappa, double alpha, double reach, std::int64_t n_paths,
                 std::uint64_t seed);

class CflError : public std::domain_error {
   public:
    using std::domain_error::domain_error;
};

// Relative-coordinate lattice of a kernel. Spatial nodes at -R..R pixels, delta-s nodes at
// 0..n_s-1 frames (n_s = 1 in contour mode), theta bins 2 pi i / n_theta (relative), and
// v nodes v_min + j v_step (relative in contour mode, absolute in trajectory mode).
struct KernelLattice {
    SdeMode mode = SdeMode::Contour;
    int half_width = 15;
    int n_s = 1;
    int n_theta = 16;
    int n_v = 17;
    double v_min = -2.0;
    double v_step = 0.25;

    void validate() const;
    int n_q() const { return 2 * half_width + 1; }
    std::size_t cells() const {
        return static_cast<std::size_t>(n_q()) * n_q() * n_s * n_theta * n_v;
    }
    std::size_t index(int i1, int i2, int is, int ith, int iv) const {
        return ((((static_cast<std::size_t>(i1) * n_q() + i2) * n_s + is) * n_theta + ith) * n_v) + iv;
    }
    double theta(int i) const { return kTwoPi * i / n_theta; }
    double v(int j) const { return v_min + j * v_step; }
    bool same_shape(const KernelLattice& o) const;
};

// Contour lattice matching a grid: delta v spans [-2 v_max, 2 v_max] on the grid's v step.
KernelLattice contour_lattice(const ManifoldGrid& g, int half_width);
// Trajectory lattice matching a grid: v is absolute on the grid's v nodes.
KernelLattice trajectory_lattice(const ManifoldGrid& g, int half_width, int n_s);

// Time-integrated passage histogram. Contour mode has one member; trajectory mode has one member
// per source velocity (member_v), each estimated from (0, 0, 0, 0, member_v).
// Density of a cell = weights / totals[member]; weights hold exact path-step counts when
// exact_counts is set.
struct KernelGrid {
    SdeSpec spec;
    KernelLattice lattice;
    std::vector<double> member_v;
    std::vector<float> weights;
    std::vector<double> totals;
    bool exact_counts = true;

    int n_members() const { return static_cast<int>(member_v.size()); }
    std::size_t member_offset(int m) const { return static_cast<std::size_t>(m) * lattice.cells(); }
    double value(int m, std::size_t cell) const {
        return totals[m] > 0 ? weights[member_offset(m) + cell] / totals[m] : 0.0;
    }
    double mass(int m) const;
    double max_value(int m) const;
    // Member whose source velocity is nearest to v.
    int member_for(double v) const;
};

std::uint64_t splitmix64(std::uint64_t x);
// Independent, reproducible stream for a given (seed, stream index).
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t stream);

// Euler-Maruyama path including the start; n_steps + 1 states.
std::vector<ManifoldPoint> simulate_path(const SdeSpec& spec, const ManifoldPoint& start, std::mt19937_64& rng);

KernelGrid estimate_gamma0(const SdeSpec& spec, const KernelLattice& lat);
KernelGrid estimate_gamma(const SdeSpec& spec, const KernelLattice& lat);
// Serial single-histogram versions of the estimators; must agree exactly.
KernelGrid estimate_gamma0_reference(const SdeSpec& spec, const KernelLattice& lat);
KernelGrid estimate_gamma_reference(const SdeSpec& spec, const KernelLattice& lat);

// Per-parameter densities: mass of the paths started at (0, 0, 0, 0, v0) in each (q1, q2, theta, v)
// lattice cell at the given step indices (fraction of all paths; mass off the lattice is dropped).
std::vector<std::vector<double>> parameter_slices(const SdeSpec& spec, const KernelLattice& lat, double v0,
                                                  const std::vector<int>& steps);

struct FpOptions {
    int refine_q = 3;      // fine cells per lattice cell along q1 and q2 (odd)
    int refine_theta = 3;  // odd
    int refine_v = 3;      // odd
    int pad_q = 2;         // extra lattice cells beyond the support, per side
    int pad_v = 4;
    double dt = 0.0;       // 0 picks a stable step automatically
    double safety = 0.9;
};

// Finite-difference Fokker-Planck solve on a refined, padded copy of the lattice, from a point mass
// at (0, 0, 0, 0, v0). Flux-limited upwind transport, central diffusion in theta (periodic) and
// v (zero flux), zero-flux outer boundary. Returns cell masses on the (q1, q2, theta, v) lattice
// at each requested parameter time, in the layout of parameter_slices.
std::vector<std::vector<double>> fp_reference(const SdeSpec& spec, const KernelLattice& lat, double v0,
                                              const std::vector<double>& times, const FpOptions& opt = {});

// Multilinear interpolation on the lattice, periodic in theta, zero outside the support.
// Contour kernels take the relative element (q, theta, v).
double kernel_lookup(const KernelGrid& K, const ContourPoint& rel);
// Trajectory kernels take (R_{-theta_src} dq, ds, dtheta, v_target) for the given member.
double kernel_lookup(const KernelGrid& K, int member, const ManifoldPoint& rel);

// Cells of a contour lattice within `dilation` cells (per axis, theta periodic) of the sampled fan:
// points at times t in [0, T] of the constant-coefficient curves from the origin whose total
// turning k and velocity change c over the horizon satisfy |k| <= 2 kappa sqrt(T) and
// |c| <= 2 alpha sqrt(T) (curves of X1 + (k / T) X2 + (c / T) X4), positions in lattice units.
std::vector<char> fan_neighborhood(const SdeSpec& spec, const KernelLattice& lat, int dilation = 2);
// Fraction of the contour kernel's mass inside fan_neighborhood.
double fan_concentration(const KernelGrid& K, int dilation = 2);

// Zero every weight below rel * max of its member.
void truncate_kernel(KernelGrid& K, double rel);

// Histogram of paths started at an absolute grid element, deposited on the grid nodes and
// normalized to unit mass. Contour mode fills the single frame of a one-frame grid.
LiftedActivity estimate_on_grid(const SdeSpec& spec, const ManifoldGrid& grid, const ManifoldPoint& start);

}  // namespace mg
