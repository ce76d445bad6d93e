#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mg {

// Movie f(x1, x2, t), unit pixel and frame spacing. Index order (x, y, t), t fastest.
struct StimulusVolume {
    int nx = 0;
    int ny = 0;
    int nt = 0;
    std::vector<double> data;

    StimulusVolume() = default;
    StimulusVolume(int nx_, int ny_, int nt_, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    std::size_t index(int x, int y, int t) const {
        return (static_cast<std::size_t>(x) * ny + y) * nt + t;
    }
    double& at(int x, int y, int t) { return data[index(x, y, t)]; }
    double at(int x, int y, int t) const { return data[index(x, y, t)]; }
};

// Discretization of the manifold. Spatial nodes at x = i * spacing (i < nx), temporal nodes at
// t0 + k * time_spacing (k < nt); theta_i = 2 pi i / n_theta; v_j uniform over [-v_max, v_max].
struct ManifoldGrid {
    int nx = 0;
    int ny = 0;
    int nt = 0;
    double spacing = 1.0;
    double time_spacing = 1.0;
    double t0 = 0.0;
    int n_theta = 16;
    int n_v = 9;
    double v_max = 1.0;

    void validate() const;
    int n_fibers() const { return n_theta * n_v; }
    std::size_t n_base() const { return static_cast<std::size_t>(nx) * ny * nt; }
    std::size_t size() const { return n_base() * n_fibers(); }
    double theta(int i) const;
    double v(int j) const;
    double x(int i) const { return i * spacing; }
    double y(int i) const { return i * spacing; }
    double t(int k) const { return t0 + k * time_spacing; }
    bool same_shape(const ManifoldGrid& o) const;
    // Fiber bin nearest to (theta, v); v clamped to the grid range.
    int nearest_theta(double theta) const;
    int nearest_v(double v) const;
};

enum class ActivityKind { Raw, Thresholded, Facilitation, Total, Difference };

std::string kind_name(ActivityKind k);
ActivityKind kind_from_name(const std::string& s);

// Scalar field over a manifold grid. Index order (x, y, t, theta, v), v fastest.
struct LiftedActivity {
    ManifoldGrid grid;
    ActivityKind kind = ActivityKind::Raw;
    std::vector<double> values;

    LiftedActivity() = default;
    LiftedActivity(const ManifoldGrid& g, ActivityKind k, double fill = 0.0);

    std::size_t base_index(int x, int y, int t) const {
        return (static_cast<std::size_t>(x) * grid.ny + y) * grid.nt + t;
    }
    std::size_t index(int x, int y, int t, int th, int v) const {
        return (base_index(x, y, t) * grid.n_theta + th) * grid.n_v + v;
    }
    double& at(int x, int y, int t, int th, int v) { return values[index(x, y, t, th, v)]; }
    double at(int x, int y, int t, int th, int v) const { return values[index(x, y, t, th, v)]; }
};

// Single-frame 4D slice of a 5D activity (nt becomes 1, t0 set to the frame time).
LiftedActivity slice_frame(const LiftedActivity& a, int frame);

}  // namespace mg
