#include "mg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mg/geometry.hpp"

namespace mg {

StimulusVolume::StimulusVolume(int nx_, int ny_, int nt_, double fill) : nx(nx_), ny(ny_), nt(nt_) {
    if (nx <= 0 || ny <= 0 || nt <= 0) throw std::invalid_argument("stimulus dims must be positive");
    data.assign(static_cast<std::size_t>(nx) * ny * nt, fill);
}

void ManifoldGrid::validate() const {
    if (nx <= 0 || ny <= 0 || nt <= 0) throw std::invalid_argument("grid dims must be positive");
    if (!(spacing > 0.0) || !(time_spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    if (n_theta < 4) throw std::invalid_argument("n_theta must be at least 4");
    if (n_v < 1 || n_v % 2 == 0) throw std::invalid_argument("n_v must be odd");
    if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
}

double ManifoldGrid::theta(int i) const { return kTwoPi * i / n_theta; }

double ManifoldGrid::v(int j) const {
    if (n_v == 1) return 0.0;
    return -v_max + 2.0 * v_max * j / (n_v - 1);
}

bool ManifoldGrid::same_shape(const ManifoldGrid& o) const {
    return nx == o.nx && ny == o.ny && nt == o.nt && spacing == o.spacing &&
           time_spacing == o.time_spacing && t0 == o.t0 && n_theta == o.n_theta && n_v == o.n_v &&
           v_max == o.v_max;
}

int ManifoldGrid::nearest_theta(double th) const {
    int i = static_cast<int>(std::lround(wrap_angle(th) / kTwoPi * n_theta));
    return i % n_theta;
}

int ManifoldGrid::nearest_v(double vv) const {
    if (n_v == 1) return 0;
    const double step = 2.0 * v_max / (n_v - 1);
    long j = std::lround((vv + v_max) / step);
    return static_cast<int>(std::clamp<long>(j, 0, n_v - 1));
}

std::string kind_name(ActivityKind k) {
    switch (k) {
        case ActivityKind::Raw: return "F";
        case ActivityKind::Thresholded: return "F_T";
        case ActivityKind::Facilitation: return "P";
        case ActivityKind::Total: return "F0";
        case ActivityKind::Difference: return "F_fac";
    }
    return "F";
}

ActivityKind kind_from_name(const std::string& s) {
    if (s == "F") return ActivityKind::Raw;
    if (s == "F_T") return ActivityKind::Thresholded;
    if (s == "P") return ActivityKind::Facilitation;
    if (s == "F0") return ActivityKind::Total;
    if (s == "F_fac") return ActivityKind::Difference;
    throw std::invalid_argument("unknown activity kind: " + s);
}

LiftedActivity::LiftedActivity(const ManifoldGrid& g, ActivityKind k, double fill) : grid(g), kind(k) {
    grid.validate();
    values.assign(grid.size(), fill);
}

LiftedActivity slice_frame(const LiftedActivity& a, int frame) {
    if (frame < 0 || frame >= a.grid.nt) throw std::out_of_range("slice_frame: frame out of range");
    ManifoldGrid g = a.grid;
    g.nt = 1;
    g.t0 = a.grid.t(frame);
    LiftedActivity out(g, a.kind);
    const std::size_t nf = a.grid.n_fibers();
    for (int x = 0; x < g.nx; ++x)
        for (int y = 0; y < g.ny; ++y) {
            const double* src = &a.values[a.base_index(x, y, frame) * nf];
            std::copy(src, src + nf, &out.values[out.base_index(x, y, 0) * nf]);
        }
    return out;
}

}  // namespace mg
