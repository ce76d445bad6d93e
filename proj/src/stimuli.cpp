#include "mg/stimuli.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mg/geometry.hpp"

namespace mg {

namespace {

// Fraction of supersample points of pixel (x, y) for which inside(px, py) holds.
template <typename Pred>
double coverage(int x, int y, int ss, Pred inside) {
    int hits = 0;
    for (int i = 0; i < ss; ++i)
        for (int j = 0; j < ss; ++j) {
            const double px = x + (i + 0.5) / ss - 0.5;
            const double py = y + (j + 0.5) / ss - 0.5;
            if (inside(px, py)) ++hits;
        }
    return static_cast<double>(hits) / (ss * ss);
}

}  // namespace

StimulusVolume plane_wave(int nx, int ny, int nt, double p_modulus, double theta, double v, double phase) {
    if (!(p_modulus > 0.0) || p_modulus > kPi) throw std::domain_error("plane_wave: |p| must lie in (0, pi]");
    if (std::abs(p_modulus * v) > kPi) throw std::domain_error("plane_wave: temporal frequency aliases");
    StimulusVolume f(nx, ny, nt);
    const double c = std::cos(theta), s = std::sin(theta);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t)
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y)
                f.at(x, y, t) = 0.5 + 0.5 * std::cos(p_modulus * (x * c + y * s) - p_modulus * v * t + phase);
    return f;
}

StimulusVolume translating_bar(int nx, int ny, int nt, double theta, double v, double width, int supersample) {
    if (!(width > 0.0)) throw std::invalid_argument("translating_bar: width must be positive");
    if (std::abs(v) > 1.0) throw std::domain_error("translating_bar: speed above one pixel per frame aliases");
    StimulusVolume f(nx, ny, nt);
    const double c = std::cos(theta), s = std::sin(theta);
    const double u_mid = 0.5 * (nx - 1) * c + 0.5 * (ny - 1) * s;
    const double t_mid = 0.5 * (nt - 1);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) {
        const double uc = u_mid + v * (t - t_mid);
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y)
                f.at(x, y, t) = coverage(x, y, supersample, [&](double px, double py) {
                    return std::abs(px * c + py * s - uc) <= 0.5 * width;
                });
    }
    return f;
}

void CircleSpec::validate() const {
    if (nx <= 0 || ny <= 0 || n_frames <= 0) throw std::invalid_argument("circle: dims must be positive");
    if (!(radius > 0.0) || !(width > 0.0) || n_segments <= 0 || supersample <= 0)
        throw std::invalid_argument("circle: radius, width, segments and supersampling must be positive");
    if (!(gap_fraction > 0.0 && gap_fraction < 1.0)) throw std::invalid_argument("circle: gap fraction must lie in (0,1)");
}

double CircleStimulus::normal_velocity(double phi) const { return spec.vx * std::cos(phi) + spec.vy * std::sin(phi); }

bool CircleStimulus::in_gap(double phi) const {
    const double u = wrap_angle(phi) / kTwoPi * spec.n_segments;
    return u - std::floor(u) >= 1.0 - spec.gap_fraction;
}

std::vector<double> CircleStimulus::gap_centers() const {
    std::vector<double> c;
    for (int k = 0; k < spec.n_segments; ++k)
        c.push_back(kTwoPi * (k + 1.0 - 0.5 * spec.gap_fraction) / spec.n_segments);
    return c;
}

CircleStimulus dashed_circle(const CircleSpec& spec) {
    spec.validate();
    CircleStimulus out;
    out.spec = spec;
    const double t_mid = 0.5 * (spec.n_frames - 1);
    out.cx0 = 0.5 * (spec.nx - 1) - spec.vx * t_mid;
    out.cy0 = 0.5 * (spec.ny - 1) - spec.vy * t_mid;
    const double reach = spec.radius + spec.width;
    for (double t : {0.0, double(spec.n_frames - 1)}) {
        const auto c = out.center(t);
        if (c[0] - reach < 0 || c[0] + reach > spec.nx - 1 || c[1] - reach < 0 || c[1] + reach > spec.ny - 1)
            throw std::domain_error("dashed_circle: circle leaves the frame");
    }
    out.volume = StimulusVolume(spec.nx, spec.ny, spec.n_frames);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < spec.n_frames; ++t) {
        const auto c = out.center(t);
        for (int x = 0; x < spec.nx; ++x)
            for (int y = 0; y < spec.ny; ++y) {
                if (std::abs(std::hypot(x - c[0], y - c[1]) - spec.radius) > 0.5 * spec.width + 1.0) continue;
                out.volume.at(x, y, t) = coverage(x, y, spec.supersample, [&](double px, double py) {
                    const double dx = px - c[0], dy = py - c[1];
                    if (std::abs(std::hypot(dx, dy) - spec.radius) > 0.5 * spec.width) return false;
                    return !out.in_gap(std::atan2(dy, dx));
                });
            }
    }
    return out;
}

void TrajectorySpec::validate() const {
    if (nx <= 0 || ny <= 0 || n_frames <= 0) throw std::invalid_argument("trajectory: dims must be positive");
    if (!(eccentricity >= 1.0)) throw std::invalid_argument("trajectory: eccentricity must be >= 1");
    if (!(minor_axis > 0.0) || !(speed >= 0.0) || supersample <= 0)
        throw std::invalid_argument("trajectory: minor axis, speed and supersampling must be positive");
    if (delta_t < 0) throw std::invalid_argument("trajectory: delta_t must be non-negative");
    const int first = t1 < 0 ? (n_frames - delta_t) / 2 : t1;
    if (first < 1 || first + delta_t >= n_frames)
        throw std::invalid_argument("trajectory: t1 + delta_t must lie inside the movie");
}

std::array<double, 2> TrajectoryStimulus::position(double t) const {
    const double th = direction(t);
    const double d = (t - turn_time) * spec.speed;
    return {turn_point[0] + d * std::cos(th), turn_point[1] + d * std::sin(th)};
}

double TrajectoryStimulus::direction(double t) const {
    return t < turn_time ? spec.theta_init : spec.theta_init + spec.delta_theta;
}

TrajectoryStimulus occluded_trajectory(const TrajectorySpec& spec) {
    spec.validate();
    TrajectoryStimulus out;
    out.spec = spec;
    out.t1 = spec.t1 < 0 ? (spec.n_frames - spec.delta_t) / 2 : spec.t1;
    out.t2 = out.t1 + spec.delta_t;
    // midway between the last frame before the occlusion and the first frame after it
    out.turn_time = 0.5 * (out.t1 - 1 + out.t2);
    // Center the bounding box of the whole path in the frame.
    out.turn_point = {0.0, 0.0};
    double lo[2] = {0.0, 0.0}, hi[2] = {0.0, 0.0};
    for (int t = 0; t < spec.n_frames; ++t) {
        const auto p = out.position(t);
        for (int i = 0; i < 2; ++i) {
            lo[i] = std::min(lo[i], p[i]);
            hi[i] = std::max(hi[i], p[i]);
        }
    }
    out.turn_point = {0.5 * (spec.nx - 1) - 0.5 * (lo[0] + hi[0]), 0.5 * (spec.ny - 1) - 0.5 * (lo[1] + hi[1])};
    const double a_minor = 0.5 * spec.minor_axis;
    const double a_major = a_minor * spec.eccentricity;
    for (int t = 0; t < spec.n_frames; ++t) {
        const auto p = out.position(t);
        if (p[0] - a_major < 0 || p[0] + a_major > spec.nx - 1 || p[1] - a_major < 0 || p[1] + a_major > spec.ny - 1)
            throw std::domain_error("occluded_trajectory: object leaves the frame");
    }
    out.s3 = StimulusVolume(spec.nx, spec.ny, spec.n_frames);
    out.s1 = out.s3;
    out.s2 = out.s3;
#pragma omp parallel for schedule(static)
    for (int t = 0; t < spec.n_frames; ++t) {
        if (t >= out.t1 && t < out.t2) continue;
        const auto p = out.position(t);
        const double th = out.direction(t);
        const double c = std::cos(th), s = std::sin(th);
        for (int x = 0; x < spec.nx; ++x)
            for (int y = 0; y < spec.ny; ++y) {
                if (std::hypot(x - p[0], y - p[1]) > a_major + 1.0) continue;
                const double val = coverage(x, y, spec.supersample, [&](double px, double py) {
                    const double dx = px - p[0], dy = py - p[1];
                    const double along = (dx * c + dy * s) / a_minor;
                    const double across = (-dx * s + dy * c) / a_major;
                    return along * along + across * across <= 1.0;
                });
                out.s3.at(x, y, t) = val;
                if (t < out.t1) out.s1.at(x, y, t) = val;
                else out.s2.at(x, y, t) = val;
            }
    }
    return out;
}

}  // namespace mg
