#pragma once

#include <array>
#include <vector>

#include "mg/volume.hpp"

namespace mg {

// 0.5 + 0.5 cos(p (x cos theta + y sin theta) - p v t + phase).
StimulusVolume plane_wave(int nx, int ny, int nt, double p_modulus, double theta, double v, double phase = 0.0);

// Bar of the given width with its long axis orthogonal to theta, translating at v along
// (cos theta, sin theta); passes through the image center at the middle frame.
StimulusVolume translating_bar(int nx, int ny, int nt, double theta, double v, double width, int supersample = 4);

struct CircleSpec {
    int nx = 200;
    int ny = 200;
    int n_frames = 64;
    double radius = 50.0;
    int n_segments = 12;
    double width = 2.0;
    double gap_fraction = 0.4;
    double vx = 0.0;
    double vy = 0.5;
    int supersample = 4;

    void validate() const;
};

struct CircleStimulus {
    CircleSpec spec;
    StimulusVolume volume;
    double cx0 = 0.0;  // center at frame 0
    double cy0 = 0.0;

    std::array<double, 2> center(double t) const { return {cx0 + spec.vx * t, cy0 + spec.vy * t}; }
    // Polar angle phi of an arc point: normal orientation is phi, normal velocity V . n(phi).
    double normal_velocity(double phi) const;
    bool in_gap(double phi) const;
    // Angles of the gap centers.
    std::vector<double> gap_centers() const;
};

CircleStimulus dashed_circle(const CircleSpec& spec);

struct TrajectorySpec {
    int nx = 51;
    int ny = 51;
    int n_frames = 102;
    double eccentricity = 2.0;  // major / minor axis ratio
    double minor_axis = 2.0;    // full length along the direction of motion
    double speed = 0.5;
    double theta_init = 0.7853981633974483;
    int t1 = -1;  // first hidden frame; -1 centers the occlusion in time
    int delta_t = 12;
    double delta_theta = 0.5235987755982988;
    int supersample = 4;

    void validate() const;
};

// S3: full stimulus; S1: frames t < t1 only; S2: frames t >= t2 only. Frames t1 <= t < t2 are blank.
// The path turns at turn_time, and its bounding box is centered in the frame.
struct TrajectoryStimulus {
    TrajectorySpec spec;
    int t1 = 0;
    int t2 = 0;
    double turn_time = 0.0;
    std::array<double, 2> turn_point{};
    StimulusVolume s3, s1, s2;

    std::array<double, 2> position(double t) const;
    double direction(double t) const;
};

TrajectoryStimulus occluded_trajectory(const TrajectorySpec& spec);

}  // namespace mg
