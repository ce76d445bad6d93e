#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "mg/volume.hpp"

namespace mg {

struct GaborParams {
    double q1 = 0.0;
    double q2 = 0.0;
    double s = 0.0;
    double p_modulus = 0.0;
    double theta = 0.0;
    double nu = 0.0;
    double sigma_x = 1.0;
    double sigma_t = 1.0;
};

// sigma_x = 2.5 pi / (4 |p|), sigma_t = pi / (2 |p| v_m).
std::pair<double, double> scales_from_frequency(double p_modulus, double v_max);

std::complex<double> gabor_profile(const GaborParams& g, double x1, double x2, double t);

double sigmoid(double tau, double mu, double beta);

struct FilterOptions {
    double p_modulus = 1.5707963267948966;
    // Envelope truncation in units of sigma along each axis.
    double truncation = 3.0;
    // Width of the Gaussian used for the corrections, relative to the Gabor envelope.
    double dc_width = 1.0;
    // Also cancel the response to the conjugate plane wave, so matched sinusoids give a
    // phase-independent energy.
    bool conjugate_correction = true;
    // Responses with |r| below this fraction of the absolute-value sum are rounding noise and set to 0.
    double noise_floor = 1e-12;
};

// Separable 1D taps of one fiber, shared by the production and reference filters.
struct FiberTaps {
    int rx = 0;  // spatial half-width of the box support (pixels)
    int rt = 0;  // temporal half-width (frames)
    std::vector<std::complex<double>> ex, ey, et;  // conj(Gabor) taps, index d + r
    std::vector<double> wx, wy, wt;                 // corrector envelope taps
    std::vector<double> gx, gy, gt;                 // |Gabor| envelope taps
    std::vector<std::complex<double>> mx, my, mt;   // corrector envelope times e^{i(p.d - nu t)}
    std::complex<double> c;                         // weight of the real corrector
    std::complex<double> d;                         // weight of the modulated corrector
    double norm = 1.0;                              // 0.25 |matched response|
};

FiberTaps fiber_taps(double p_modulus, double theta, double v, double v_max, const FilterOptions& opt);

// Energy lifting F = |sum h f|^2 / norm^2 on every grid node, with
// h = conj(psi) - c gw - d gw e^{i(p.x - nu t)}. Separable, parallel over theta.
LiftedActivity energy_filter(const StimulusVolume& f, const ManifoldGrid& grid, const FilterOptions& opt = {});
// Same quantity from the direct per-node triple sum. Serial; used to validate energy_filter.
LiftedActivity energy_filter_reference(const StimulusVolume& f, const ManifoldGrid& grid,
                                       const FilterOptions& opt = {});

LiftedActivity threshold_activity(const LiftedActivity& F, double mu, double beta);

struct LiftPoint {
    int x = 0;
    int y = 0;
    int t = 0;
    int theta_bin = 0;
    int v_bin = 0;
    double theta = 0.0;
    double v = 0.0;
    double value = 0.0;
};

// Argmax fiber at every base node whose maximum exceeds floor. Ties go to the smallest bin index.
std::vector<LiftPoint> lift_surface(const LiftedActivity& F, double floor);

}  // namespace mg
