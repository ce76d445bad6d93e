#pragma once

#include <array>
#include <complex>
#include <numbers>

namespace mg {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Reduce an angle to [0, 2pi).
double wrap_angle(double a);
// Distance between two angles measured on the circle, in [0, pi].
double angle_distance(double a, double b);

using Vec5 = std::array<double, 5>;

// A point (q1, q2, s, theta, v) of the 5D manifold. theta is kept in [0, 2pi).
struct ManifoldPoint {
    double q1 = 0.0;
    double q2 = 0.0;
    double s = 0.0;
    double theta = 0.0;
    double v = 0.0;
};

ManifoldPoint make_point(double q1, double q2, double s, double theta, double v);
Vec5 to_vec(const ManifoldPoint& p);
ManifoldPoint from_vec(const Vec5& x);

// A point (q1, q2, theta, v) of a fixed-time slice.
struct ContourPoint {
    double q1 = 0.0;
    double q2 = 0.0;
    double theta = 0.0;
    double v = 0.0;
};

ContourPoint make_contour_point(double q1, double q2, double theta, double v);

struct ContactCovector {
    Vec5 coeffs{};
    double operator()(const Vec5& x) const;
};

// Horizontal frame at a base point, coefficients in the basis (dq1, dq2, ds, dtheta, dv).
struct TangentFrame {
    Vec5 x1{}, x2{}, x3{}, x4{}, x5{};
    const Vec5& operator[](int i) const;  // 1-based field index
};

ContactCovector reduce_liouville(double p_modulus, double theta, double v);
ContactCovector contact_form_at(const ManifoldPoint& eta);
TangentFrame frame_at(const ManifoldPoint& eta);
// Coefficients of X_i at an arbitrary coordinate vector (no angle reduction needed).
Vec5 field_at(int i, const Vec5& x);
Vec5 commutator(int i, int j, const ManifoldPoint& eta);

ManifoldPoint compose(const ManifoldPoint& a, const ManifoldPoint& b);
ManifoldPoint left_inverse(const ManifoldPoint& eta);

ContourPoint compose_contour(const ContourPoint& a, const ContourPoint& b);
ContourPoint inverse_contour(const ContourPoint& a);

// int_0^t e^{i w tau} dtau and int_0^t tau e^{i w tau} dtau.
struct PhaseMoments {
    std::complex<double> m0;
    std::complex<double> m1;
};
PhaseMoments phase_moments(double w, double t);

// Integral curve of X1 + k X2 + c X4 from xi0.
ContourPoint contour_curve(const ContourPoint& xi0, double k, double c, double t);
// Integral curve of X5 + w X2 + a X4 from eta0.
ManifoldPoint trajectory_curve(const ManifoldPoint& eta0, double w, double a, double t);

// Planar Galilei group element (q, s, theta, u).
struct GalileiElement {
    double q1 = 0.0;
    double q2 = 0.0;
    double s = 0.0;
    double theta = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
};

GalileiElement galilei_compose(const GalileiElement& g, const GalileiElement& h);
GalileiElement galilei_inverse(const GalileiElement& g);
// u = R_theta (v, 0).
GalileiElement embed(const ManifoldPoint& eta);
// Valid when u is parallel to (cos theta, sin theta); v is the signed component along it.
ManifoldPoint project(const GalileiElement& g);

}  // namespace mg
