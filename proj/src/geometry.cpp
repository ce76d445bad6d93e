#include "mg/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mg {

double wrap_angle(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double angle_distance(double a, double b) {
    double d = wrap_angle(a - b);
    return d > kPi ? kTwoPi - d : d;
}

ManifoldPoint make_point(double q1, double q2, double s, double theta, double v) {
    return {q1, q2, s, wrap_angle(theta), v};
}

Vec5 to_vec(const ManifoldPoint& p) { return {p.q1, p.q2, p.s, p.theta, p.v}; }

ManifoldPoint from_vec(const Vec5& x) { return make_point(x[0], x[1], x[2], x[3], x[4]); }

ContourPoint make_contour_point(double q1, double q2, double theta, double v) {
    return {q1, q2, wrap_angle(theta), v};
}

double ContactCovector::operator()(const Vec5& x) const {
    double r = 0.0;
    for (int i = 0; i < 5; ++i) r += coeffs[i] * x[i];
    return r;
}

const Vec5& TangentFrame::operator[](int i) const {
    switch (i) {
        case 1: return x1;
        case 2: return x2;
        case 3: return x3;
        case 4: return x4;
        case 5: return x5;
        default: throw std::domain_error("frame index out of range: " + std::to_string(i));
    }
}

ContactCovector reduce_liouville(double p_modulus, double theta, double v) {
    if (!(p_modulus > 0.0)) throw std::domain_error("reduce_liouville: p_modulus must be positive");
    // lambda = p1 dq1 + p2 dq2 - nu ds with nu = |p| v, divided by |p|
    const double p1 = p_modulus * std::cos(theta);
    const double p2 = p_modulus * std::sin(theta);
    const double nu = p_modulus * v;
    return {{p1 / p_modulus, p2 / p_modulus, -nu / p_modulus, 0.0, 0.0}};
}

ContactCovector contact_form_at(const ManifoldPoint& eta) {
    return {{std::cos(eta.theta), std::sin(eta.theta), -eta.v, 0.0, 0.0}};
}

Vec5 field_at(int i, const Vec5& x) {
    const double c = std::cos(x[3]);
    const double s = std::sin(x[3]);
    const double v = x[4];
    switch (i) {
        case 1: return {-s, c, 0.0, 0.0, 0.0};
        case 2: return {0.0, 0.0, 0.0, 1.0, 0.0};
        case 3: return {c, s, 0.0, 0.0, 0.0};
        case 4: return {0.0, 0.0, 0.0, 0.0, 1.0};
        case 5: return {v * c, v * s, 1.0, 0.0, 0.0};
        default: throw std::domain_error("field index out of range: " + std::to_string(i));
    }
}

TangentFrame frame_at(const ManifoldPoint& eta) {
    const Vec5 x = to_vec(eta);
    return {field_at(1, x), field_at(2, x), field_at(3, x), field_at(4, x), field_at(5, x)};
}

Vec5 commutator(int i, int j, const ManifoldPoint& eta) {
    if (i < 1 || i > 5 || j < 1 || j > 5)
        throw std::domain_error("commutator index out of range");
    const Vec5 x = to_vec(eta);
    auto scaled = [](Vec5 a, double k) {
        for (double& e : a) e *= k;
        return a;
    };
    double sign = 1.0;
    if (i > j) {
        std::swap(i, j);
        sign = -1.0;
    }
    if (i == 1 && j == 2) return scaled(field_at(3, x), sign);
    if (i == 2 && j == 3) return scaled(field_at(1, x), sign);
    if (i == 4 && j == 5) return scaled(field_at(3, x), sign);
    if (i == 2 && j == 5) return scaled(field_at(1, x), sign * x[4]);
    return Vec5{};
}

ManifoldPoint compose(const ManifoldPoint& a, const ManifoldPoint& b) {
    // Translation uses the left element's velocity, as in the Galilei law with u = R_theta (v, 0).
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    const double x = b.q1 + a.v * b.s;
    const double y = b.q2;
    return make_point(c * x - s * y + a.q1, s * x + c * y + a.q2, a.s + b.s, a.theta + b.theta,
                      a.v + b.v);
}

ManifoldPoint left_inverse(const ManifoldPoint& eta) {
    const double c = std::cos(eta.theta);
    const double s = std::sin(eta.theta);
    const double x = eta.q1 - eta.v * eta.s;
    const double y = eta.q2;
    return make_point(-(c * x + s * y), -(-s * x + c * y), -eta.s, -eta.theta, -eta.v);
}

ContourPoint compose_contour(const ContourPoint& a, const ContourPoint& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    return make_contour_point(c * b.q1 - s * b.q2 + a.q1, s * b.q1 + c * b.q2 + a.q2,
                              a.theta + b.theta, a.v + b.v);
}

ContourPoint inverse_contour(const ContourPoint& a) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    return make_contour_point(-(c * a.q1 + s * a.q2), -(-s * a.q1 + c * a.q2), -a.theta, -a.v);
}

PhaseMoments phase_moments(double w, double t) {
    using C = std::complex<double>;
    const double x = w * t;
    if (std::abs(x) < 1e-2) {
        const double x2 = x * x;
        const C m0 = t * C(1.0 - x2 / 6.0 + x2 * x2 / 120.0, x / 2.0 - x * x2 / 24.0 + x * x2 * x2 / 720.0);
        const C m1 = t * t * C(0.5 - x2 / 8.0 + x2 * x2 / 144.0, x / 3.0 - x * x2 / 30.0 + x * x2 * x2 / 840.0);
        return {m0, m1};
    }
    const C e = std::polar(1.0, x);
    const C iw(0.0, w);
    const C m0 = (e - 1.0) / iw;
    const C m1 = t * e / iw + (e - 1.0) / (w * w);
    return {m0, m1};
}

ContourPoint contour_curve(const ContourPoint& xi0, double k, double c, double t) {
    // q' = i e^{i theta}, theta = theta0 + k t
    const auto m = phase_moments(k, t);
    const std::complex<double> dq = std::complex<double>(0.0, 1.0) * std::polar(1.0, xi0.theta) * m.m0;
    return make_contour_point(xi0.q1 + dq.real(), xi0.q2 + dq.imag(), xi0.theta + k * t, xi0.v + c * t);
}

ManifoldPoint trajectory_curve(const ManifoldPoint& eta0, double w, double a, double t) {
    // q' = v e^{i theta}, v = v0 + a t, theta = theta0 + w t
    const auto m = phase_moments(w, t);
    const std::complex<double> dq = std::polar(1.0, eta0.theta) * (eta0.v * m.m0 + a * m.m1);
    return make_point(eta0.q1 + dq.real(), eta0.q2 + dq.imag(), eta0.s + t, eta0.theta + w * t,
                      eta0.v + a * t);
}

GalileiElement galilei_compose(const GalileiElement& g, const GalileiElement& h) {
    const double c = std::cos(g.theta);
    const double s = std::sin(g.theta);
    GalileiElement r;
    r.q1 = c * h.q1 - s * h.q2 + g.u1 * h.s + g.q1;
    r.q2 = s * h.q1 + c * h.q2 + g.u2 * h.s + g.q2;
    r.s = h.s + g.s;
    r.theta = wrap_angle(h.theta + g.theta);
    r.u1 = c * h.u1 - s * h.u2 + g.u1;
    r.u2 = s * h.u1 + c * h.u2 + g.u2;
    return r;
}

GalileiElement galilei_inverse(const GalileiElement& g) {
    const double c = std::cos(g.theta);
    const double s = std::sin(g.theta);
    GalileiElement r;
    r.theta = wrap_angle(-g.theta);
    r.s = -g.s;
    r.u1 = -(c * g.u1 + s * g.u2);
    r.u2 = -(-s * g.u1 + c * g.u2);
    const double x = g.q1 - g.u1 * g.s;
    const double y = g.q2 - g.u2 * g.s;
    r.q1 = -(c * x + s * y);
    r.q2 = -(-s * x + c * y);
    return r;
}

GalileiElement embed(const ManifoldPoint& eta) {
    return {eta.q1, eta.q2, eta.s, eta.theta, eta.v * std::cos(eta.theta), eta.v * std::sin(eta.theta)};
}

ManifoldPoint project(const GalileiElement& g) {
    const double v = g.u1 * std::cos(g.theta) + g.u2 * std::sin(g.theta);
    return make_point(g.q1, g.q2, g.s, g.theta, v);
}

}  // namespace mg
