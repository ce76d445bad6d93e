#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mg/geometry.hpp"

namespace testing {

// Small generator wrapper used by the property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    mg::ManifoldPoint point(double qr = 10.0, double sr = 5.0, double vr = 2.0) {
        return mg::make_point(uniform(-qr, qr), uniform(-qr, qr), uniform(-sr, sr), uniform(0, mg::kTwoPi),
                              uniform(-vr, vr));
    }
    mg::ContourPoint contour(double qr = 10.0, double vr = 2.0) {
        return mg::make_contour_point(uniform(-qr, qr), uniform(-qr, qr), uniform(0, mg::kTwoPi), uniform(-vr, vr));
    }
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Componentwise distance with the theta slot compared on the circle.
inline double point_distance(const mg::ManifoldPoint& a, const mg::ManifoldPoint& b) {
    double d = std::abs(a.q1 - b.q1);
    d = std::max(d, std::abs(a.q2 - b.q2));
    d = std::max(d, std::abs(a.s - b.s));
    d = std::max(d, mg::angle_distance(a.theta, b.theta));
    d = std::max(d, std::abs(a.v - b.v));
    return d;
}

inline double contour_distance(const mg::ContourPoint& a, const mg::ContourPoint& b) {
    double d = std::abs(a.q1 - b.q1);
    d = std::max(d, std::abs(a.q2 - b.q2));
    d = std::max(d, mg::angle_distance(a.theta, b.theta));
    d = std::max(d, std::abs(a.v - b.v));
    return d;
}

}  // namespace testing
