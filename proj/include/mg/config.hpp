#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mg/stimuli.hpp"

namespace mg {

class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

// Every parameter of an experiment run. Text form: one "key = value" per line, '#' starts a comment.
struct ExperimentConfig {
    int experiment = 1;  // 1: contours in motion, 2: occluded trajectories

    CircleSpec circle;
    TrajectorySpec trajectory;
    int frame = -1;  // experiment 1 frame index; -1 picks n_frames / 2 - 1

    // lifting
    int n_theta = 16;
    int n_v = 9;
    double v_max = 1.0;
    double p_modulus = 1.5707963267948966;
    double filter_truncation = 3.0;
    double mu = 10.0;
    double beta = 0.5;

    // kernel
    double kappa = 2.0;
    double alpha = 1.0;
    double horizon = 0.0;  // 0: pi / (2 kappa^2)
    double dt = 0.0;       // 0: horizon / 200
    std::int64_t n_paths = 1000000;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int half_width = 15;
    int s_max = 24;  // trajectory kernel extent in frames
    double kernel_truncation = 1e-6;

    // population
    double c_f = 40.0;
    double source_floor = 1e-5;

    // experiment 2
    std::vector<int> sweep_delta_t{0, 6, 12, 24};
    std::vector<double> sweep_delta_theta;
    int window_after = 12;  // frames after reappearance included in the gap window
    bool full_volumes = false;

    // exports
    double ft_isovalue = 0.2;
    double f0_isovalue = 0.5;
    double kernel_relative_isovalue = 0.002;         // times the kernel maximum
    std::vector<double> iso_levels{0.9, 0.5, 0.1};  // experiment 2 levels

    double scale = 1.0;  // in (0, 1]; see effective_config
    std::string out = "out";  // output directory; not part of the hash

    void validate() const;
};

ExperimentConfig default_config(int experiment);

// Sets one key; throws ConfigError for unknown keys or unparsable values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
// Applies "key = value" lines on top of cfg. The "experiment" key, when present, must come first
// and resets the defaults.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig cfg = default_config(1));
ExperimentConfig load_config(const std::string& path);
// Canonical text of all keys in a fixed order; parse_config(config_text(c)) reproduces c.
std::string config_text(const ExperimentConfig& cfg);
// FNV-1a of the canonical text without the output directory.
std::string config_hash(const ExperimentConfig& cfg);
// The configuration actually run: image size, frames, radius, kernel extents and temporal sweeps
// shrunk by cfg.scale, with scale reset to 1.
ExperimentConfig effective_config(const ExperimentConfig& cfg);

// Numbers with an optional pi factor: "0.5", "pi/6", "5pi/12", "-pi".
double parse_angle(const std::string& s);

}  // namespace mg
