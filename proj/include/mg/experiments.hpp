#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "mg/config.hpp"
#include "mg/gabor.hpp"
#include "mg/io.hpp"
#include "mg/kernels.hpp"
#include "mg/population.hpp"
#include "mg/stimuli.hpp"

namespace mg {

// Lifting grid of an (effective) config: all frames of the configured stimulus.
ManifoldGrid experiment_grid(const ExperimentConfig& cfg);
FilterOptions experiment_filter(const ExperimentConfig& cfg);
FacilitationConfig experiment_facilitation(const ExperimentConfig& cfg);
// Contour process for experiment 1, trajectory process for experiment 2. Requires a seed.
SdeSpec experiment_sde(const ExperimentConfig& cfg);
KernelLattice experiment_lattice(const ExperimentConfig& cfg);
KernelGrid estimate_experiment_kernel(const ExperimentConfig& cfg);
// Kernel cache key: hash of the sde spec and lattice.
std::string kernel_key(const SdeSpec& spec, const KernelLattice& lat);

// Largest temporal half-width of the filter bank, in frames.
int filter_time_reach(const ManifoldGrid& grid, const FilterOptions& opt);
// Lifted raw energy of one frame. Only the frames within the filter's temporal reach are filtered;
// the result equals the matching frame of energy_filter on the whole movie.
LiftedActivity filter_frame(const StimulusVolume& f, const ManifoldGrid& grid, const FilterOptions& opt, int frame);

struct Experiment1Result {
    CircleStimulus stimulus;
    int frame = 0;
    // single-frame activities
    LiftedActivity F, F_T, P, F0;
};

// Dashed circle, lifting of the selected frame, thresholding, facilitation, steady activity.
Experiment1Result run_experiment1(const ExperimentConfig& cfg, const KernelGrid& K);

// Contrast between the occluded gaps and the background in experiment 1. Gap samples lie on the
// circle inside each gap, at least the filter's spatial reach from the segment ends, at the fiber
// of the true contour (normal angle, normal velocity). Background samples reuse the same fibers at
// random positions away from the circle and the border.
struct GapContrast {
    int n_gap = 0;
    int n_background = 0;
    double f0_gap = 0, f0_background = 0;
    double ft_gap = 0, ft_background = 0;
    double f0_ratio() const { return f0_gap / f0_background; }
    double ft_ratio() const { return ft_gap / ft_background; }
};
GapContrast gap_contrast(const Experiment1Result& r, const ExperimentConfig& cfg, std::uint64_t seed = 1,
                         int background_per_gap_sample = 8);

// One (delta_t, delta_theta) instance of experiment 2.
struct Experiment2Instance {
    int delta_t = 0;
    double delta_theta = 0.0;
    int t1 = 0, t2 = 0;
    int window_begin = 0, window_end = 0;  // frames [begin, end) of the gap window
    // sum over the window, all positions and fibers, of F_fac + F0(blank): zero where no input
    // reaches, positive where the joint input facilitates beyond the separate halves
    double gap_energy = 0.0;
    double gap_energy_positive = 0.0;  // same sum restricted to nodes with a positive gain
    double gap_energy_negative = 0.0;  // and to nodes with a negative gain (<= 0)
    Field ft_max;       // max over (theta, v) of F_T(S3): axes (q1, q2, s)
    Field f0_max;       // max over (theta, v) of F0(S3): axes (q1, q2, s)
    Field f0_xy;        // sum over (q1, q2) of F0(S3) - F0(blank): axes (s, theta, v)
    Field fac_max;      // max over (theta, v) of F_fac + F0(blank)
    Field fac_xy;       // sum over (q1, q2) of F_fac + F0(blank)
    std::optional<LiftedActivity> F_fac;  // full volume when requested
    TrajectoryStimulus stimulus;
};

class Experiment2Runner {
   public:
    Experiment2Runner(const ExperimentConfig& cfg, const KernelGrid& K);
    ~Experiment2Runner();
    Experiment2Instance run(int delta_t, double delta_theta, bool keep_volume = false);
    const ManifoldGrid& grid() const { return grid_; }
    // F0 for an empty movie; constant over the grid up to border effects of the background mass.
    const LiftedActivity& blank() const { return blank_; }

   private:
    LiftedActivity steady(const StimulusVolume& s);
    ExperimentConfig cfg_;
    ManifoldGrid grid_;
    FacilitationConfig fac_cfg_;
    std::unique_ptr<Facilitator> fac_;
    LiftedActivity blank_;
};

}  // namespace mg
