#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "mg/kernels.hpp"
#include "mg/volume.hpp"

namespace mg {

struct FacilitationConfig {
    double c_f = 40.0;
    double mu = 10.0;
    double beta = 0.5;
    // Kernel lattice values below this fraction of the member maximum are dropped.
    double truncation = 1e-6;
    // Source nodes whose value exceeds the field minimum by no more than this are treated as
    // background. 0 keeps every node.
    double source_floor = 0.0;

    void validate() const;
};

// Group convolution P(eta) = sum_zeta Gamma(eta | zeta) F_T(zeta) with the kernel looked up at
// the relative element of eta seen from zeta. Contour kernels act within each frame; trajectory
// kernels couple frame t to frames t + ds. Sources outside the grid count as zero.
//
// Per source fiber the relative coordinates only depend on the node offset, so the kernel is
// resampled once into a sparse stencil (built on first use and cached). The field is split into
// its minimum b plus a nonnegative remainder; the constant part is b * M with M the stencil mass
// that lands on each node, from prefix sums.
class Facilitator {
   public:
    Facilitator(const KernelGrid& K, const ManifoldGrid& grid, double truncation = 1e-6);
    ~Facilitator();
    Facilitator(const Facilitator&) = delete;
    Facilitator& operator=(const Facilitator&) = delete;

    LiftedActivity apply(const LiftedActivity& F_T, double source_floor = 0.0);
    // Adds sum_zeta Gamma(eta | zeta) (field(zeta) - offset) to P over the nodes where
    // |field - offset| > source_floor; the field may be signed.
    void scatter(const LiftedActivity& field, double offset, double source_floor, LiftedActivity& P);
    // M(eta): total kernel weight reaching each node from a unit field.
    const std::vector<double>& background_mass();
    const ManifoldGrid& grid() const { return grid_; }
    const KernelGrid& kernel() const { return kernel_; }
    std::size_t stencil_entries() const;

    struct Stencil;

   private:
    const Stencil& stencil(int src_theta, int src_v);

    KernelGrid kernel_;
    ManifoldGrid grid_;
    std::map<int, std::unique_ptr<Stencil>> stencils_;
    std::vector<double> background_;
};

LiftedActivity facilitate(const LiftedActivity& F_T, const KernelGrid& K, const FacilitationConfig& cfg = {});
// Direct per-output sum over all sources with kernel_lookup. Serial and slow; the oracle for facilitate.
LiftedActivity facilitate_reference(const LiftedActivity& F_T, const KernelGrid& K, double truncation = 1e-6);

// F0 = S(F + c_f P).
LiftedActivity activity_steady(const LiftedActivity& F, const LiftedActivity& P, const FacilitationConfig& cfg);

// Euler steps of da/dt = -a + S(c_f Gamma*a + F) starting from a = S(F). residuals, when given,
// receives max |-a + S(c_f Gamma*a + F)| before each step.
LiftedActivity evolve_activity(const LiftedActivity& F, Facilitator& fac, const FacilitationConfig& cfg, double dt_a,
                               int n_steps, std::vector<double>* residuals = nullptr);

// F_fac = F0(S3) - F0(S1) - F0(S2).
LiftedActivity facilitation_difference(const LiftedActivity& full, const LiftedActivity& first,
                                       const LiftedActivity& second);

}  // namespace mg
