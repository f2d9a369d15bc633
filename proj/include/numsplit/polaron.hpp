// polaron.hpp - multi-wave-mixing picture of the driven qubit (delta_p = 0)
//
// After the polaron displacement the qubit emits at w~_q + n Delta_d with
// Poisson weights e^{-|da|^2} |da|^{2n} / n!, one ladder rung per peak of S_q.

#pragma once

#include <string>
#include <vector>

#include "numsplit/pointer.hpp"
#include "numsplit/spectrum.hpp"

namespace numsplit {

struct LadderRung {
    int n{0};
    double frequency{0.0};  // w_B(n), rad/us
    double weight{0.0};
};

struct MixingLadder {
    double dressed_frequency{0.0};
    double spacing{0.0};  // Delta_d
    std::vector<LadderRung> rungs;
    double tail_bound{0.0};
};

// w_q + d^2 (Delta_d - chi) / ((Delta_d - chi)^2 + kappa^2/4) - d^2 Delta_d / (Delta_d^2 + kappa^2/4),
// evaluated with the symmetric-loss resonator (delta_p ignored).
double dressed_qubit_frequency(const DeviceParams& device, const DriveSpec& drive);

MixingLadder mixing_ladder(const PointerSolution& sol, const DeviceParams& device, const DriveSpec& drive,
                           double eps = default_truncation);

struct PeakDelta {
    int n{0};
    double ladder_offset{0.0};  // w_B(n) - w_B(0)
    double pole_offset{0.0};    // w_n - w_0
    double ladder_weight{0.0};
    double pole_weight{0.0};    // |w_n|
};

struct CrosscheckReport {
    bool spacing_ok{false};
    bool weights_ok{false};
    bool passed{false};
    double spacing_error{0.0};  // relative
    std::vector<PeakDelta> peaks;
    std::string message;
};

// Spacing must agree to tol (relative); weights are compared only for the
// same monotone trend beyond the largest weight.
CrosscheckReport crosscheck_pole_positions(const MixingLadder& ladder, const QubitSpectrum& spectrum,
                                           double tol = 1e-12);

}  // namespace numsplit
