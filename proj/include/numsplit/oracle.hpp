// oracle.hpp - Lindblad master-equation simulator used as ground truth for the rate
//
// Space: qubit (g, e) x resonator (Fock 0..N-1) x TLS_1 x ... x TLS_K.
// Frame: resonator in the drive frame, qubit and TLS relative to w_q.
//
//   H = -Delta_d a'a + chi P_e a'a + d (u P_e + v P_g)(a + a')
//       + sum_k [ (w_k - w_q) s+_k s-_k + g_k (s+ s-_k + s- s+_k) ]
//
// Jumps: sqrt(kappa) (x P_e + y P_g) a, sqrt(gamma1_k) s-_k,
// sqrt(2 gamma_phi_k) s+_k s-_k and an optional sqrt(gamma_q) s-.
//
// H and every jump conserve or lower the number of qubit + TLS excitations,
// so a state starting with at most one excitation stays block diagonal in the
// 1- and 0-excitation sectors. Only those two blocks are integrated.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "numsplit/bath.hpp"
#include "numsplit/pointer.hpp"

namespace numsplit {

enum class InitialState {
    excited_pointer,  // |e> x coherent(alpha_e), the steady state under drive
    excited_vacuum,   // |e> x |0>
    ground_vacuum,    // |g> x |0>
};

struct SimConfig {
    DeviceParams device;
    DriveSpec drive;
    std::vector<TLSSpec> tls;
    double qubit_decay{0.0};  // direct Markovian qubit relaxation (1/us); configs default it to the bath floor
    int fock{0};              // 0 picks the smallest safe truncation
    double horizon{50.0};     // longest simulated time (us)
    double stop_loss{0.2};    // stop once P_e fell by this fraction (0 disables)
    double sample_interval{0.0};  // recording interval (us); 0 picks one from kappa_g
    double step_scale{1.0};   // multiplies the automatic RK4 step
    InitialState initial{InitialState::excited_pointer};

    void validate() const;
};

// Smallest Fock truncation meeting both the mean + 6 sigma rule and a 1e-7
// bound on the top-two-level occupancy of every coherent field visited.
int minimum_fock(const DeviceParams& device, const DriveSpec& drive);
int resolved_fock(const SimConfig& cfg);

using SparseC = Eigen::SparseMatrix<cplx>;

struct JumpOperator {
    std::string name;
    SparseC op;  // rate already folded in
};

struct Generator {
    int fock{0};
    int tls_count{0};
    int dimension{0};
    SparseC hamiltonian;
    std::vector<JumpOperator> jumps;
    SparseC excited_projector;  // P_e on the full space
    SparseC photon_number;      // a'a on the full space

    // Basis index of |q> x |n> x |tls bits>, bit k of tls_bits for TLS k.
    int index(int qubit, int photon, unsigned tls_bits) const;
    int excitations(int index) const;
};

inline constexpr int max_dimension = 4096;

// Throws ConfigError if the composite dimension exceeds max_dimension.
Generator build_generator(const SimConfig& cfg);

struct PopulationTrace {
    std::vector<double> time;
    std::vector<double> excited;       // P_e
    std::vector<double> photons;       // <a'a>
    std::vector<double> top_fock;      // population of the two highest Fock levels
    double max_trace_error{0.0};
    double max_hermiticity_error{0.0};
    double min_eigenvalue{0.0};
    double step{0.0};
    long steps{0};
    int fock{0};
    int dimension{0};
    double kappa_g{0.0};
    std::vector<std::string> alarms;
};

PopulationTrace evolve(const SimConfig& cfg);

struct RateFit {
    double rate{0.0};       // decay rate reported for the trace (1/us)
    double amplitude{0.0};
    double offset{0.0};
    double window_start{0.0};
    double residual_rms{0.0};
    bool oscillatory{false};
    // Oscillatory traces: double-exponential parameters; rate is the envelope decay.
    InversionRecoveryParams envelope{};
    std::string message;
};

// Fits a e^{-Gamma t} + c on t >= window_start (default 10 / kappa_g) with
// c in [0, 0.1]; swaps to the double-exponential model when the residual
// oscillates. Throws NumericalError when the population barely moved.
RateFit extract_rate(const PopulationTrace& trace, double window_start = -1.0);

struct Certification {
    double rate{0.0};
    double rate_half_step{0.0};
    double rate_more_fock{0.0};
    double step_change{0.0};  // relative
    double fock_change{0.0};  // relative
    double max_trace_error{0.0};
    bool passed{false};
    PopulationTrace trace;
};

// Base run, a run at half the step and a run with five more Fock levels;
// passes when both changes stay under tolerance and no alarm fired.
Certification certify(const SimConfig& cfg, double tolerance = 5e-3);

}  // namespace numsplit
