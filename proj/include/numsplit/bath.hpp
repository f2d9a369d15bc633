// bath.hpp - TLS bath spectral densities and inversion-recovery fitting
//
//   S_B(w) = sum_k 2 g_k^2 gamma2_k / ((w - w_k)^2 + gamma2_k^2) + 1/T1
//   P_e(t) = a1 cos(2 g t) e^{-gamma2 t} + a2 e^{-gamma1 t}

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace numsplit {

struct TLSSpec {
    double frequency{0.0};  // w_tls (absolute, rad/us)
    double coupling{0.0};   // g_tls (rad/us)
    double gamma2{0.0};     // total dephasing, the Lorentzian half-width (1/us)
    std::optional<double> gamma1;     // energy relaxation of the TLS
    std::optional<double> gamma_phi;  // pure dephasing of the TLS

    // Resolved (gamma1, gamma_phi). Without an explicit split the TLS relaxes
    // with gamma1 = 2 gamma2 and has no pure dephasing.
    std::pair<double, double> relaxation_split() const;

    void validate() const;
};

struct BathSpectrum {
    std::vector<TLSSpec> components;
    double background{0.0};  // 1/T1 floor (1/us)

    void validate() const;
};

double evaluate_bath(const BathSpectrum& bath, double omega);

struct DecayTrace {
    std::vector<double> time;
    std::vector<double> population;
};

struct InversionRecoveryParams {
    double a1{0.0};
    double a2{0.0};
    double coupling{0.0};  // g_tls
    double gamma2{0.0};
    double gamma1{0.0};

    Eigen::VectorXd to_vector() const;
    static InversionRecoveryParams from_vector(const Eigen::VectorXd& p);
};

double inversion_recovery_model(const InversionRecoveryParams& params, double t);

DecayTrace synth_inversion_recovery(const InversionRecoveryParams& params,
                                    const std::vector<double>& grid, double noise_sd,
                                    std::uint64_t seed);

struct InversionRecoveryFit {
    InversionRecoveryParams params;
    Eigen::MatrixXd covariance;  // order: a1, a2, g, gamma2, gamma1
    double residual_norm{0.0};
    double condition{0.0};
    int iterations{0};
    bool coupling_identifiable{true};
    std::string message;
};

// Thrown when the optimizer stops without converging; carries the best iterate.
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, InversionRecoveryFit best)
        : std::runtime_error(what), best_(std::move(best)) {}
    const InversionRecoveryFit& best() const { return best_; }

private:
    InversionRecoveryFit best_;
};

// Coarse grid search over (g, gamma2, gamma1) with the amplitudes solved
// linearly. Good enough to seed the nonlinear fit.
InversionRecoveryParams guess_inversion_recovery(const DecayTrace& trace);

InversionRecoveryFit fit_inversion_recovery(const DecayTrace& trace,
                                            const InversionRecoveryParams& initial_guess,
                                            int max_iterations = 500);

BathSpectrum bath_from_fit(const InversionRecoveryFit& fit, double tls_frequency, double background);

}  // namespace numsplit
