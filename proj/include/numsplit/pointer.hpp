// pointer.hpp - qubit-conditioned resonator fields under a continuous readout drive
//
// Solves the driven, lossy resonator for the steady-state pointer fields
// alpha_g / alpha_e and derives the dephasing rate Gamma_m, the overall shift B
// and the transient coefficient A that enter the qubit correlation function.
//
// Conventions: frequencies are angular (rad/us), rates in 1/us, times in us.
// The rotating frame is the drive frame for the resonator; Delta_d = w_d - w_r(g).

#pragma once

#include <complex>
#include <optional>
#include <utility>

namespace numsplit {

using cplx = std::complex<double>;

struct DeviceParams {
    double qubit_frequency{0.0};      // w_q
    double resonator_frequency{0.0};  // w_r(g)
    double dispersive_shift{0.0};     // chi, full shift: w_r(e) = w_r + chi
    double kappa{0.0};                // base resonator loss
    double purcell_asymmetry{0.0};    // delta_p
    double quantum_efficiency{1.0};   // eta
    std::optional<double> purcell_frequency;  // metadata only
    std::optional<double> purcell_coupling;   // metadata only

    // Build from the two measured linewidths; solves for kappa and delta_p.
    static DeviceParams from_linewidths(double qubit_frequency, double resonator_frequency,
                                        double dispersive_shift, double kappa_g, double kappa_e,
                                        double quantum_efficiency);

    double kappa_g() const;
    double kappa_e() const;
    double resonator_frequency_e() const { return resonator_frequency + dispersive_shift; }

    // Throws ConfigError when an invariant is violated.
    void validate() const;
};

// Readout drive. The four factors generalize the state dependence of the
// damping operator (x for e, y for g) and of the drive (u for e, v for g).
struct DriveSpec {
    double frequency{0.0};  // w_d, lab frame
    double amplitude{0.0};  // d_r
    double x{1.0}, y{1.0}, u{1.0}, v{1.0};

    // Factors from the device Purcell asymmetry: x = u = 1 + dp/2, y = v = 1 - dp/2.
    static DriveSpec from_device(const DeviceParams& device, double frequency, double amplitude);

    double detuning(const DeviceParams& device) const { return frequency - device.resonator_frequency; }
    double amplitude_e() const { return u * amplitude; }
    double amplitude_g() const { return v * amplitude; }

    void validate() const;
};

struct PointerSolution {
    cplx alpha_g{};
    cplx alpha_e{};
    cplx delta_alpha{};  // alpha_e - alpha_g
    double gamma_m{0.0};  // measurement-induced dephasing rate
    double shift_b{0.0};  // overall frequency shift B
    cplx a{};             // pole-weight coefficient A; C_q(t) carries conj(a)
    cplx chi_tilde{};     // i (x-y)^2 kappa / 2 + chi
    cplx transient_exponent{};  // i Delta_d - kappa_g / 2

    // Inputs the solution was built from, kept for downstream consumers.
    double detuning{0.0};
    double amplitude{0.0};
    double kappa_g{0.0};
    double kappa_e{0.0};
    double dispersive_shift{0.0};
    double drive_asymmetry{0.0};  // d_r (u - v)
};

PointerSolution solve_pointer_states(const DeviceParams& device, const DriveSpec& drive);

// Resonator fields (alpha_e(t), alpha_g(t)) in the ansatz for the qubit
// coherence, started from alpha_e(0) = alpha_g(0) = alpha_e.
std::pair<cplx, cplx> transient_field(const PointerSolution& sol, double t);

// |sqrt(kappa_e) alpha_e - sqrt(kappa_g) alpha_g|^2 / 2; equals gamma_m when x=u, y=v.
double gamma_m_closed_form(const PointerSolution& sol);

// Im{sqrt(kappa_e kappa_g) conj(alpha_e) alpha_g + i (d_e conj(alpha_e) - d_g alpha_g)}.
double shift_b_closed_form(const PointerSolution& sol, const DriveSpec& drive);

// Emission-side Stark shift |alpha_e|^2 chi + 2 d (u - v) Re{alpha_e}.
double stark_shift(const PointerSolution& sol);

// Gamma_m at unit drive amplitude for the given drive frequency. Gamma_m
// scales exactly as d_r^2, so this fixes the amplitude for any target.
double gamma_m_per_unit_amplitude(const DeviceParams& device, double drive_frequency);

// Drive amplitude reaching the given Gamma_m.
double amplitude_for_gamma_m(const DeviceParams& device, double drive_frequency, double gamma_m);

// Drive amplitude reaching the given pointer separation |delta_alpha|.
double amplitude_for_separation(const DeviceParams& device, double drive_frequency,
                                double separation);

// Drive amplitude whose steady-state SNR rate 4 eta Gamma_m equals the target.
double level_drive_amplitude(const DeviceParams& device, double drive_frequency,
                             double target_snr_rate);

}  // namespace numsplit
