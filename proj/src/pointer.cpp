#include "numsplit/pointer.hpp"

#include <cmath>
#include <string>

#include "numsplit/error.hpp"

namespace numsplit {

namespace {

constexpr cplx I{0.0, 1.0};

void require_finite(double value, const char* name) {
    if (!std::isfinite(value)) throw ConfigError(std::string(name) + " must be finite");
}

}  // namespace

DeviceParams DeviceParams::from_linewidths(double qubit_frequency, double resonator_frequency,
                                           double dispersive_shift, double kappa_g, double kappa_e,
                                           double quantum_efficiency) {
    if (!(kappa_g > 0.0) || !(kappa_e > 0.0))
        throw ConfigError("kappa_g and kappa_e must be positive");
    // (1 + dp/2) / (1 - dp/2) = sqrt(kappa_e / kappa_g)
    const double ratio = std::sqrt(kappa_e / kappa_g);
    const double half = (ratio - 1.0) / (ratio + 1.0);
    DeviceParams device;
    device.qubit_frequency = qubit_frequency;
    device.resonator_frequency = resonator_frequency;
    device.dispersive_shift = dispersive_shift;
    device.purcell_asymmetry = 2.0 * half;
    device.kappa = kappa_g / ((1.0 - half) * (1.0 - half));
    device.quantum_efficiency = quantum_efficiency;
    return device;
}

double DeviceParams::kappa_g() const {
    const double y = 1.0 - purcell_asymmetry / 2.0;
    return kappa * y * y;
}

double DeviceParams::kappa_e() const {
    const double x = 1.0 + purcell_asymmetry / 2.0;
    return kappa * x * x;
}

void DeviceParams::validate() const {
    require_finite(qubit_frequency, "qubit_frequency");
    require_finite(resonator_frequency, "resonator_frequency");
    require_finite(dispersive_shift, "dispersive_shift");
    require_finite(kappa, "kappa");
    require_finite(purcell_asymmetry, "purcell_asymmetry");
    require_finite(quantum_efficiency, "quantum_efficiency");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (!(kappa_g() > 0.0) || !(kappa_e() > 0.0))
        throw ConfigError("purcell_asymmetry of +-2 makes a state-dependent loss rate vanish");
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0))
        throw ConfigError("quantum_efficiency must lie in (0, 1]");
}

DriveSpec DriveSpec::from_device(const DeviceParams& device, double frequency, double amplitude) {
    DriveSpec drive;
    drive.frequency = frequency;
    drive.amplitude = amplitude;
    drive.x = drive.u = 1.0 + device.purcell_asymmetry / 2.0;
    drive.y = drive.v = 1.0 - device.purcell_asymmetry / 2.0;
    return drive;
}

void DriveSpec::validate() const {
    require_finite(frequency, "drive frequency");
    require_finite(amplitude, "drive amplitude");
    require_finite(x, "x");
    require_finite(y, "y");
    require_finite(u, "u");
    require_finite(v, "v");
    if (amplitude < 0.0) throw ConfigError("drive amplitude must be non-negative");
}

PointerSolution solve_pointer_states(const DeviceParams& device, const DriveSpec& drive) {
    device.validate();
    drive.validate();

    PointerSolution sol;
    sol.kappa_g = drive.y * drive.y * device.kappa;
    sol.kappa_e = drive.x * drive.x * device.kappa;
    if (!(sol.kappa_g > 0.0) || !(sol.kappa_e > 0.0))
        throw ConfigError("state-dependent loss rates must both be positive");

    const double chi = device.dispersive_shift;
    const double detuning = drive.detuning(device);
    const double d = drive.amplitude;

    sol.detuning = detuning;
    sol.amplitude = d;
    sol.dispersive_shift = chi;
    sol.drive_asymmetry = d * (drive.u - drive.v);

    sol.alpha_e = drive.amplitude_e() / cplx(detuning - chi, sol.kappa_e / 2.0);
    sol.alpha_g = drive.amplitude_g() / cplx(detuning, sol.kappa_g / 2.0);
    sol.delta_alpha = sol.alpha_e - sol.alpha_g;

    const double dxy = drive.x - drive.y;
    sol.chi_tilde = cplx(chi, dxy * dxy * device.kappa / 2.0);
    sol.transient_exponent = cplx(-sol.kappa_g / 2.0, detuning);

    // Exponent of C_q(t) with alpha_g(t) = delta_alpha e^{lambda t} + alpha_g:
    //   d/dt log C = i w_q + z + c e^{lambda t}
    const cplx ae_conj = std::conj(sol.alpha_e);
    const cplx z = I * sol.chi_tilde * sol.alpha_g * ae_conj +
                   I * sol.drive_asymmetry * (ae_conj + sol.alpha_g);
    const cplx c = (I * sol.chi_tilde * ae_conj + I * sol.drive_asymmetry) * sol.delta_alpha;

    sol.gamma_m = -z.real();
    sol.shift_b = z.imag();
    // Integrating c e^{lambda t} gives conj(A) (1 - e^{lambda t}) with conj(A) = -c / lambda.
    sol.a = std::conj(-c / sol.transient_exponent);

    // Round-off can leave a tiny negative rate when the fields nearly coincide.
    if (sol.gamma_m < 0.0 && sol.gamma_m > -1e-14 * (std::abs(z) + 1e-300)) sol.gamma_m = 0.0;
    return sol;
}

std::pair<cplx, cplx> transient_field(const PointerSolution& sol, double t) {
    if (!std::isfinite(t)) throw ConfigError("time must be finite");
    if (t < 0.0) throw ConfigError("time must be non-negative");
    return {sol.alpha_e, sol.delta_alpha * std::exp(sol.transient_exponent * t) + sol.alpha_g};
}

double gamma_m_closed_form(const PointerSolution& sol) {
    return std::norm(std::sqrt(sol.kappa_e) * sol.alpha_e - std::sqrt(sol.kappa_g) * sol.alpha_g) / 2.0;
}

double shift_b_closed_form(const PointerSolution& sol, const DriveSpec& drive) {
    const cplx ae_conj = std::conj(sol.alpha_e);
    const cplx value = std::sqrt(sol.kappa_e * sol.kappa_g) * ae_conj * sol.alpha_g +
                       I * (drive.amplitude_e() * ae_conj - drive.amplitude_g() * sol.alpha_g);
    return value.imag();
}

double stark_shift(const PointerSolution& sol) {
    return std::norm(sol.alpha_e) * sol.dispersive_shift +
           2.0 * sol.drive_asymmetry * sol.alpha_e.real();
}

double gamma_m_per_unit_amplitude(const DeviceParams& device, double drive_frequency) {
    return solve_pointer_states(device, DriveSpec::from_device(device, drive_frequency, 1.0)).gamma_m;
}

double amplitude_for_gamma_m(const DeviceParams& device, double drive_frequency, double gamma_m) {
    if (!(gamma_m >= 0.0) || !std::isfinite(gamma_m))
        throw ConfigError("target Gamma_m must be finite and non-negative");
    const double unit = gamma_m_per_unit_amplitude(device, drive_frequency);
    if (!(unit > 0.0))
        throw NumericalError("Gamma_m vanishes at this drive frequency; cannot level the drive");
    return std::sqrt(gamma_m / unit);
}

double amplitude_for_separation(const DeviceParams& device, double drive_frequency,
                                double separation) {
    if (!(separation >= 0.0) || !std::isfinite(separation))
        throw ConfigError("target |delta_alpha| must be finite and non-negative");
    const auto unit = solve_pointer_states(device, DriveSpec::from_device(device, drive_frequency, 1.0));
    const double per_unit = std::abs(unit.delta_alpha);
    if (!(per_unit > 0.0))
        throw NumericalError("pointer states coincide at this drive frequency");
    return separation / per_unit;
}

double level_drive_amplitude(const DeviceParams& device, double drive_frequency,
                             double target_snr_rate) {
    if (!(target_snr_rate > 0.0) || !std::isfinite(target_snr_rate))
        throw ConfigError("target SNR rate must be positive");
    device.validate();
    const double target_gamma_m = target_snr_rate / (4.0 * device.quantum_efficiency);
    return amplitude_for_gamma_m(device, drive_frequency, target_gamma_m);
}

}  // namespace numsplit
