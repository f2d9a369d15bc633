// rate.hpp - readout-modified qubit decay rate from the spectral overlap
//
//   Gamma_eg = int dw/2pi S_q(w) S_B(w)
//
// Lorentzian baths have an exact pairwise kernel; arbitrary baths go through
// adaptive quadrature. Sweeps level the drive per grid point.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "numsplit/bath.hpp"
#include "numsplit/pointer.hpp"
#include "numsplit/spectrum.hpp"

namespace numsplit {

enum class RateMethod { closed_form, quadrature };

std::string_view method_name(RateMethod method);
RateMethod parse_method(std::string_view text);

struct DecayPrediction {
    double gamma_eg{0.0};  // 1/us
    double t1{0.0};        // us
    std::vector<double> per_pole;  // contribution of each pole j (closed form only)
    RateMethod method{RateMethod::closed_form};
    double error_estimate{0.0};  // absolute, 1/us
};

// Pairwise Lorentzian convolution:
//   sum_j sum_k 2 g_k^2 Re[w_j / (gamma_j + gamma2_k - i (w_k - w_j))] + background
DecayPrediction decay_rate_closed_form(const QubitSpectrum& spectrum, const BathSpectrum& bath);

// Arbitrary bath density with optional hints (peak centers and half-widths)
// used to place the integration window and breakpoints.
struct BathFunction {
    std::function<double(double)> density;
    std::vector<double> centers;
    std::vector<double> half_widths;
};

BathFunction as_function(const BathSpectrum& bath);

// Adaptive quadrature of the overlap. The window spans every pole and bath
// center +- 50 half-widths; the two semi-infinite tails are integrated
// separately. tol is relative and must lie in [1e-12, 1e-4].
DecayPrediction decay_rate_quadrature(const PointerSolution& sol, double qubit_frequency,
                                      const BathFunction& bath, double tol,
                                      double truncation_eps = default_truncation);

// Baseline comparator: one Lorentzian of half-width Gamma_m centered at the
// Stark-shifted qubit frequency.
DecayPrediction lorentzian_model_rate(const DeviceParams& device, const DriveSpec& drive,
                                      const BathSpectrum& bath);

// Full-model prediction for one drive.
DecayPrediction predict_rate(const DeviceParams& device, const DriveSpec& drive,
                             const BathSpectrum& bath, RateMethod method, double tol = 1e-8);

enum class Leveling {
    fixed_snr_rate,   // value = target d/dt SNR (1/us)
    fixed_gamma_m,    // value = Gamma_m (1/us)
    fixed_amplitude,  // value = d_r (rad/us)
    fixed_separation, // value = |delta_alpha|
};

std::string_view leveling_name(Leveling leveling);
Leveling parse_leveling(std::string_view text);

// Drive amplitude for one grid point under the chosen leveling.
double leveled_amplitude(const DeviceParams& device, double drive_frequency, Leveling leveling,
                         double value);

struct SweepRequest {
    double drive_frequency{0.0};
    Leveling leveling{Leveling::fixed_gamma_m};
    double value{0.0};
};

struct SweepPoint {
    SweepRequest request;
    double amplitude{0.0};
    double gamma_m{0.0};
    std::optional<DecayPrediction> prediction;
    std::string error;  // empty on success
};

struct SweepOptions {
    RateMethod method{RateMethod::closed_form};
    double tol{1e-8};
    int jobs{1};
};

// Evaluates every request; failures are recorded per point. Output order
// follows the request order whatever the number of workers.
std::vector<SweepPoint> run_sweep(const DeviceParams& device, const BathSpectrum& bath,
                                  const std::vector<SweepRequest>& requests,
                                  const SweepOptions& options = {});

std::vector<SweepPoint> sweep_drive_frequency(const DeviceParams& device, const BathSpectrum& bath,
                                              const std::vector<double>& drive_frequencies,
                                              Leveling leveling, double value,
                                              const SweepOptions& options = {});

std::vector<SweepPoint> sweep_drive_power(const DeviceParams& device, const BathSpectrum& bath,
                                          double drive_frequency,
                                          const std::vector<double>& separations,
                                          const SweepOptions& options = {});

// Runs fn(i) for i in [0, count) on at most `jobs` threads.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace numsplit
