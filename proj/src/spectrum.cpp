#include "numsplit/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "numsplit/error.hpp"

namespace numsplit {

namespace {

constexpr cplx I{0.0, 1.0};

// Smallest J with j > J tail sum of |A|^j e^{Re A} / j! below eps.
int truncation_order(cplx a, double eps, double& bound) {
    const double mag = std::abs(a);
    const double scale = std::exp(a.real());
    if (mag == 0.0) {
        bound = 0.0;
        return 0;
    }
    const int floor_order = static_cast<int>(std::ceil(mag + 10.0 * std::sqrt(mag + 1.0)));
    double term = scale;  // j = 0
    for (int j = 0;; ++j) {
        const double next = term * mag / (j + 1);  // term j+1
        // Beyond j+2 > |A| the terms shrink at least geometrically.
        const double ratio = mag / (j + 2);
        if (ratio < 1.0) {
            bound = next / (1.0 - ratio);
            if (bound < eps && j >= floor_order) return j;
        }
        term = next;
        if (j > 100000) throw NumericalError("pole truncation did not converge");
    }
}

}  // namespace

cplx correlation(const PointerSolution& sol, double qubit_frequency, double t) {
    if (!std::isfinite(t) || !std::isfinite(qubit_frequency))
        throw ConfigError("correlation arguments must be finite");
    const cplx steady = I * (qubit_frequency + sol.shift_b) * t - sol.gamma_m * t;
    const cplx transient = std::conj(sol.a) * (1.0 - std::exp(sol.transient_exponent * t));
    return std::exp(steady + transient);
}

cplx correlation_envelope(const PointerSolution& sol, double t) {
    const cplx transient = sol.a * (1.0 - std::exp(std::conj(sol.transient_exponent) * t));
    return std::exp(-sol.gamma_m * t + transient);
}

CorrelationTrace correlation_trace(const PointerSolution& sol, double qubit_frequency,
                                   double t_max, int samples) {
    if (samples < 2 || !(t_max > 0.0)) throw ConfigError("correlation trace needs t_max > 0 and >= 2 samples");
    CorrelationTrace trace;
    trace.time.reserve(samples);
    trace.value.reserve(samples);
    for (int n = 0; n < samples; ++n) {
        const double t = t_max * n / (samples - 1);
        trace.time.push_back(t);
        trace.value.push_back(correlation(sol, qubit_frequency, t));
    }
    return trace;
}

QubitSpectrum pole_decomposition(const PointerSolution& sol, double qubit_frequency,
                                 double truncation_eps) {
    if (!(truncation_eps > 0.0 && truncation_eps <= 1e-6))
        throw ConfigError("truncation tolerance must lie in (0, 1e-6]");
    if (!(sol.kappa_g > 0.0)) throw ConfigError("kappa_g must be positive for the pole expansion");

    QubitSpectrum spec;
    spec.qubit_frequency = qubit_frequency;
    spec.truncation_eps = truncation_eps;
    spec.source = sol;
    spec.truncation_order = truncation_order(sol.a, truncation_eps, spec.truncation_bound);

    const double base = qubit_frequency + sol.shift_b;
    cplx weight = std::exp(sol.a);
    spec.poles.reserve(spec.truncation_order + 1);
    for (int j = 0; j <= spec.truncation_order; ++j) {
        if (j > 0) weight *= -sol.a / static_cast<double>(j);
        spec.poles.push_back({weight, base + j * sol.detuning, sol.gamma_m + j * sol.kappa_g / 2.0});
    }
    return spec;
}

double evaluate(const QubitSpectrum& spectrum, double omega) {
    if (spectrum.degenerate()) return 0.0;
    double sum = 0.0;
    double weight_scale = 0.0;
    double min_width = spectrum.poles.front().half_width;
    for (const Pole& pole : spectrum.poles) {
        sum += 2.0 * (pole.weight / cplx(pole.half_width, -(omega - pole.center))).real();
        weight_scale += std::abs(pole.weight);
        min_width = std::min(min_width, pole.half_width);
    }
    if (sum >= 0.0) return sum;
    // Truncation and cancellation between alternating weights both scale with 2 / min width.
    const double slack = std::max(spectrum.truncation_eps, 1e-13 * weight_scale) * 2.0 / min_width;
    if (-sum <= slack) return 0.0;
    throw NumericalError("pole sum is significantly negative; truncation too coarse");
}

double minimum_fft_horizon(const PointerSolution& sol) {
    if (!(sol.gamma_m > 0.0))
        throw ConfigError("FFT route needs Gamma_m > 0 (a non-decaying correlation has no transform)");
    return 20.0 / std::min(sol.gamma_m, sol.kappa_g / 2.0);
}

int minimum_fft_samples(const PointerSolution& sol, double horizon) {
    const QubitSpectrum spec = pole_decomposition(sol, 0.0);
    double reach = 0.0;
    double max_width = 0.0;
    for (const Pole& pole : spec.poles) {
        reach = std::max(reach, std::abs(pole.center - sol.shift_b));
        max_width = std::max(max_width, pole.half_width);
    }
    const double band = reach + 20.0 * max_width;
    // Nyquist pi / dt >= band with dt = horizon / N.
    const double needed = band * horizon / std::numbers::pi;
    int n = 2;
    while (n < needed) n *= 2;
    return n;
}

SampledSpectrum spectrum_via_fft(const PointerSolution& sol, double qubit_frequency,
                                 double horizon, int samples) {
    if (!(sol.gamma_m > 0.0))
        throw ConfigError("FFT route needs Gamma_m > 0 (a non-decaying correlation has no transform)");
    if (samples < 2 || (samples & (samples - 1)) != 0)
        throw ConfigError("FFT sample count must be a power of two");
    if (horizon < minimum_fft_horizon(sol) * (1.0 - 1e-12))
        throw ConfigError("FFT horizon shorter than 20 decay constants");
    if (samples < minimum_fft_samples(sol, horizon))
        throw ConfigError("FFT sample count does not resolve all pole centers");

    const double dt = horizon / samples;
    using FftwBuffer = std::unique_ptr<fftw_complex[], decltype(&fftw_free)>;
    FftwBuffer buffer(fftw_alloc_complex(samples), &fftw_free);
    auto* data = reinterpret_cast<cplx*>(buffer.get());
    for (int n = 0; n < samples; ++n) data[n] = correlation_envelope(sol, n * dt);
    data[0] *= 0.5;  // trapezoid end point

    // Sum_n f_n e^{+2 pi i k n / N} for k = 0..N-1.
    fftw_plan plan = fftw_plan_dft_1d(samples, buffer.get(), buffer.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    SampledSpectrum out;
    out.omega.resize(samples);
    out.density.resize(samples);
    const double center = qubit_frequency + sol.shift_b;
    const double step = 2.0 * std::numbers::pi / horizon;
    for (int i = 0; i < samples; ++i) {
        const int k = i - samples / 2;
        const int index = k < 0 ? k + samples : k;
        out.omega[i] = center + k * step;
        out.density[i] = 2.0 * dt * data[index].real();
    }
    return out;
}

double first_moment(const PointerSolution& sol, double qubit_frequency) {
    // d/dt log C at t = 0 is i w_q + z + c; conj(A) = -c / lambda.
    const cplx ae_conj = std::conj(sol.alpha_e);
    const cplx z = I * sol.chi_tilde * sol.alpha_g * ae_conj +
                   I * sol.drive_asymmetry * (ae_conj + sol.alpha_g);
    const cplx c = -std::conj(sol.a) * sol.transient_exponent;
    return qubit_frequency + (z + c).imag();
}

}  // namespace numsplit
