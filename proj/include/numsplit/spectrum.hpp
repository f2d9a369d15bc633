// spectrum.hpp - drive-renormalized qubit correlation function and emission spectrum
//
//   C_q(t) = exp[i(w_q + B) t - Gamma_m t] * exp{conj(A) [1 - e^{(i Delta_d - kappa_g/2) t}]}
//   S_q(w) = sum_j 2 Re[ w_j / (gamma_j - i (w - w_j)) ]
//
// with w_j = (-A)^j e^A / j!, gamma_j = Gamma_m + j kappa_g / 2 and
// w_j(center) = w_q + j Delta_d + B. S_q is in us, so that the integral of
// S_q over dw / 2pi is dimensionless and equal to one.

#pragma once

#include <complex>
#include <vector>

#include "numsplit/pointer.hpp"

namespace numsplit {

inline constexpr double default_truncation = 1e-10;

struct Pole {
    cplx weight{};
    double center{0.0};
    double half_width{0.0};
};

struct QubitSpectrum {
    std::vector<Pole> poles;
    int truncation_order{0};      // J: poles j = 0..J are kept
    double truncation_bound{0.0};  // bound on the discarded weight magnitude
    double truncation_eps{default_truncation};
    double qubit_frequency{0.0};
    PointerSolution source;

    // Zero drive: the spectrum is a delta function at w_q + B.
    bool degenerate() const { return poles.size() == 1 && poles.front().half_width == 0.0; }
};

struct CorrelationTrace {
    std::vector<double> time;
    std::vector<cplx> value;
};

cplx correlation(const PointerSolution& sol, double qubit_frequency, double t);

// conj(C_q(t)) e^{i (w_q + B) t}: the slowly varying part of conj(C_q), free of the
// large qubit phase. Used by the FFT route.
cplx correlation_envelope(const PointerSolution& sol, double t);

CorrelationTrace correlation_trace(const PointerSolution& sol, double qubit_frequency,
                                   double t_max, int samples);

QubitSpectrum pole_decomposition(const PointerSolution& sol, double qubit_frequency,
                                 double truncation_eps = default_truncation);

// Spectral density at w (us). Tiny negative truncation artifacts are clamped
// to zero; larger negative values throw NumericalError.
double evaluate(const QubitSpectrum& spectrum, double omega);

struct SampledSpectrum {
    std::vector<double> omega;
    std::vector<double> density;
};

// Half-line discretized transform S_q(w) = 2 Re int_0^T e^{i w t} conj(C_q(t)) dt
// on N samples (N a power of two). Output is sorted by frequency and centered
// on w_q + B.
SampledSpectrum spectrum_via_fft(const PointerSolution& sol, double qubit_frequency,
                                 double horizon, int samples);

// Smallest horizon accepted by spectrum_via_fft.
double minimum_fft_horizon(const PointerSolution& sol);
// Smallest power-of-two sample count whose Nyquist band covers every pole
// center +- 20 of the largest half-widths for the given horizon.
int minimum_fft_samples(const PointerSolution& sol, double horizon);

// Im{dC_q/dt (0)}: the first moment of the emission spectrum.
double first_moment(const PointerSolution& sol, double qubit_frequency);

}  // namespace numsplit
