// Shared parameter sets for the test binaries.
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "numsplit/bath.hpp"
#include "numsplit/pointer.hpp"

namespace fixtures {

inline double mhz(double f) { return 2.0 * std::numbers::pi * f; }

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// chi/2pi = -5 MHz, kappa/2pi = 5 MHz, symmetric loss.
inline numsplit::DeviceParams weak_device() {
    numsplit::DeviceParams d;
    d.qubit_frequency = mhz(5000.0);
    d.resonator_frequency = mhz(7000.0);
    d.dispersive_shift = mhz(-5.0);
    d.kappa = mhz(5.0);
    return d;
}

// chi/2pi = -10 MHz, kappa/2pi = 2.5 MHz.
inline numsplit::DeviceParams strong_device() {
    numsplit::DeviceParams d = weak_device();
    d.dispersive_shift = mhz(-10.0);
    d.kappa = mhz(2.5);
    return d;
}

// Measured device: chi/2pi = -8.8, kappa_g/2pi = 9.0, kappa_e/2pi = 6.6 MHz.
inline numsplit::DeviceParams lab_device() {
    return numsplit::DeviceParams::from_linewidths(mhz(4746.3), mhz(6779.6), mhz(-8.8), mhz(9.0),
                                                   mhz(6.6), 0.1294);
}

inline numsplit::TLSSpec tls(const numsplit::DeviceParams& d, double detuning_mhz, double g_mhz,
                             double gamma2) {
    numsplit::TLSSpec t;
    t.frequency = d.qubit_frequency + mhz(detuning_mhz);
    t.coupling = mhz(g_mhz);
    t.gamma2 = gamma2;
    return t;
}

// Two TLS below the qubit, the weak-pull comparison bath.
inline numsplit::BathSpectrum weak_bath(const numsplit::DeviceParams& d) {
    numsplit::BathSpectrum b;
    b.components = {tls(d, -12.0, 0.5, mhz(0.5)), tls(d, -20.0, 0.5, mhz(0.5))};
    return b;
}

inline numsplit::BathSpectrum strong_bath(const numsplit::DeviceParams& d) {
    numsplit::BathSpectrum b;
    b.components = {tls(d, -15.0, 0.4, mhz(0.5)), tls(d, -25.0, 0.4, mhz(0.5))};
    return b;
}

// Near-resonant defect on the measured device.
inline numsplit::BathSpectrum near_bath(const numsplit::DeviceParams& d) {
    numsplit::BathSpectrum b;
    b.components = {tls(d, -6.0, 0.19, 1.35)};
    b.background = 0.11;
    return b;
}

inline numsplit::DriveSpec drive_at_separation(const numsplit::DeviceParams& d, double wd, double sep) {
    return numsplit::DriveSpec::from_device(d, wd, numsplit::amplitude_for_separation(d, wd, sep));
}

}  // namespace fixtures
