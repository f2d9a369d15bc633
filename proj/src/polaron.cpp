#include "numsplit/polaron.hpp"

#include <algorithm>
#include <cmath>

#include "numsplit/error.hpp"

namespace numsplit {

double dressed_qubit_frequency(const DeviceParams& device, const DriveSpec& drive) {
    device.validate();
    drive.validate();
    const double d2 = drive.amplitude * drive.amplitude;
    const double delta = drive.detuning(device);
    const double shifted = delta - device.dispersive_shift;
    const double k2 = device.kappa * device.kappa / 4.0;
    return device.qubit_frequency + d2 * shifted / (shifted * shifted + k2) - d2 * delta / (delta * delta + k2);
}

MixingLadder mixing_ladder(const PointerSolution& sol, const DeviceParams& device, const DriveSpec& drive,
                           double eps) {
    if (!(eps > 0.0 && eps <= 1e-6)) throw ConfigError("ladder tolerance must lie in (0, 1e-6]");
    MixingLadder ladder;
    ladder.dressed_frequency = dressed_qubit_frequency(device, drive);
    ladder.spacing = drive.detuning(device);

    const double mean = std::norm(sol.delta_alpha);
    double weight = std::exp(-mean);
    for (int n = 0;; ++n) {
        if (n > 0) weight *= mean / n;
        ladder.rungs.push_back({n, ladder.dressed_frequency + n * ladder.spacing, weight});
        // Past the mode the remaining Poisson mass is below next / (1 - ratio).
        const double ratio = mean / (n + 2);
        const double next = weight * mean / (n + 1);
        if (ratio < 1.0 && next / (1.0 - ratio) < eps) {
            ladder.tail_bound = next / (1.0 - ratio);
            break;
        }
        if (n > 100000) throw NumericalError("ladder truncation did not converge");
    }
    return ladder;
}

CrosscheckReport crosscheck_pole_positions(const MixingLadder& ladder, const QubitSpectrum& spectrum,
                                           double tol) {
    CrosscheckReport report;
    const std::size_t count = std::min(ladder.rungs.size(), spectrum.poles.size());
    if (count == 0) {
        report.message = "nothing to compare";
        return report;
    }
    const double pole_spacing = spectrum.source.detuning;
    const double scale = std::max(std::abs(pole_spacing), std::abs(ladder.spacing));
    report.spacing_error = scale > 0.0 ? std::abs(pole_spacing - ladder.spacing) / scale : 0.0;
    report.spacing_ok = report.spacing_error <= tol;

    const double l0 = ladder.rungs.front().frequency;
    const double p0 = spectrum.poles.front().center;
    for (std::size_t j = 0; j < count; ++j) {
        PeakDelta peak;
        peak.n = static_cast<int>(j);
        peak.ladder_offset = ladder.rungs[j].frequency - l0;
        peak.pole_offset = spectrum.poles[j].center - p0;
        peak.ladder_weight = ladder.rungs[j].weight;
        peak.pole_weight = std::abs(spectrum.poles[j].weight);
        report.peaks.push_back(peak);
        const double ref = std::max({std::abs(peak.ladder_offset), std::abs(peak.pole_offset), scale});
        if (ref > 0.0 && std::abs(peak.ladder_offset - peak.pole_offset) > tol * ref * std::max<double>(1, j))
            report.spacing_ok = false;
    }

    // Both weight sequences rise to a single maximum and then fall; compare the
    // direction of each step past the larger of the two modes.
    auto mode = [&](auto weight_of) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < count; ++j)
            if (weight_of(j) > weight_of(best)) best = j;
        return best;
    };
    const std::size_t start = std::max(mode([&](std::size_t j) { return report.peaks[j].ladder_weight; }),
                                       mode([&](std::size_t j) { return report.peaks[j].pole_weight; }));
    report.weights_ok = true;
    for (std::size_t j = start + 1; j < count; ++j) {
        const bool ladder_falls = report.peaks[j].ladder_weight <= report.peaks[j - 1].ladder_weight;
        const bool pole_falls = report.peaks[j].pole_weight <= report.peaks[j - 1].pole_weight;
        if (ladder_falls != pole_falls) report.weights_ok = false;
    }
    report.passed = report.spacing_ok && report.weights_ok;
    report.message = report.passed ? "ladder and pole structure agree"
                                   : (report.spacing_ok ? "weight trends differ" : "spacing mismatch");
    return report;
}

}  // namespace numsplit
