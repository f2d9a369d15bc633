#include "numsplit/rate.hpp"

#include <fmt/format.h>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "numsplit/error.hpp"

namespace numsplit {

namespace {

// Pole sum without the negative clamp; the integrator wants the plain linear form.
double raw_density(const QubitSpectrum& spec, double omega) {
    double sum = 0.0;
    for (const Pole& pole : spec.poles)
        sum += 2.0 * (pole.weight / cplx(pole.half_width, -(omega - pole.center))).real();
    return sum;
}

struct OverlapData {
    const QubitSpectrum* spectrum;
    const BathFunction* bath;
    double origin;
};

double overlap_integrand(double x, void* params) {
    const auto* data = static_cast<const OverlapData*>(params);
    const double omega = data->origin + x;
    return raw_density(*data->spectrum, omega) * data->bath->density(omega) / (2.0 * std::numbers::pi);
}

// Far tails. With the weights summing to a real number the dispersive parts
// cancel at order 1/x; y / (g^2 + y^2) - 1/x = (y c - g^2) / ((g^2 + y^2) x)
// keeps the 1/x^2 remainder free of that cancellation.
double overlap_tail_integrand(double x, void* params) {
    const auto* data = static_cast<const OverlapData*>(params);
    double sum = 0.0;
    for (const Pole& pole : data->spectrum->poles) {
        const double c = pole.center - data->origin;
        const double y = x - c;
        const double g2 = pole.half_width * pole.half_width;
        sum += 2.0 * (pole.weight.real() * pole.half_width - pole.weight.imag() * (y * c - g2) / x) / (g2 + y * y);
    }
    return sum * data->bath->density(data->origin + x) / (2.0 * std::numbers::pi);
}

struct TailData {
    OverlapData* overlap;
    double edge;  // window edge; x = edge / t maps the tail onto t in (0, 1]
};

double mapped_tail_integrand(double t, void* params) {
    const auto* data = static_cast<const TailData*>(params);
    return overlap_tail_integrand(data->edge / t, data->overlap) * std::abs(data->edge) / (t * t);
}

void silence_gsl() {
    static std::once_flag flag;
    std::call_once(flag, [] { gsl_set_error_handler_off(); });
}

using Workspace = std::unique_ptr<gsl_integration_workspace, decltype(&gsl_integration_workspace_free)>;

constexpr std::size_t workspace_size = 4000;

DecayPrediction finish(double gamma, RateMethod method, double error) {
    DecayPrediction p;
    p.gamma_eg = gamma;
    p.t1 = gamma > 0.0 ? 1.0 / gamma : std::numeric_limits<double>::infinity();
    p.method = method;
    p.error_estimate = error;
    return p;
}

}  // namespace

std::string_view method_name(RateMethod method) {
    return method == RateMethod::closed_form ? "closed-form" : "quadrature";
}

RateMethod parse_method(std::string_view text) {
    if (text == "closed-form" || text == "closed_form" || text == "analytic") return RateMethod::closed_form;
    if (text == "quadrature") return RateMethod::quadrature;
    throw ConfigError("unknown rate method '" + std::string(text) + "'");
}

DecayPrediction decay_rate_closed_form(const QubitSpectrum& spectrum, const BathSpectrum& bath) {
    bath.validate();
    if (spectrum.poles.empty()) throw ConfigError("empty qubit spectrum");
    if (spectrum.degenerate()) {
        DecayPrediction p = finish(evaluate_bath(bath, spectrum.poles.front().center), RateMethod::closed_form, 0.0);
        p.per_pole = {p.gamma_eg};
        return p;
    }

    double peak_bath = bath.background;
    for (const TLSSpec& tls : bath.components) peak_bath += 2.0 * tls.coupling * tls.coupling / tls.gamma2;

    std::vector<double> per_pole;
    per_pole.reserve(spectrum.poles.size());
    double total = 0.0;
    for (const Pole& pole : spectrum.poles) {
        double contribution = pole.weight.real() * bath.background;
        for (const TLSSpec& tls : bath.components) {
            const cplx denom(pole.half_width + tls.gamma2, -(tls.frequency - pole.center));
            contribution += 2.0 * tls.coupling * tls.coupling * (pole.weight / denom).real();
        }
        per_pole.push_back(contribution);
        total += contribution;
    }
    DecayPrediction p = finish(total, RateMethod::closed_form, spectrum.truncation_bound * peak_bath);
    p.per_pole = std::move(per_pole);
    return p;
}

BathFunction as_function(const BathSpectrum& bath) {
    bath.validate();
    BathFunction fn;
    fn.density = [bath](double omega) { return evaluate_bath(bath, omega); };
    for (const TLSSpec& tls : bath.components) {
        fn.centers.push_back(tls.frequency);
        fn.half_widths.push_back(tls.gamma2);
    }
    return fn;
}

DecayPrediction decay_rate_quadrature(const PointerSolution& sol, double qubit_frequency,
                                      const BathFunction& bath, double tol, double truncation_eps) {
    if (!(tol >= 1e-12 && tol <= 1e-4)) throw ConfigError("quadrature tolerance must lie in [1e-12, 1e-4]");
    if (!bath.density) throw ConfigError("bath density is not set");
    if (bath.centers.size() != bath.half_widths.size())
        throw ConfigError("bath hints: centers and half-widths differ in length");

    QubitSpectrum spec = pole_decomposition(sol, qubit_frequency, truncation_eps);
    // The full series sums to exactly one. The cut-off remainder, mostly its
    // imaginary part, would leave a 1/w tail that the infinite-range rules
    // read as divergence; the widest kept pole absorbs it.
    cplx kept = 0.0;
    for (const Pole& pole : spec.poles) kept += pole.weight;
    spec.poles.back().weight += 1.0 - kept;
    if (spec.degenerate() || sol.gamma_m <= 0.0) {
        if (std::abs(sol.a) > 0.0) throw NumericalError("zero-width spectrum with nonzero pole weights");
        return finish(bath.density(spec.poles.front().center), RateMethod::quadrature, 0.0);
    }
    silence_gsl();

    // Integrate in x = w - w_q so breakpoints keep full relative precision.
    const double origin = qubit_frequency;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::vector<double> points;
    auto add_feature = [&](double center, double width) {
        lo = std::min(lo, center - 50.0 * width);
        hi = std::max(hi, center + 50.0 * width);
        for (double m : {0.0, 1.0, 5.0, 20.0}) {
            points.push_back(center - m * width);
            points.push_back(center + m * width);
        }
    };
    for (const Pole& pole : spec.poles) add_feature(pole.center - origin, pole.half_width);
    add_feature(0.0, spec.poles.front().half_width);  // the tail form divides by x
    for (std::size_t k = 0; k < bath.centers.size(); ++k) add_feature(bath.centers[k] - origin, bath.half_widths[k]);
    points.push_back(lo);
    points.push_back(hi);
    std::sort(points.begin(), points.end());
    points.erase(std::remove_if(points.begin(), points.end(), [&](double p) { return p < lo || p > hi; }),
                 points.end());
    points.erase(std::unique(points.begin(), points.end(),
                             [&](double a, double b) { return std::abs(a - b) <= 1e-12 * (hi - lo); }),
                 points.end());

    OverlapData data{&spec, &bath, origin};
    gsl_function f{&overlap_integrand, &data};
    Workspace ws(gsl_integration_workspace_alloc(workspace_size), &gsl_integration_workspace_free);

    // Smooth peaks: plain Gauss-Kronrod on every piece between breakpoints. A
    // piece that only reaches roundoff level is harmless; the total error is
    // judged at the end.
    double window = 0.0, window_err = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        double piece = 0.0, piece_err = 0.0;
        const int status = gsl_integration_qag(&f, points[i], points[i + 1], 0.0, 0.1 * tol, workspace_size, GSL_INTEG_GAUSS31,
                            ws.get(), &piece, &piece_err);
        if (status != GSL_SUCCESS && status != GSL_EROUND)
            throw NumericalError(fmt::format("overlap quadrature: {} on [{:.6g}, {:.6g}]", gsl_strerror(status),
                                             points[i], points[i + 1]));
        window += piece;
        window_err += piece_err;
    }

    // Tails beyond the window fall off like 1/x^2 or faster, so the mapped
    // integrands stay bounded at t = 0.
    double upper = 0.0, upper_err = 0.0, lower = 0.0, lower_err = 0.0;
    const double tail_abs = 0.1 * tol * std::abs(window);
    TailData upper_data{&data, hi}, lower_data{&data, lo};
    gsl_function upper_f{&mapped_tail_integrand, &upper_data}, lower_f{&mapped_tail_integrand, &lower_data};
    for (const int status :
         {gsl_integration_qag(&upper_f, 0.0, 1.0, tail_abs, 0.1 * tol, workspace_size, GSL_INTEG_GAUSS31, ws.get(),
                              &upper, &upper_err),
          gsl_integration_qag(&lower_f, 0.0, 1.0, tail_abs, 0.1 * tol, workspace_size, GSL_INTEG_GAUSS31, ws.get(),
                              &lower, &lower_err)})
        if (status != GSL_SUCCESS && status != GSL_EROUND)
            throw NumericalError(fmt::format("overlap quadrature tail: {}", gsl_strerror(status)));

    const double total = window + upper + lower;
    double peak_bath = 0.0;
    for (double c : bath.centers) peak_bath = std::max(peak_bath, bath.density(c));
    // The pole truncation is controlled separately; only the integration error answers to tol.
    const double quad_err = window_err + upper_err + lower_err;
    if (!std::isfinite(total) || quad_err > tol * std::abs(total))
        throw NumericalError(fmt::format("overlap quadrature missed its tolerance: {:.6g} +- {:.3g}", total, quad_err));
    return finish(total, RateMethod::quadrature, quad_err + spec.truncation_bound * peak_bath);
}

DecayPrediction lorentzian_model_rate(const DeviceParams& device, const DriveSpec& drive,
                                      const BathSpectrum& bath) {
    const PointerSolution sol = solve_pointer_states(device, drive);
    QubitSpectrum single;
    single.qubit_frequency = device.qubit_frequency;
    single.source = sol;
    single.poles.push_back({cplx(1.0, 0.0), device.qubit_frequency + stark_shift(sol), sol.gamma_m});
    return decay_rate_closed_form(single, bath);
}

DecayPrediction predict_rate(const DeviceParams& device, const DriveSpec& drive,
                             const BathSpectrum& bath, RateMethod method, double tol) {
    const PointerSolution sol = solve_pointer_states(device, drive);
    if (method == RateMethod::closed_form)
        return decay_rate_closed_form(pole_decomposition(sol, device.qubit_frequency), bath);
    return decay_rate_quadrature(sol, device.qubit_frequency, as_function(bath), tol);
}

std::string_view leveling_name(Leveling leveling) {
    switch (leveling) {
        case Leveling::fixed_snr_rate: return "snr_rate";
        case Leveling::fixed_gamma_m: return "gamma_m";
        case Leveling::fixed_amplitude: return "amplitude";
        case Leveling::fixed_separation: return "delta_alpha";
    }
    return "?";
}

Leveling parse_leveling(std::string_view text) {
    if (text == "snr_rate") return Leveling::fixed_snr_rate;
    if (text == "gamma_m") return Leveling::fixed_gamma_m;
    if (text == "amplitude") return Leveling::fixed_amplitude;
    if (text == "delta_alpha") return Leveling::fixed_separation;
    throw ConfigError("unknown leveling '" + std::string(text) +
                      "' (expected snr_rate, gamma_m, amplitude or delta_alpha)");
}

double leveled_amplitude(const DeviceParams& device, double drive_frequency, Leveling leveling, double value) {
    switch (leveling) {
        case Leveling::fixed_snr_rate: return level_drive_amplitude(device, drive_frequency, value);
        case Leveling::fixed_gamma_m: return amplitude_for_gamma_m(device, drive_frequency, value);
        case Leveling::fixed_amplitude:
            if (!(value >= 0.0)) throw ConfigError("drive amplitude must be non-negative");
            return value;
        case Leveling::fixed_separation: return amplitude_for_separation(device, drive_frequency, value);
    }
    throw ConfigError("bad leveling");
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

std::vector<SweepPoint> run_sweep(const DeviceParams& device, const BathSpectrum& bath,
                                  const std::vector<SweepRequest>& requests, const SweepOptions& options) {
    device.validate();
    bath.validate();
    std::vector<SweepPoint> out(requests.size());
    parallel_for(requests.size(), options.jobs, [&](std::size_t i) {
        SweepPoint& point = out[i];
        point.request = requests[i];
        try {
            point.amplitude = leveled_amplitude(device, requests[i].drive_frequency, requests[i].leveling,
                                                requests[i].value);
            const DriveSpec drive = DriveSpec::from_device(device, requests[i].drive_frequency, point.amplitude);
            point.gamma_m = solve_pointer_states(device, drive).gamma_m;
            point.prediction = predict_rate(device, drive, bath, options.method, options.tol);
        } catch (const std::exception& e) {
            point.error = e.what();
        }
    });
    return out;
}

std::vector<SweepPoint> sweep_drive_frequency(const DeviceParams& device, const BathSpectrum& bath,
                                              const std::vector<double>& drive_frequencies,
                                              Leveling leveling, double value, const SweepOptions& options) {
    std::vector<SweepRequest> requests;
    requests.reserve(drive_frequencies.size());
    for (double wd : drive_frequencies) requests.push_back({wd, leveling, value});
    return run_sweep(device, bath, requests, options);
}

std::vector<SweepPoint> sweep_drive_power(const DeviceParams& device, const BathSpectrum& bath,
                                          double drive_frequency, const std::vector<double>& separations,
                                          const SweepOptions& options) {
    std::vector<SweepRequest> requests;
    requests.reserve(separations.size());
    for (double s : separations) requests.push_back({drive_frequency, Leveling::fixed_separation, s});
    return run_sweep(device, bath, requests, options);
}

}  // namespace numsplit
