#include "numsplit/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "numsplit/bath.hpp"
#include "numsplit/config.hpp"
#include "numsplit/csv.hpp"
#include "numsplit/error.hpp"
#include "numsplit/manifest.hpp"
#include "numsplit/oracle.hpp"
#include "numsplit/polaron.hpp"
#include "numsplit/rate.hpp"
#include "numsplit/spectrum.hpp"
#include "numsplit/units.hpp"

namespace numsplit {

namespace fs = std::filesystem;
using nlohmann::json;
using units::angular_to_mhz;

namespace {

struct Flags {
    std::string config;
    std::string out_dir{"."};
    std::uint64_t seed{0};
    std::string method;
    double tol{0.0};
    int jobs{1};
    std::string trace;
    double snr_rate{0.0};

    CLI::Option* seed_opt{nullptr};
    CLI::Option* method_opt{nullptr};
    CLI::Option* tol_opt{nullptr};
    CLI::Option* jobs_opt{nullptr};
    CLI::Option* snr_opt{nullptr};
};

class Clock {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// State shared by every command: config, resolved run settings, outputs.
struct Context {
    Flags flags;
    Config config;
    bool have_config{false};
    RunSettings run;
    fs::path out_dir;
    RunManifest manifest;
    std::ostream* out{nullptr};

    void load(bool required) {
        if (flags.config.empty()) {
            if (required) throw ConfigError("--config is required for this command");
        } else {
            config = Config::load(flags.config);
            have_config = true;
        }
        run = run_from(config);
        if (flags.seed_opt->count()) run.seed = flags.seed;
        if (flags.method_opt->count()) run.method = flags.method;
        if (flags.tol_opt->count()) run.tol = flags.tol;
        if (flags.jobs_opt->count()) run.jobs = flags.jobs;
        if (run.jobs < 1) throw ConfigError("--jobs must be at least 1");
        if (!(run.tol > 0.0)) throw ConfigError("--tol must be positive");
        if (!(run.truncation > 0.0 && run.truncation <= 1e-6)) throw ConfigError("run.truncation must lie in (0, 1e-6]");

        // Record the resolved settings so the manifest replays the same run.
        json& resolved = config.normalized()["run"];
        resolved["seed"] = run.seed;
        if (run.method) resolved["method"] = *run.method;
        resolved["tol"] = run.tol;
        resolved["truncation"] = run.truncation;
        resolved.erase("jobs");  // worker count never changes results

        out_dir = flags.out_dir;
        fs::create_directories(out_dir);
        manifest.config = config.normalized();
    }

    void write(const csv::Table& table, const std::string& name) {
        table.write(out_dir / name);
        manifest.add_output(out_dir, name);
    }

    void finish(const std::string& command, const Clock& clock) {
        manifest.command = command;
        manifest.timing.emplace_back(command, clock.seconds());
        manifest.write(out_dir / (command + "_manifest.json"));
    }
};

std::string complex_text(cplx z) { return fmt::format("{:.6g}{:+.6g}i", z.real(), z.imag()); }

// ---------------------------------------------------------------- pointer

int cmd_pointer(Context& ctx) {
    Clock clock;
    ctx.load(true);
    const DeviceParams device = device_from(ctx.config);
    const DriveSpec drive = drive_from(ctx.config, device);
    const PointerSolution sol = solve_pointer_states(device, drive);

    csv::Table table({"quantity", "unit", "re", "im"});
    auto add_c = [&](const char* name, cplx z) { table.row().add(name).add("1").add(z.real()).add(z.imag()); };
    auto add_r = [&](const std::string& name, const char* unit, double v) {
        table.row().add(name).add(unit).add(v).add(0.0);
    };
    add_c("alpha_g", sol.alpha_g);
    add_c("alpha_e", sol.alpha_e);
    add_c("delta_alpha", sol.delta_alpha);
    add_c("A", sol.a);
    add_r("Gamma_m", "1/us", sol.gamma_m);
    add_r("Gamma_m_over_2pi", "MHz", angular_to_mhz(sol.gamma_m));
    add_r("B", "rad/us", sol.shift_b);
    add_r("B_over_2pi", "MHz", angular_to_mhz(sol.shift_b));
    table.row().add("chi_tilde").add("rad/us").add(sol.chi_tilde.real()).add(sol.chi_tilde.imag());
    table.row().add("chi_tilde_over_2pi").add("MHz").add(angular_to_mhz(sol.chi_tilde.real()))
        .add(angular_to_mhz(sol.chi_tilde.imag()));
    add_r("d_r", "rad/us", drive.amplitude);
    add_r("d_r_over_2pi", "MHz", angular_to_mhz(drive.amplitude));
    add_r("detuning", "rad/us", sol.detuning);
    add_r("detuning_over_2pi", "MHz", angular_to_mhz(sol.detuning));
    add_r("kappa_g", "1/us", sol.kappa_g);
    add_r("kappa_e", "1/us", sol.kappa_e);
    ctx.write(table, "pointer.csv");

    auto& out = *ctx.out;
    fmt::print(out, "alpha_g      = {}\n", complex_text(sol.alpha_g));
    fmt::print(out, "alpha_e      = {}\n", complex_text(sol.alpha_e));
    fmt::print(out, "delta_alpha  = {}  (|delta_alpha| = {:.6g})\n", complex_text(sol.delta_alpha),
               std::abs(sol.delta_alpha));
    fmt::print(out, "Gamma_m      = {:.6g} /us  ({:.6g} MHz x 2pi)\n", sol.gamma_m, angular_to_mhz(sol.gamma_m));
    fmt::print(out, "B            = {:.6g} rad/us  ({:.6g} MHz x 2pi)\n", sol.shift_b, angular_to_mhz(sol.shift_b));
    fmt::print(out, "A            = {}\n", complex_text(sol.a));
    fmt::print(out, "d_r          = {:.6g} rad/us  ({:.6g} MHz x 2pi)\n", drive.amplitude,
               angular_to_mhz(drive.amplitude));
    ctx.finish("pointer", clock);
    return exit_ok;
}

// ---------------------------------------------------------------- spectrum

int cmd_spectrum(Context& ctx) {
    Clock clock;
    ctx.load(true);
    const DeviceParams device = device_from(ctx.config);
    const SpectrumPlan plan = spectrum_from(ctx.config, device);

    for (const std::string& label : plan.drives) {
        const std::optional<double> wd =
            label == "config" ? std::nullopt : std::optional<double>(drive_frequency_at(device, label));
        const DriveSpec drive = drive_from(ctx.config, device, wd);
        const PointerSolution sol = solve_pointer_states(device, drive);
        const QubitSpectrum spec = pole_decomposition(sol, device.qubit_frequency, ctx.run.truncation);

        std::optional<SampledSpectrum> fft;
        if (plan.fft && sol.gamma_m > 0.0) {
            const double horizon = minimum_fft_horizon(sol);
            fft = spectrum_via_fft(sol, device.qubit_frequency, horizon, minimum_fft_samples(sol, horizon));
        }
        if (spec.degenerate())
            ctx.manifest.notes.push_back("spectrum_" + label +
                                         ": zero drive, degenerate delta-like spectrum (width 0) exported as zeros");

        csv::Table table({"omega_over_2pi_MHz", "S_q_us", "S_q_fft_us"});
        for (int i = 0; i < plan.points; ++i) {
            const double w = plan.omega_min + (plan.omega_max - plan.omega_min) * i / (plan.points - 1);
            double fft_value = 0.0;
            if (fft) {
                const auto& om = fft->omega;
                if (w >= om.front() && w <= om.back()) {
                    const auto it = std::upper_bound(om.begin(), om.end(), w);
                    const std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - om.begin(), 1), om.size() - 1);
                    const double f = (w - om[k - 1]) / (om[k] - om[k - 1]);
                    fft_value = (1.0 - f) * fft->density[k - 1] + f * fft->density[k];
                }
            }
            table.row().add(angular_to_mhz(w)).add(evaluate(spec, w)).add(fft_value);
        }
        ctx.write(table, "spectrum_" + label + ".csv");

        const double t_max = 10.0 / sol.kappa_g;
        const CorrelationTrace corr = correlation_trace(sol, 0.0, t_max, 512);
        csv::Table ct({"t_us", "re_C", "im_C"});
        for (std::size_t i = 0; i < corr.time.size(); ++i)
            ct.row().add(corr.time[i]).add(corr.value[i].real()).add(corr.value[i].imag());
        ctx.write(ct, "correlation_" + label + ".csv");

        fmt::print(*ctx.out, "{}: w_d/2pi = {:.6g} MHz, |delta_alpha| = {:.4g}, {} poles, first moment - w_q = {:.6g} MHz x 2pi\n",
                   label, angular_to_mhz(drive.frequency), std::abs(sol.delta_alpha), spec.poles.size(),
                   angular_to_mhz(first_moment(sol, device.qubit_frequency) - device.qubit_frequency));
    }
    ctx.finish("spectrum", clock);
    return exit_ok;
}

// ---------------------------------------------------------------- rate

int cmd_rate(Context& ctx) {
    Clock clock;
    ctx.load(true);
    const DeviceParams device = device_from(ctx.config);
    const DriveSpec drive = drive_from(ctx.config, device);
    const BathSpectrum bath = bath_from(ctx.config, device);
    const PointerSolution sol = solve_pointer_states(device, drive);
    const QubitSpectrum spec = pole_decomposition(sol, device.qubit_frequency, ctx.run.truncation);

    const DecayPrediction closed = decay_rate_closed_form(spec, bath);
    const double qtol = std::clamp(ctx.run.tol, 1e-12, 1e-4);
    const DecayPrediction quad = decay_rate_quadrature(sol, device.qubit_frequency, as_function(bath), qtol,
                                                       ctx.run.truncation);
    const DecayPrediction lorentz = lorentzian_model_rate(device, drive, bath);

    csv::Table table({"method", "Gamma_eg_per_us", "T1_us", "err_est"});
    table.row().add("closed-form").add(closed.gamma_eg).add(closed.t1).add(closed.error_estimate);
    table.row().add("quadrature").add(quad.gamma_eg).add(quad.t1).add(quad.error_estimate);
    table.row().add("lorentzian-model").add(lorentz.gamma_eg).add(lorentz.t1).add(0.0);
    ctx.write(table, "rate.csv");

    csv::Table poles({"j", "center_over_2pi_MHz", "half_width_per_us", "weight_re", "weight_im", "contribution_per_us"});
    for (std::size_t j = 0; j < spec.poles.size(); ++j) {
        const Pole& p = spec.poles[j];
        poles.row().add(static_cast<long>(j)).add(angular_to_mhz(p.center)).add(p.half_width)
            .add(p.weight.real()).add(p.weight.imag()).add(closed.per_pole.at(j));
    }
    ctx.write(poles, "rate_poles.csv");

    fmt::print(*ctx.out, "Gamma_eg closed-form = {:.8g} /us (T1 = {:.6g} us)\n", closed.gamma_eg, closed.t1);
    fmt::print(*ctx.out, "Gamma_eg quadrature  = {:.8g} /us (err {:.2g})\n", quad.gamma_eg, quad.error_estimate);
    fmt::print(*ctx.out, "Gamma_eg Lorentzian  = {:.8g} /us\n", lorentz.gamma_eg);
    ctx.finish("rate", clock);
    return exit_ok;
}

// ---------------------------------------------------------------- sweep

double level_for_output(Leveling leveling, double value) {
    return leveling == Leveling::fixed_amplitude ? angular_to_mhz(value) : value;
}

std::string level_column(Leveling leveling) {
    switch (leveling) {
        case Leveling::fixed_snr_rate: return "snr_rate_per_us";
        case Leveling::fixed_gamma_m: return "Gamma_m_target_per_us";
        case Leveling::fixed_amplitude: return "d_r_target_over_2pi_MHz";
        case Leveling::fixed_separation: return "delta_alpha";
    }
    return "level";
}

int cmd_sweep(Context& ctx) {
    Clock clock;
    ctx.load(true);
    const DeviceParams device = device_from(ctx.config);
    const BathSpectrum bath = bath_from(ctx.config, device);
    SweepPlan plan = sweep_from(ctx.config, device);
    if (ctx.run.method) {
        const std::string& m = *ctx.run.method;
        if (m == "analytic" || m == "oracle" || m == "both") {
            plan.method = m;
        } else {
            plan.method = "analytic";
            plan.rate_method = parse_method(m);
        }
    }

    std::vector<SweepRequest> requests;
    for (double wd : plan.drive_frequencies)
        for (double level : plan.levels) requests.push_back({wd, plan.leveling, level});

    SweepOptions options;
    options.method = plan.rate_method;
    options.tol = plan.rate_method == RateMethod::quadrature ? std::clamp(ctx.run.tol, 1e-12, 1e-4) : ctx.run.tol;
    options.jobs = ctx.run.jobs;
    std::vector<SweepPoint> points = run_sweep(device, bath, requests, options);

    const bool want_oracle = plan.method != "analytic";
    std::vector<std::optional<double>> oracle_rate(points.size());
    std::vector<std::string> oracle_error(points.size());
    if (want_oracle) {
        const SimConfig base = sim_from(ctx.config);
        parallel_for(points.size(), ctx.run.jobs, [&](std::size_t i) {
            if (!points[i].error.empty()) return;
            try {
                SimConfig sim = base;
                sim.drive = DriveSpec::from_device(device, requests[i].drive_frequency, points[i].amplitude);
                if (sim.fock > 0) sim.fock = std::max(sim.fock, minimum_fock(device, sim.drive));
                oracle_rate[i] = extract_rate(evolve(sim)).rate;
            } catch (const std::exception& e) {
                oracle_error[i] = std::string("oracle: ") + e.what();
            }
        });
    }

    std::vector<std::string> header = {"omega_d_over_2pi_MHz", level_column(plan.leveling), "d_r_over_2pi_MHz",
                                       "Gamma_m_per_us", "Gamma_eg_per_us", "T1_us", "method", "err_est"};
    if (plan.method == "both") {
        header.push_back("Gamma_oracle_per_us");
        header.push_back("rel_deviation");
    }
    header.push_back("errors");
    csv::Table table(header);

    std::size_t failures = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const SweepPoint& p = points[i];
        std::string errors = p.error;
        if (!oracle_error[i].empty()) errors += (errors.empty() ? "" : "; ") + oracle_error[i];
        const bool analytic_ok = p.prediction.has_value();
        const bool oracle_ok = oracle_rate[i].has_value();
        const bool ok = plan.method == "analytic" ? analytic_ok
                        : plan.method == "oracle" ? oracle_ok
                                                  : analytic_ok && oracle_ok;
        if (!ok) ++failures;

        table.row().add(angular_to_mhz(p.request.drive_frequency)).add(level_for_output(p.request.leveling, p.request.value));
        auto add_or_blank = [&](bool have, double v) {
            if (have) table.add(v);
            else table.add("");
        };
        add_or_blank(p.error.empty(), angular_to_mhz(p.amplitude));
        add_or_blank(p.error.empty(), p.gamma_m);
        if (plan.method == "oracle") {
            add_or_blank(oracle_ok, oracle_ok ? *oracle_rate[i] : 0.0);
            add_or_blank(oracle_ok, oracle_ok ? 1.0 / *oracle_rate[i] : 0.0);
            table.add("oracle").add("");
        } else {
            add_or_blank(analytic_ok, analytic_ok ? p.prediction->gamma_eg : 0.0);
            add_or_blank(analytic_ok, analytic_ok ? p.prediction->t1 : 0.0);
            table.add(std::string(method_name(plan.rate_method)));
            add_or_blank(analytic_ok, analytic_ok ? p.prediction->error_estimate : 0.0);
        }
        if (plan.method == "both") {
            add_or_blank(oracle_ok, oracle_ok ? *oracle_rate[i] : 0.0);
            const bool dev = oracle_ok && analytic_ok;
            add_or_blank(dev, dev ? (*oracle_rate[i] - p.prediction->gamma_eg) / p.prediction->gamma_eg : 0.0);
        }
        table.add(errors);
    }
    ctx.write(table, "sweep.csv");
    ctx.manifest.notes.push_back(fmt::format("{} of {} points failed", failures, points.size()));
    fmt::print(*ctx.out, "sweep: {} points, {} failed, method {}\n", points.size(), failures, plan.method);
    ctx.finish("sweep", clock);
    return (!points.empty() && failures == points.size()) ? exit_sweep_failed : exit_ok;
}

// ---------------------------------------------------------------- oracle

int cmd_oracle(Context& ctx) {
    Clock clock;
    ctx.load(true);
    const SimConfig sim = sim_from(ctx.config);
    const bool do_certify = ctx.config.normalized().contains("oracle") &&
                            ctx.config.normalized()["oracle"].value("certify", false);

    PopulationTrace trace;
    std::optional<Certification> cert;
    if (do_certify) {
        cert = certify(sim);
        trace = cert->trace;
    } else {
        trace = evolve(sim);
    }
    csv::Table table({"t_us", "P_e", "n_photon", "top_fock_occ"});
    for (std::size_t i = 0; i < trace.time.size(); ++i)
        table.row().add(trace.time[i]).add(trace.excited[i]).add(trace.photons[i]).add(trace.top_fock[i]);
    ctx.write(table, "oracle_trace.csv");

    csv::Table report({"quantity", "value"});
    report.row().add("fock").add(static_cast<long>(trace.fock));
    report.row().add("dimension").add(static_cast<long>(trace.dimension));
    report.row().add("step_us").add(trace.step);
    report.row().add("max_trace_error").add(trace.max_trace_error);
    report.row().add("max_hermiticity_error").add(trace.max_hermiticity_error);
    report.row().add("min_eigenvalue").add(trace.min_eigenvalue);

    std::string fit_error;
    try {
        const RateFit fit = extract_rate(trace);
        report.row().add("Gamma_oracle_per_us").add(fit.rate);
        report.row().add("fit_offset").add(fit.offset);
        report.row().add("fit_residual_rms").add(fit.residual_rms);
        report.row().add("oscillatory").add(static_cast<long>(fit.oscillatory));
        const BathSpectrum bath = bath_from(ctx.config, sim.device);
        const DecayPrediction analytic = predict_rate(sim.device, sim.drive, bath, RateMethod::closed_form);
        report.row().add("Gamma_analytic_per_us").add(analytic.gamma_eg);
        report.row().add("rel_deviation").add((fit.rate - analytic.gamma_eg) / analytic.gamma_eg);
        fmt::print(*ctx.out, "Gamma_oracle = {:.6g} /us, Gamma_analytic = {:.6g} /us\n", fit.rate, analytic.gamma_eg);
    } catch (const NumericalError& e) {
        fit_error = e.what();
    }
    if (cert) {
        report.row().add("rate_half_step").add(cert->rate_half_step);
        report.row().add("rate_fock_plus_5").add(cert->rate_more_fock);
        report.row().add("step_change").add(cert->step_change);
        report.row().add("fock_change").add(cert->fock_change);
        report.row().add("certified").add(static_cast<long>(cert->passed));
    }
    ctx.write(report, "oracle_report.csv");
    for (const auto& a : trace.alarms) {
        ctx.manifest.notes.push_back("alarm: " + a);
        fmt::print(*ctx.out, "alarm: {}\n", a);
    }
    ctx.finish("oracle", clock);
    if (!fit_error.empty()) throw NumericalError(fit_error);
    return exit_ok;
}

// ---------------------------------------------------------------- fit-tls

int cmd_fit_tls(Context& ctx) {
    Clock clock;
    ctx.load(false);
    if (ctx.flags.trace.empty()) throw ConfigError("--trace is required");
    const DecayTrace trace = csv::read_trace(ctx.flags.trace);

    const InversionRecoveryParams guess = guess_inversion_recovery(trace);
    const InversionRecoveryFit fit = fit_inversion_recovery(trace, guess);

    double tls_frequency = 0.0;
    double background = fit.params.gamma1;
    const json& root = ctx.config.normalized();
    if (root.contains("fit")) {
        const json& f = root["fit"];
        if (f.contains("tls_frequency")) tls_frequency = f["tls_frequency"]["value"].get<double>();
        if (f.contains("tls_detuning"))
            tls_frequency = device_from(ctx.config).qubit_frequency + f["tls_detuning"]["value"].get<double>();
        if (f.contains("background")) background = f["background"]["value"].get<double>();
    } else {
        ctx.manifest.notes.push_back("no fit section: TLS frequency set to 0, background to the fitted gamma1");
    }
    const BathSpectrum bath = bath_from_fit(fit, tls_frequency, background);

    csv::Table report({"parameter", "value", "std_err"});
    const Eigen::VectorXd p = fit.params.to_vector();
    const char* names[] = {"a1", "a2", "g_tls_per_us", "gamma2_tls_per_us", "gamma1_per_us"};
    for (int i = 0; i < 5; ++i)
        report.row().add(names[i]).add(p(i)).add(std::sqrt(std::max(fit.covariance(i, i), 0.0)));
    report.row().add("g_tls_over_2pi_MHz").add(angular_to_mhz(p(2))).add(angular_to_mhz(
        std::sqrt(std::max(fit.covariance(2, 2), 0.0))));
    report.row().add("residual_norm").add(fit.residual_norm).add("");
    report.row().add("condition").add(fit.condition).add("");
    report.row().add("coupling_identifiable").add(static_cast<long>(fit.coupling_identifiable)).add("");
    ctx.write(report, "fit_report.csv");

    json bj;
    bj["background"] = {{"value", bath.background}, {"unit", "MHz_rate"}};
    bj["tls"] = json::array();
    for (const TLSSpec& t : bath.components)
        bj["tls"].push_back({{"frequency", {{"value", t.frequency}, {"unit", "rad_per_us"}}},
                             {"coupling", {{"value", t.coupling}, {"unit", "rad_per_us"}}},
                             {"gamma2", {{"value", t.gamma2}, {"unit", "MHz_rate"}}}});
    {
        std::ofstream out(ctx.out_dir / "bath.json", std::ios::binary);
        out << bj.dump(2) << "\n";
    }
    ctx.manifest.add_output(ctx.out_dir, "bath.json");
    if (!fit.coupling_identifiable) ctx.manifest.notes.push_back(fit.message);

    fmt::print(*ctx.out, "g_tls/2pi = {:.6g} MHz, gamma2 = {:.6g} /us, gamma1 = {:.6g} /us{}\n",
               angular_to_mhz(fit.params.coupling), fit.params.gamma2, fit.params.gamma1,
               fit.coupling_identifiable ? "" : " (g_tls unidentifiable)");
    ctx.finish("fit-tls", clock);
    return exit_ok;
}

// ---------------------------------------------------------------- level

int cmd_level(Context& ctx) {
    Clock clock;
    ctx.load(true);
    const DeviceParams device = device_from(ctx.config);
    const json& root = ctx.config.normalized();
    const json* sec = root.contains("level") ? &root["level"] : nullptr;

    double snr = 0.0;
    if (ctx.flags.snr_opt->count()) snr = ctx.flags.snr_rate;
    else if (sec && sec->contains("snr_rate")) snr = (*sec)["snr_rate"]["value"].get<double>();
    else throw ConfigError("level: give level.snr_rate in the config or --snr-rate");

    std::vector<double> grid;
    if (sec && sec->contains("at")) {
        for (const auto& l : (*sec)["at"]) grid.push_back(drive_frequency_at(device, l.get<std::string>()));
    } else if (root.contains("sweep")) {
        grid = sweep_from(ctx.config, device).drive_frequencies;
    } else {
        grid.push_back(drive_from(ctx.config, device).frequency);
    }

    csv::Table table({"omega_d_over_2pi_MHz", "snr_rate_per_us", "Gamma_m_target_per_us", "d_r_over_2pi_MHz",
                      "stark_shift_over_2pi_MHz", "chi_term_over_2pi_MHz", "drive_term_over_2pi_MHz", "note"});
    for (double wd : grid) {
        const double d = level_drive_amplitude(device, wd, snr);
        const PointerSolution sol = solve_pointer_states(device, DriveSpec::from_device(device, wd, d));
        const double chi_term = std::norm(sol.alpha_e) * sol.dispersive_shift;
        const double drive_term = 2.0 * sol.drive_asymmetry * sol.alpha_e.real();
        std::string note;
        if (std::abs(sol.detuning - sol.dispersive_shift) <= 1e-9 * std::abs(sol.dispersive_shift))
            note = "drive at w_r(e): the drive term vanishes (Re alpha_e = 0)";
        else if (sol.drive_asymmetry == 0.0)
            note = "symmetric drive: no drive term";
        table.row().add(angular_to_mhz(wd)).add(snr).add(snr / (4.0 * device.quantum_efficiency))
            .add(angular_to_mhz(d)).add(angular_to_mhz(chi_term + drive_term)).add(angular_to_mhz(chi_term))
            .add(angular_to_mhz(drive_term)).add(note);
    }
    ctx.write(table, "level.csv");
    fmt::print(*ctx.out, "leveled {} drive frequencies to d/dt SNR = {:.6g} /us (Gamma_m = {:.6g} /us)\n",
               grid.size(), snr, snr / (4.0 * device.quantum_efficiency));
    ctx.finish("level", clock);
    return exit_ok;
}

// ---------------------------------------------------------------- synth

int cmd_synth(Context& ctx) {
    Clock clock;
    ctx.load(true);
    const json& root = ctx.config.normalized();
    if (!root.contains("synth")) throw ConfigError("synth: section is missing");
    const json& s = root["synth"];
    auto q = [&](const char* key) {
        if (!s.contains(key)) throw ConfigError(std::string("synth.") + key + ": required field is missing");
        return s[key].is_object() ? s[key]["value"].get<double>() : s[key].get<double>();
    };
    InversionRecoveryParams p{q("a1"), q("a2"), q("coupling"), q("gamma2"), q("gamma1")};
    const double t_max = q("horizon");
    const int samples = static_cast<int>(q("samples"));
    const double noise = s.value("noise_sd", 0.0);
    if (samples < 2 || !(t_max > 0.0)) throw ConfigError("synth: need samples >= 2 and horizon > 0");
    std::vector<double> grid(samples);
    for (int i = 0; i < samples; ++i) grid[i] = t_max * i / (samples - 1);
    const DecayTrace trace = synth_inversion_recovery(p, grid, noise, ctx.run.seed);
    csv::write_trace(trace, ctx.out_dir / "trace.csv");
    ctx.manifest.add_output(ctx.out_dir, "trace.csv");
    ctx.finish("synth", clock);
    return exit_ok;
}

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config (or a run manifest)");
    sub->add_option("--out-dir", f.out_dir, "output directory")->capture_default_str();
    f.seed_opt = sub->add_option("--seed", f.seed, "random seed");
    f.method_opt = sub->add_option("--method", f.method, "analytic | oracle | both | closed-form | quadrature");
    f.tol_opt = sub->add_option("--tol", f.tol, "relative tolerance for quadrature");
    f.jobs_opt = sub->add_option("--jobs", f.jobs, "worker threads for sweeps");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Readout-induced T1 predictions: number-splitting spectra, overlap rates, master-equation checks",
                 "numsplit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    using Handler = int (*)(Context&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"pointer", "steady-state pointer fields, Gamma_m, B and A", cmd_pointer},
        {"spectrum", "emission spectra for the three canonical drive frequencies", cmd_spectrum},
        {"rate", "decay rate for the configured drive and bath", cmd_rate},
        {"sweep", "T1 map over drive frequency and measurement strength", cmd_sweep},
        {"oracle", "master-equation simulation and rate extraction", cmd_oracle},
        {"fit-tls", "fit an inversion-recovery trace and write a bath file", cmd_fit_tls},
        {"level", "drive amplitudes for a target SNR rate plus the Stark shift", cmd_level},
        {"synth", "synthetic inversion-recovery trace", cmd_synth},
    };
    // One Flags per subcommand: CLI11 binds options to storage at setup time.
    std::map<std::string, Flags> flags;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help, handler] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        Flags& f = flags[name];
        add_common(sub, f);
        if (name == "fit-tls") sub->add_option("--trace", f.trace, "CSV with t_us, P_e columns");
        if (name == "level") f.snr_opt = sub->add_option("--snr-rate", f.snr_rate, "target d/dt SNR in 1/us");
        subs[name] = sub;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    for (const auto& [name, help, handler] : commands) {
        if (!subs[name]->parsed()) continue;
        Context ctx;
        ctx.flags = flags[name];
        ctx.out = &out;
        try {
            return handler(ctx);
        } catch (const ConfigError& e) {
            fmt::print(err, "config error: {}\n", e.what());
            return exit_config;
        } catch (const FitError& e) {
            fmt::print(err, "fit failed: {} (residual norm {:.3g}, {} iterations)\n", e.what(),
                       e.best().residual_norm, e.best().iterations);
            return exit_numerical;
        } catch (const NumericalError& e) {
            fmt::print(err, "numerical failure: {}\n", e.what());
            return exit_numerical;
        } catch (const nlohmann::json::exception& e) {
            fmt::print(err, "config error: {}\n", e.what());
            return exit_config;
        } catch (const std::exception& e) {
            fmt::print(err, "error: {}\n", e.what());
            return exit_numerical;
        }
    }
    return exit_config;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace numsplit
