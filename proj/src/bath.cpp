#include "numsplit/bath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "numsplit/error.hpp"
#include "numsplit/lsq.hpp"

namespace numsplit {

std::pair<double, double> TLSSpec::relaxation_split() const {
    if (gamma1 && gamma_phi) return {*gamma1, *gamma_phi};
    if (gamma1) return {*gamma1, gamma2 - *gamma1 / 2.0};
    if (gamma_phi) return {2.0 * (gamma2 - *gamma_phi), *gamma_phi};
    return {2.0 * gamma2, 0.0};
}

void TLSSpec::validate() const {
    if (!std::isfinite(frequency) || !std::isfinite(coupling) || !std::isfinite(gamma2))
        throw ConfigError("TLS parameters must be finite");
    if (coupling < 0.0) throw ConfigError("TLS coupling must be non-negative");
    if (!(gamma2 > 0.0)) throw ConfigError("TLS gamma2 must be positive");
    const auto [g1, gphi] = relaxation_split();
    if (g1 < 0.0 || gphi < 0.0)
        throw ConfigError("TLS relaxation split yields a negative rate");
    if (std::abs(g1 / 2.0 + gphi - gamma2) > 1e-9 * gamma2)
        throw ConfigError("TLS split violates gamma2 = gamma1 / 2 + gamma_phi");
}

void BathSpectrum::validate() const {
    if (!std::isfinite(background) || background < 0.0)
        throw ConfigError("bath background must be finite and non-negative");
    for (const auto& c : components) c.validate();
}

double evaluate_bath(const BathSpectrum& bath, double omega) {
    double value = bath.background;
    for (const TLSSpec& tls : bath.components) {
        const double detuning = omega - tls.frequency;
        value += 2.0 * tls.coupling * tls.coupling * tls.gamma2 /
                 (detuning * detuning + tls.gamma2 * tls.gamma2);
    }
    return value;
}

Eigen::VectorXd InversionRecoveryParams::to_vector() const {
    Eigen::VectorXd p(5);
    p << a1, a2, coupling, gamma2, gamma1;
    return p;
}

InversionRecoveryParams InversionRecoveryParams::from_vector(const Eigen::VectorXd& p) {
    return {p(0), p(1), p(2), p(3), p(4)};
}

double inversion_recovery_model(const InversionRecoveryParams& p, double t) {
    return p.a1 * std::cos(2.0 * p.coupling * t) * std::exp(-p.gamma2 * t) +
           p.a2 * std::exp(-p.gamma1 * t);
}

DecayTrace synth_inversion_recovery(const InversionRecoveryParams& params,
                                    const std::vector<double>& grid, double noise_sd,
                                    std::uint64_t seed) {
    if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("time grid must be ordered");
    if (noise_sd < 0.0) throw ConfigError("noise standard deviation must be non-negative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    DecayTrace trace;
    trace.time = grid;
    trace.population.reserve(grid.size());
    for (double t : grid) {
        double value = inversion_recovery_model(params, t);
        if (noise_sd > 0.0) value += noise_sd * noise(rng);
        trace.population.push_back(value);
    }
    return trace;
}

namespace {

void check_trace(const DecayTrace& trace) {
    if (trace.time.size() != trace.population.size())
        throw ConfigError("trace time and population lengths differ");
    if (trace.time.size() < 20) throw ConfigError("inversion-recovery fit needs at least 20 samples");
    for (std::size_t i = 0; i < trace.time.size(); ++i) {
        if (!std::isfinite(trace.time[i]) || !std::isfinite(trace.population[i]))
            throw ConfigError("trace contains non-finite values");
        if (i > 0 && !(trace.time[i] > trace.time[i - 1]))
            throw ConfigError("trace time grid must be strictly increasing");
    }
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return out;
}

}  // namespace

InversionRecoveryParams guess_inversion_recovery(const DecayTrace& trace) {
    check_trace(trace);
    const auto& t = trace.time;
    const auto& y = trace.population;
    const std::size_t m = t.size();
    const double span = t.back() - t.front();
    const double spacing = span / static_cast<double>(m - 1);

    std::vector<double> couplings = log_grid(0.2 / span, std::numbers::pi / (4.0 * spacing), 48);
    couplings.insert(couplings.begin(), 0.0);
    const auto dephasings = log_grid(0.3 / span, 0.5 / spacing, 24);
    const auto relaxations = log_grid(0.02 / span, 0.5 / spacing, 24);

    InversionRecoveryParams best{};
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<double> osc(m), dec(m);
    for (double g : couplings) {
        for (double g2 : dephasings) {
            for (std::size_t i = 0; i < m; ++i) osc[i] = std::cos(2.0 * g * t[i]) * std::exp(-g2 * t[i]);
            for (double g1 : relaxations) {
                double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
                for (std::size_t i = 0; i < m; ++i) {
                    dec[i] = std::exp(-g1 * t[i]);
                    s11 += osc[i] * osc[i];
                    s12 += osc[i] * dec[i];
                    s22 += dec[i] * dec[i];
                    b1 += osc[i] * y[i];
                    b2 += dec[i] * y[i];
                }
                const double det = s11 * s22 - s12 * s12;
                if (!(det > 1e-12 * s11 * s22)) continue;
                const double a1 = std::clamp((b1 * s22 - b2 * s12) / det, -1.5, 1.5);
                const double a2 = std::clamp((b2 * s11 - b1 * s12) / det, -1.5, 1.5);
                double cost = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double r = a1 * osc[i] + a2 * dec[i] - y[i];
                    cost += r * r;
                }
                if (cost < best_cost) {
                    best_cost = cost;
                    best = {a1, a2, g, g2, g1};
                }
            }
        }
    }
    return best;
}

InversionRecoveryFit fit_inversion_recovery(const DecayTrace& trace,
                                            const InversionRecoveryParams& initial_guess,
                                            int max_iterations) {
    check_trace(trace);
    if (!(initial_guess.gamma2 > 0.0) || !(initial_guess.gamma1 > 0.0))
        throw ConfigError("initial guess rates must be positive");
    const double span = trace.time.back() - trace.time.front();
    if (span < 3.0 / initial_guess.gamma2)
        throw ConfigError("trace must span at least 3 / gamma2");

    const auto& t = trace.time;
    const auto& y = trace.population;
    const Eigen::Index m = static_cast<Eigen::Index>(t.size());

    lsq::Model model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(m);
        if (jac) jac->resize(m, 5);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double ti = t[i];
            const double c = std::cos(2.0 * p(2) * ti);
            const double s = std::sin(2.0 * p(2) * ti);
            const double e2 = std::exp(-p(3) * ti);
            const double e1 = std::exp(-p(4) * ti);
            r(i) = p(0) * c * e2 + p(1) * e1 - y[i];
            if (jac) {
                (*jac)(i, 0) = c * e2;
                (*jac)(i, 1) = e1;
                (*jac)(i, 2) = -2.0 * ti * p(0) * s * e2;
                (*jac)(i, 3) = -ti * p(0) * c * e2;
                (*jac)(i, 4) = -ti * p(1) * e1;
            }
        }
    };

    Eigen::VectorXd lower(5), upper(5);
    const double inf = std::numeric_limits<double>::infinity();
    lower << -1.5, -1.5, 0.0, 1e-12, 1e-12;
    upper << 1.5, 1.5, inf, inf, inf;

    lsq::Options options;
    options.max_iterations = max_iterations;
    const lsq::Result result = lsq::minimize(model, initial_guess.to_vector(), lower, upper, options);

    InversionRecoveryFit fit;
    fit.params = InversionRecoveryParams::from_vector(result.params);
    fit.residual_norm = result.residuals.norm();
    fit.iterations = result.iterations;
    fit.message = result.message;
    fit.covariance = lsq::covariance(result, &fit.condition);

    const double a1 = std::abs(fit.params.a1);
    const double a1_sd = std::sqrt(std::max(fit.covariance(0, 0), 0.0));
    const double amplitude_scale = std::max(a1, std::abs(fit.params.a2));
    fit.coupling_identifiable = std::isfinite(fit.condition) && fit.condition < 1e14 &&
                                a1 > 1e-6 * amplitude_scale && a1 > 3.0 * a1_sd;
    if (!fit.coupling_identifiable) fit.message += "; g_tls and gamma2 are unidentifiable (a1 ~ 0)";

    if (!result.converged) throw FitError("inversion-recovery fit did not converge: " + result.message, fit);
    return fit;
}

BathSpectrum bath_from_fit(const InversionRecoveryFit& fit, double tls_frequency, double background) {
    if (fit.params.coupling < 0.0 || fit.params.gamma2 < 0.0 || fit.params.gamma1 < 0.0 || background < 0.0)
        throw ConfigError("fitted rates must be non-negative");
    BathSpectrum bath;
    bath.background = background;
    if (fit.params.coupling > 0.0) {
        TLSSpec tls;
        tls.frequency = tls_frequency;
        tls.coupling = fit.params.coupling;
        tls.gamma2 = fit.params.gamma2;
        bath.components.push_back(tls);
    }
    bath.validate();
    return bath;
}

}  // namespace numsplit
