#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "numsplit/bath.hpp"
#include "numsplit/error.hpp"

using namespace numsplit;
using fixtures::mhz;
using fixtures::rel;

namespace {

std::vector<double> grid(double t_max, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = t_max * i / (n - 1);
    return g;
}

// Far-detuned defect seen in inversion recovery: g/2pi = 0.20 MHz, gamma2 = 0.85, gamma1 = 0.15 /us.
InversionRecoveryParams far_params() { return {0.45, 0.5, mhz(0.20), 0.85, 0.15}; }

}  // namespace

TEST_CASE("bath: Lorentzian density") {
    const DeviceParams dev = fixtures::lab_device();
    BathSpectrum b;
    b.components = {fixtures::tls(dev, -16.3, 0.20, 0.85)};

    SUBCASE("peak value 2 g^2 / gamma2") {
        CHECK(rel(evaluate_bath(b, b.components[0].frequency), 2.0 * std::pow(mhz(0.2), 2) / 0.85) < 1e-14);
    }
    SUBCASE("far away only the floor is left") {
        b.background = 0.15;
        CHECK(rel(evaluate_bath(b, b.components[0].frequency + 1e9), 0.15) < 1e-12);
    }
    SUBCASE("value at w_q with the 0.15 /us floor") {
        b.background = 0.15;
        // 40-digit direct substitution
        CHECK(rel(evaluate_bath(b, dev.qubit_frequency), 0.15025591974247157) < 1e-14);
    }
}

TEST_CASE("bath: relaxation split") {
    TLSSpec t;
    t.gamma2 = 1.0;
    CHECK(t.relaxation_split() == std::pair<double, double>{2.0, 0.0});
    t.gamma1 = 0.5;
    CHECK(t.relaxation_split() == std::pair<double, double>{0.5, 0.75});
    t.gamma1.reset();
    t.gamma_phi = 0.25;
    CHECK(t.relaxation_split() == std::pair<double, double>{1.5, 0.25});
    t.gamma_phi = 2.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t.gamma_phi.reset();
    t.gamma1 = 1.0;
    t.gamma_phi = 1.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("bath: inversion-recovery model") {
    InversionRecoveryParams p{0.4, 0.55, mhz(0.19), 1.35, 0.11};
    CHECK(inversion_recovery_model(p, 0.0) == doctest::Approx(0.95).epsilon(1e-15));

    SUBCASE("zero coupling, a1 = 0 is a single exponential") {
        InversionRecoveryParams q{0.0, 0.8, 0.0, 1.0, 0.3};
        for (double t : {0.0, 1.0, 4.0}) CHECK(inversion_recovery_model(q, t) == doctest::Approx(0.8 * std::exp(-0.3 * t)));
    }
    SUBCASE("oscillation period pi / g in the first term") {
        const double period = std::numbers::pi / p.coupling;
        CHECK(period == doctest::Approx(1.0 / (2.0 * 0.19)).epsilon(1e-12));
        InversionRecoveryParams first = p;
        first.a2 = 0.0;
        const DecayTrace tr = synth_inversion_recovery(first, grid(20.0, 20001), 0.0, 1);
        // successive upward zero crossings of the cosine
        std::vector<double> crossings;
        for (std::size_t i = 1; i < tr.time.size(); ++i)
            if (tr.population[i - 1] < 0.0 && tr.population[i] >= 0.0) crossings.push_back(tr.time[i]);
        REQUIRE(crossings.size() >= 3);
        CHECK(std::abs((crossings[2] - crossings[1]) - period) < 2e-3);
    }
    SUBCASE("seeded noise is reproducible") {
        const DecayTrace a = synth_inversion_recovery(p, grid(10.0, 101), 0.01, 42);
        const DecayTrace b = synth_inversion_recovery(p, grid(10.0, 101), 0.01, 42);
        CHECK(a.population == b.population);
    }
}

TEST_CASE("bath: fit recovers noise-free parameters") {
    for (const InversionRecoveryParams& p : {far_params(), InversionRecoveryParams{0.4, 0.55, mhz(0.19), 1.35, 0.11}}) {
        const DecayTrace tr = synth_inversion_recovery(p, grid(20.0, 401), 0.0, 0);
        const InversionRecoveryFit fit = fit_inversion_recovery(tr, guess_inversion_recovery(tr));
        CHECK(rel(fit.params.coupling, p.coupling) < 1e-6);
        CHECK(rel(fit.params.gamma2, p.gamma2) < 1e-6);
        CHECK(rel(fit.params.gamma1, p.gamma1) < 1e-6);
        CHECK(rel(fit.params.a1, p.a1) < 1e-6);
        CHECK(rel(fit.params.a2, p.a2) < 1e-6);
        CHECK(fit.coupling_identifiable);
    }
}

TEST_CASE("bath: fit at 1% noise, median over 50 seeds") {
    const InversionRecoveryParams p = far_params();
    std::vector<double> g_err, gamma2_err;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const DecayTrace tr = synth_inversion_recovery(p, grid(20.0, 401), 0.01, seed);
        const InversionRecoveryFit fit = fit_inversion_recovery(tr, guess_inversion_recovery(tr));
        g_err.push_back(rel(fit.params.coupling, p.coupling));
        gamma2_err.push_back(rel(fit.params.gamma2, p.gamma2));
    }
    std::nth_element(g_err.begin(), g_err.begin() + 25, g_err.end());
    std::nth_element(gamma2_err.begin(), gamma2_err.begin() + 25, gamma2_err.end());
    CHECK(g_err[25] < 0.05);
    CHECK(gamma2_err[25] < 0.05);
}

TEST_CASE("bath: a pure exponential flags the coupling as unidentifiable") {
    const DecayTrace tr = synth_inversion_recovery({0.0, 0.9, 0.0, 1.0, 0.2}, grid(20.0, 401), 0.0, 0);
    const InversionRecoveryFit fit = fit_inversion_recovery(tr, {0.3, 0.6, 1.0, 1.0, 0.3});
    CHECK_FALSE(fit.coupling_identifiable);
    CHECK(fit.message.find("unidentifiable") != std::string::npos);
    CHECK(rel(fit.params.gamma1, 0.2) < 1e-6);
}

TEST_CASE("bath: fit preconditions") {
    const InversionRecoveryParams p = far_params();
    CHECK_THROWS_AS(fit_inversion_recovery(synth_inversion_recovery(p, grid(20.0, 10), 0.0, 0), p), ConfigError);
    // 2 us is shorter than 3 / gamma2
    CHECK_THROWS_AS(fit_inversion_recovery(synth_inversion_recovery(p, grid(2.0, 100), 0.0, 0), p), ConfigError);
    DecayTrace bad = synth_inversion_recovery(p, grid(20.0, 100), 0.0, 0);
    bad.population[3] = std::nan("");
    CHECK_THROWS_AS(fit_inversion_recovery(bad, p), ConfigError);
}

TEST_CASE("bath: spectrum from a fit") {
    const DeviceParams dev = fixtures::lab_device();
    const InversionRecoveryParams p = far_params();
    const DecayTrace tr = synth_inversion_recovery(p, grid(20.0, 401), 0.0, 0);
    const InversionRecoveryFit fit = fit_inversion_recovery(tr, guess_inversion_recovery(tr));
    const double w_tls = dev.qubit_frequency + mhz(-16.3);
    const BathSpectrum b = bath_from_fit(fit, w_tls, 0.15);
    REQUIRE(b.components.size() == 1);
    CHECK(b.components[0].frequency == w_tls);
    CHECK(rel(b.components[0].coupling, mhz(0.20)) < 1e-6);
    CHECK(b.background == 0.15);

    SUBCASE("zero coupling leaves the floor only") {
        InversionRecoveryFit none = fit;
        none.params.coupling = 0.0;
        const BathSpectrum flat = bath_from_fit(none, w_tls, 0.15);
        CHECK(flat.components.empty());
        CHECK(evaluate_bath(flat, w_tls) == 0.15);
    }
    SUBCASE("two configurations of one defect share g within the fit error") {
        const InversionRecoveryParams near{0.4, 0.55, mhz(0.19), 1.35, 0.11};
        const DecayTrace tr2 = synth_inversion_recovery(near, grid(20.0, 401), 0.01, 3);
        const DecayTrace tr1 = synth_inversion_recovery({0.4, 0.55, mhz(0.19), 0.85, 0.15}, grid(20.0, 401), 0.01, 4);
        const auto f1 = fit_inversion_recovery(tr1, guess_inversion_recovery(tr1));
        const auto f2 = fit_inversion_recovery(tr2, guess_inversion_recovery(tr2));
        const BathSpectrum b1 = bath_from_fit(f1, dev.qubit_frequency + mhz(-16.3), 0.15);
        const BathSpectrum b2 = bath_from_fit(f2, dev.qubit_frequency + mhz(-6.0), 0.11);
        CHECK(b1.components[0].frequency != b2.components[0].frequency);
        const double sigma = std::sqrt(f1.covariance(2, 2) + f2.covariance(2, 2));
        CHECK(std::abs(f1.params.coupling - f2.params.coupling) < 3.0 * sigma);
    }
}
