#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "numsplit/error.hpp"
#include "numsplit/pointer.hpp"

using namespace numsplit;
using fixtures::mhz;
using fixtures::rel;

namespace {

// Classical cavity: da/dt = (i (Delta_d - chi_q) - k_q / 2) a - i d_q, fixed-step RK4.
cplx integrate_field(cplx start, double detuning, double chi_q, double kappa_q, double drive, double t_end) {
    auto f = [&](cplx a) { return cplx(-kappa_q / 2.0, detuning - chi_q) * a - cplx(0.0, drive); };
    const int steps = 200000;
    const double h = t_end / steps;
    cplx a = start;
    for (int i = 0; i < steps; ++i) {
        const cplx k1 = f(a), k2 = f(a + 0.5 * h * k1), k3 = f(a + 0.5 * h * k2), k4 = f(a + h * k3);
        a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return a;
}

}  // namespace

TEST_CASE("pointer: symmetric loss, resonant drive gives Gamma_m = kappa |da|^2 / 2") {
    const DeviceParams dev = fixtures::weak_device();
    const DriveSpec drive = fixtures::drive_at_separation(dev, dev.resonator_frequency, 1.0);
    const PointerSolution sol = solve_pointer_states(dev, drive);
    CHECK(std::abs(sol.delta_alpha) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rel(sol.gamma_m, dev.kappa / 2.0) < 1e-12);
    CHECK(sol.gamma_m / (2.0 * std::numbers::pi) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("pointer: chi = -kappa, Delta_d = 0 needs d_r = kappa sqrt(5) / 4 for |da| = 1") {
    const DeviceParams dev = fixtures::weak_device();
    const double d = amplitude_for_separation(dev, dev.resonator_frequency, 1.0);
    CHECK(rel(d, dev.kappa * std::sqrt(5.0) / 4.0) < 1e-13);
    // frozen from the Fock-space oracle script
    CHECK(rel(d, 1.756203682760182e+01) < 1e-13);
    CHECK(d / (2.0 * std::numbers::pi) == doctest::Approx(2.795).epsilon(1e-3));
}

TEST_CASE("pointer: steady fields agree with the integrated cavity equations") {
    const DeviceParams dev = fixtures::lab_device();
    const DriveSpec drive = DriveSpec::from_device(dev, dev.resonator_frequency + mhz(-3.0), mhz(1.3));
    const PointerSolution sol = solve_pointer_states(dev, drive);
    const double t_end = 60.0 / sol.kappa_e;
    const cplx ag = integrate_field(0.0, sol.detuning, 0.0, sol.kappa_g, drive.amplitude_g(), t_end);
    const cplx ae = integrate_field(0.0, sol.detuning, dev.dispersive_shift, sol.kappa_e, drive.amplitude_e(), t_end);
    CHECK(std::abs(ag - sol.alpha_g) < 1e-9 * std::abs(sol.alpha_g));
    CHECK(std::abs(ae - sol.alpha_e) < 1e-9 * std::abs(sol.alpha_e));
}

TEST_CASE("pointer: zero drive leaves everything at zero") {
    const DeviceParams dev = fixtures::lab_device();
    const PointerSolution sol = solve_pointer_states(dev, DriveSpec::from_device(dev, dev.resonator_frequency, 0.0));
    CHECK(sol.alpha_g == cplx{});
    CHECK(sol.alpha_e == cplx{});
    CHECK(sol.gamma_m == 0.0);
    CHECK(sol.shift_b == 0.0);
    CHECK(sol.a == cplx{});
}

TEST_CASE("pointer: transient field") {
    const DeviceParams dev = fixtures::weak_device();
    const DriveSpec drive = fixtures::drive_at_separation(dev, dev.resonator_frequency, 1.0);
    const PointerSolution sol = solve_pointer_states(dev, drive);

    SUBCASE("starts at alpha_e and relaxes to alpha_g") {
        CHECK(std::abs(transient_field(sol, 0.0).second - sol.alpha_e) < 1e-15);
        CHECK(std::abs(transient_field(sol, 2000.0 / sol.kappa_g).second - sol.alpha_g) < 1e-14);
    }
    SUBCASE("t = 2 / kappa_g at Delta_d = 0 is alpha_g + da / e") {
        const cplx expected = sol.alpha_g + sol.delta_alpha * std::exp(-1.0);
        const cplx got = transient_field(sol, 2.0 / sol.kappa_g).second;
        CHECK(std::abs(got - expected) < 1e-14);
        const cplx ode = integrate_field(sol.alpha_e, sol.detuning, 0.0, sol.kappa_g, drive.amplitude_g(),
                                         2.0 / sol.kappa_g);
        CHECK(std::abs(got - ode) < 1e-12);
    }
    SUBCASE("negative time is rejected") { CHECK_THROWS_AS(transient_field(sol, -1.0), ConfigError); }
}

TEST_CASE("pointer: |A| = |da|^2 and the closed forms hold across random parameters") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> chi(-15.0, -0.5), kap(0.5, 12.0), dp(-0.6, 0.6), det(-25.0, 20.0),
        amp(0.0, 4.0);
    for (int i = 0; i < 200; ++i) {
        DeviceParams dev = fixtures::weak_device();
        dev.dispersive_shift = mhz(chi(rng));
        dev.kappa = mhz(kap(rng));
        dev.purcell_asymmetry = dp(rng);
        const DriveSpec drive = DriveSpec::from_device(dev, dev.resonator_frequency + mhz(det(rng)), mhz(amp(rng)));
        const PointerSolution sol = solve_pointer_states(dev, drive);
        const double da2 = std::norm(sol.delta_alpha);
        CHECK(std::abs(std::abs(sol.a) - da2) <= 1e-10 * da2);
        CHECK(std::abs(sol.gamma_m - gamma_m_closed_form(sol)) <= 1e-9 * gamma_m_closed_form(sol) + 1e-300);
        CHECK(std::abs(sol.shift_b - shift_b_closed_form(sol, drive)) <= 1e-9 * std::abs(sol.shift_b) + 1e-12);
    }
}

TEST_CASE("pointer: SNR leveling") {
    const DeviceParams dev = fixtures::lab_device();
    const double wd = dev.resonator_frequency;

    SUBCASE("target Gamma_m is R / (4 eta)") {
        const double d = level_drive_amplitude(dev, wd, 1.0);
        const PointerSolution sol = solve_pointer_states(dev, DriveSpec::from_device(dev, wd, d));
        CHECK(rel(sol.gamma_m, 1.9319938176197836) < 1e-12);
    }
    SUBCASE("doubling the target scales d_r by sqrt 2") {
        CHECK(rel(level_drive_amplitude(dev, wd, 2.0), std::sqrt(2.0) * level_drive_amplitude(dev, wd, 1.0)) < 1e-14);
    }
    SUBCASE("a zero target is rejected") { CHECK_THROWS_AS(level_drive_amplitude(dev, wd, 0.0), ConfigError); }
}

TEST_CASE("pointer: device from measured linewidths") {
    const DeviceParams dev = fixtures::lab_device();
    CHECK(rel(dev.kappa_g(), mhz(9.0)) < 1e-14);
    CHECK(rel(dev.kappa_e(), mhz(6.6)) < 1e-14);
    CHECK(rel(dev.purcell_asymmetry, -1.547674213348711e-01) < 1e-12);
}

TEST_CASE("pointer: invalid inputs") {
    DeviceParams dev = fixtures::weak_device();
    dev.kappa = -1.0;
    CHECK_THROWS_AS(solve_pointer_states(dev, DriveSpec{}), ConfigError);
    dev = fixtures::weak_device();
    dev.purcell_asymmetry = 2.0;
    CHECK_THROWS_AS(dev.validate(), ConfigError);
    dev = fixtures::weak_device();
    dev.quantum_efficiency = 1.5;
    CHECK_THROWS_AS(dev.validate(), ConfigError);
}
