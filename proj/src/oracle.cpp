#include "numsplit/oracle.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>

#include "numsplit/error.hpp"
#include "numsplit/lsq.hpp"

namespace numsplit {

namespace {

constexpr cplx I{0.0, 1.0};

SparseC from_triplets(int rows, int cols, const std::vector<Eigen::Triplet<cplx>>& t) {
    SparseC m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SparseC identity(int n) {
    SparseC m(n, n);
    m.setIdentity();
    return m;
}

SparseC lowering(int n) {
    std::vector<Eigen::Triplet<cplx>> t;
    for (int k = 1; k < n; ++k) t.emplace_back(k - 1, k, std::sqrt(static_cast<double>(k)));
    return from_triplets(n, n, t);
}

SparseC diag2(double g, double e) { return from_triplets(2, 2, {{0, 0, g}, {1, 1, e}}); }

// Two-level lowering operator |g><e| with g = 0, e = 1.
SparseC sigma_minus() { return from_triplets(2, 2, {{0, 1, 1.0}}); }

// op_q x op_a x (op on TLS `which`, identity elsewhere).
SparseC embed(const SparseC& op_q, const SparseC& op_a, int tls_count, int which = -1,
              const SparseC& op_tls = SparseC()) {
    SparseC out = Eigen::kroneckerProduct(op_q, op_a).eval();
    for (int k = 0; k < tls_count; ++k) {
        const SparseC local = k == which ? op_tls : identity(2);
        out = Eigen::kroneckerProduct(out, local).eval();
    }
    out.prune(cplx(0.0, 0.0));
    return out;
}

// Upper bound on the 2-norm: sqrt(|A|_1 |A|_inf).
double norm_bound(const SparseC& m) {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
    Eigen::VectorXd cols = Eigen::VectorXd::Zero(m.cols());
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseC::InnerIterator it(m, k); it; ++it) {
            rows(it.row()) += std::abs(it.value());
            cols(it.col()) += std::abs(it.value());
        }
    const double r = rows.size() ? rows.maxCoeff() : 0.0;
    const double c = cols.size() ? cols.maxCoeff() : 0.0;
    return std::sqrt(r * c);
}

double poisson_top_two(double mean, int n) {
    // P(n-2) + P(n-1) for a Poisson distribution.
    auto p = [mean](int k) {
        if (k < 0) return 0.0;
        if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
        return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
    };
    return p(n - 2) + p(n - 1);
}

SparseC selection(const std::vector<int>& indices, int dimension) {
    std::vector<Eigen::Triplet<cplx>> t;
    for (std::size_t i = 0; i < indices.size(); ++i) t.emplace_back(static_cast<int>(i), indices[i], 1.0);
    return from_triplets(static_cast<int>(indices.size()), dimension, t);
}

// Block pieces of the generator restricted to the 1- and 0-excitation sectors.
struct BlockJump {
    int to;    // target sector
    int from;  // source sector
    SparseC op;
    SparseC adj;
};

struct SectorModel {
    std::array<SparseC, 2> heff;      // non-Hermitian H - i/2 sum J'J, per sector
    std::array<SparseC, 2> heff_adj;
    std::vector<BlockJump> jumps;
    std::array<Eigen::VectorXd, 2> excited, photons, top;  // diagonal observables
    double norm{0.0};  // bound on the generator norm
};

using State = std::array<Eigen::MatrixXcd, 2>;

void rhs(const SectorModel& m, const State& rho, State& out) {
    for (int s = 0; s < 2; ++s) {
        if (rho[s].size() == 0) continue;
        out[s].noalias() = -I * (m.heff[s] * rho[s]);
        out[s].noalias() += I * (rho[s] * m.heff_adj[s]);
    }
    for (const BlockJump& j : m.jumps) {
        const Eigen::MatrixXcd left = j.op * rho[j.from];
        out[j.to].noalias() += left * j.adj;
    }
}

double expectation(const Eigen::VectorXd& diag, const Eigen::MatrixXcd& rho) {
    if (rho.size() == 0) return 0.0;
    return diag.dot(rho.diagonal().real());
}

}  // namespace

void SimConfig::validate() const {
    device.validate();
    drive.validate();
    for (const auto& t : tls) t.validate();
    if (!(qubit_decay >= 0.0)) throw ConfigError("qubit_decay must be non-negative");
    if (fock < 0) throw ConfigError("fock truncation must be non-negative (0 = automatic)");
    if (!(horizon > 0.0)) throw ConfigError("simulation horizon must be positive");
    if (horizon < 20.0 / device.kappa_g()) throw ConfigError("simulation horizon must be at least 20 / kappa_g");
    if (!(stop_loss >= 0.0 && stop_loss < 1.0)) throw ConfigError("stop_loss must lie in [0, 1)");
    if (!(sample_interval >= 0.0)) throw ConfigError("sample_interval must be non-negative");
    if (!(step_scale > 0.0 && step_scale <= 1.0)) throw ConfigError("step_scale must lie in (0, 1]");
    if (fock > 0 && fock < minimum_fock(device, drive))
        throw ConfigError("fock truncation below the mean + 6 sigma rule for the pointer fields");
}

int minimum_fock(const DeviceParams& device, const DriveSpec& drive) {
    const PointerSolution sol = solve_pointer_states(device, drive);
    double mean = std::max(std::norm(sol.alpha_e), std::norm(sol.alpha_g));
    const int rule = static_cast<int>(std::ceil(mean + 6.0 * std::sqrt(mean + 1.0)));
    // The ground-branch field spirals from alpha_e to alpha_g after a decay.
    const double span = 20.0 / sol.kappa_g;
    for (int i = 0; i <= 400; ++i) mean = std::max(mean, std::norm(transient_field(sol, span * i / 400).second));
    int n = std::max(rule, 2);
    while (poisson_top_two(mean, n) >= 1e-7) ++n;
    return n;
}

int resolved_fock(const SimConfig& cfg) { return cfg.fock > 0 ? cfg.fock : minimum_fock(cfg.device, cfg.drive); }

int Generator::index(int qubit, int photon, unsigned tls_bits) const {
    return ((qubit * fock + photon) << tls_count) + static_cast<int>(tls_bits);
}

int Generator::excitations(int idx) const {
    const unsigned bits = static_cast<unsigned>(idx) & ((1u << tls_count) - 1u);
    const int qubit = (idx >> tls_count) / fock;
    return qubit + std::popcount(bits);
}

Generator build_generator(const SimConfig& cfg) {
    cfg.validate();
    Generator gen;
    gen.fock = resolved_fock(cfg);
    gen.tls_count = static_cast<int>(cfg.tls.size());
    if (gen.tls_count > 10) throw ConfigError("too many TLS modes");
    const long dimension = 2L * gen.fock * (1L << gen.tls_count);
    if (dimension > max_dimension)
        throw ConfigError("composite dimension " + std::to_string(dimension) + " exceeds " +
                          std::to_string(max_dimension));
    gen.dimension = static_cast<int>(dimension);

    const int n = gen.fock;
    const int k = gen.tls_count;
    const SparseC a = lowering(n);
    const SparseC ad = SparseC(a.adjoint());
    const SparseC num = (ad * a).pruned();
    const SparseC pe = diag2(0.0, 1.0);
    const SparseC pg = diag2(1.0, 0.0);
    const SparseC sm = sigma_minus();
    const SparseC sp = SparseC(sm.adjoint());
    const SparseC id2 = identity(2);
    const SparseC ida = identity(n);

    const PointerSolution sol = solve_pointer_states(cfg.device, cfg.drive);
    const double detuning = sol.detuning;
    const double chi = cfg.device.dispersive_shift;
    const double d = cfg.drive.amplitude;

    SparseC h = embed(id2, (-detuning) * num, k);
    h += embed(chi * pe, num, k);
    h += embed(d * (cfg.drive.u * pe + cfg.drive.v * pg), (a + ad).pruned(), k);
    for (int j = 0; j < k; ++j) {
        const TLSSpec& t = cfg.tls[j];
        h += embed(id2, ida, k, j, (t.frequency - cfg.device.qubit_frequency) * (sp * sm).pruned());
        h += embed(t.coupling * sp, ida, k, j, sm);
        h += embed(t.coupling * sm, ida, k, j, sp);
    }
    h.prune(cplx(0.0, 0.0));
    gen.hamiltonian = h;

    const double kappa = cfg.device.kappa;
    gen.jumps.push_back({"resonator", embed(std::sqrt(kappa) * (cfg.drive.x * pe + cfg.drive.y * pg), a, k)});
    for (int j = 0; j < k; ++j) {
        const auto [g1, gphi] = cfg.tls[j].relaxation_split();
        if (g1 > 0.0)
            gen.jumps.push_back({"tls" + std::to_string(j) + "_relax", embed(id2, ida, k, j, std::sqrt(g1) * sm)});
        if (gphi > 0.0)
            gen.jumps.push_back({"tls" + std::to_string(j) + "_dephase",
                                 embed(id2, ida, k, j, std::sqrt(2.0 * gphi) * (sp * sm).pruned())});
    }
    if (cfg.qubit_decay > 0.0)
        gen.jumps.push_back({"qubit_relax", embed(std::sqrt(cfg.qubit_decay) * sm, ida, k)});

    gen.excited_projector = embed(pe, ida, k);
    gen.photon_number = embed(id2, num, k);
    return gen;
}

namespace {

SectorModel restrict_to_sectors(const Generator& gen) {
    std::array<std::vector<int>, 2> members;  // [0] = 1-excitation sector, [1] = 0-excitation sector
    for (int i = 0; i < gen.dimension; ++i) {
        const int e = gen.excitations(i);
        if (e == 1) members[0].push_back(i);
        if (e == 0) members[1].push_back(i);
    }
    std::array<SparseC, 2> sel{selection(members[0], gen.dimension), selection(members[1], gen.dimension)};
    std::array<SparseC, 2> selt{SparseC(sel[0].transpose()), SparseC(sel[1].transpose())};

    SparseC heff = gen.hamiltonian;
    for (const JumpOperator& j : gen.jumps) heff -= (0.5 * I) * (SparseC(j.op.adjoint()) * j.op);

    SectorModel m;
    double jump_norms = 0.0;
    for (int s = 0; s < 2; ++s) {
        m.heff[s] = SparseC((sel[s] * heff * selt[s]).pruned());
        m.heff_adj[s] = SparseC(m.heff[s].adjoint());
        const int other = 1 - s;
        if (SparseC((sel[s] * gen.hamiltonian * selt[other]).pruned()).nonZeros() != 0)
            throw NumericalError("Hamiltonian couples excitation sectors");
    }
    for (const JumpOperator& j : gen.jumps) {
        for (int to = 0; to < 2; ++to)
            for (int from = 0; from < 2; ++from) {
                SparseC block = SparseC((sel[to] * j.op * selt[from]).pruned());
                if (block.nonZeros() == 0) continue;
                if (to == 0 && from == 1) throw NumericalError("jump raises the excitation number");
                m.jumps.push_back({to, from, block, SparseC(block.adjoint())});
            }
        const double jn = norm_bound(j.op);
        jump_norms += jn * jn;
    }
    m.norm = 2.0 * norm_bound(heff) + jump_norms;

    const SparseC top_proj = [&] {
        std::vector<Eigen::Triplet<cplx>> t;
        for (int i = 0; i < gen.dimension; ++i) {
            const int photon = (i >> gen.tls_count) % gen.fock;
            if (photon >= gen.fock - 2) t.emplace_back(i, i, 1.0);
        }
        return from_triplets(gen.dimension, gen.dimension, t);
    }();
    for (int s = 0; s < 2; ++s) {
        m.excited[s] = SparseC(sel[s] * gen.excited_projector * selt[s]).diagonal().real();
        m.photons[s] = SparseC(sel[s] * gen.photon_number * selt[s]).diagonal().real();
        m.top[s] = SparseC(sel[s] * top_proj * selt[s]).diagonal().real();
    }
    return m;
}

Eigen::VectorXcd coherent(cplx alpha, int n) {
    Eigen::VectorXcd c(n);
    c(0) = 1.0;
    for (int k = 1; k < n; ++k) c(k) = c(k - 1) * alpha / std::sqrt(static_cast<double>(k));
    return c / c.norm();
}

}  // namespace

PopulationTrace evolve(const SimConfig& cfg) {
    const Generator gen = build_generator(cfg);
    const SectorModel model = restrict_to_sectors(gen);
    const PointerSolution sol = solve_pointer_states(cfg.device, cfg.drive);

    const int n = gen.fock;
    State rho;
    const int dim1 = n * (1 + gen.tls_count);
    rho[0] = Eigen::MatrixXcd::Zero(dim1, dim1);
    rho[1] = Eigen::MatrixXcd::Zero(n, n);

    // Sector members were collected in ascending full index, so in sector 1 the
    // |e, m, 0...0> states sit after every |g, m', one TLS excited> state.
    auto position_in_sector1 = [&](int full) {
        int pos = 0;
        for (int i = 0; i < full; ++i)
            if (gen.excitations(i) == 1) ++pos;
        return pos;
    };
    switch (cfg.initial) {
        case InitialState::excited_pointer:
        case InitialState::excited_vacuum: {
            const cplx alpha = cfg.initial == InitialState::excited_pointer ? sol.alpha_e : cplx{};
            const Eigen::VectorXcd c = coherent(alpha, n);
            Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim1);
            for (int m = 0; m < n; ++m) psi(position_in_sector1(gen.index(1, m, 0))) = c(m);
            rho[0] = psi * psi.adjoint();
            break;
        }
        case InitialState::ground_vacuum:
            rho[1](0, 0) = 1.0;
            break;
    }

    const double interval = cfg.sample_interval > 0.0 ? cfg.sample_interval
                                                      : std::min(0.1 / sol.kappa_g, 0.05);
    double dt = cfg.step_scale * 2.5 / std::max(model.norm, 1e-12);
    const long per_sample = std::max(1L, static_cast<long>(std::ceil(interval / dt)));
    dt = interval / static_cast<double>(per_sample);
    const long max_samples = static_cast<long>(std::floor(cfg.horizon / interval + 1e-9));
    const double min_time = 20.0 / sol.kappa_g;

    PopulationTrace trace;
    trace.step = dt;
    trace.fock = n;
    trace.dimension = gen.dimension;
    trace.kappa_g = sol.kappa_g;
    trace.min_eigenvalue = std::numeric_limits<double>::infinity();

    bool occupancy_alarm = false, positivity_alarm = false;
    auto record = [&](double t, long sample) {
        const double pe = expectation(model.excited[0], rho[0]) + expectation(model.excited[1], rho[1]);
        const double photons = expectation(model.photons[0], rho[0]) + expectation(model.photons[1], rho[1]);
        const double top = expectation(model.top[0], rho[0]) + expectation(model.top[1], rho[1]);
        const double tr = rho[0].trace().real() + rho[1].trace().real();
        trace.time.push_back(t);
        trace.excited.push_back(pe);
        trace.photons.push_back(photons);
        trace.top_fock.push_back(top);
        trace.max_trace_error = std::max(trace.max_trace_error, std::abs(tr - 1.0));
        if (top > 1e-6) occupancy_alarm = true;
        if (sample % 10 == 0) {
            for (int s = 0; s < 2; ++s) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho[s], Eigen::EigenvaluesOnly);
                trace.min_eigenvalue = std::min(trace.min_eigenvalue, eig.eigenvalues().minCoeff());
            }
            if (trace.min_eigenvalue < -1e-7) positivity_alarm = true;
        }
    };

    State k1, k2, k3, k4, tmp;
    for (int s = 0; s < 2; ++s) {
        k1[s].resizeLike(rho[s]);
        k2[s].resizeLike(rho[s]);
        k3[s].resizeLike(rho[s]);
        k4[s].resizeLike(rho[s]);
        tmp[s].resizeLike(rho[s]);
    }

    record(0.0, 0);
    const double initial_pe = trace.excited.front();
    for (long sample = 1; sample <= max_samples; ++sample) {
        for (long step = 0; step < per_sample; ++step) {
            rhs(model, rho, k1);
            for (int s = 0; s < 2; ++s) tmp[s] = rho[s] + (0.5 * dt) * k1[s];
            rhs(model, tmp, k2);
            for (int s = 0; s < 2; ++s) tmp[s] = rho[s] + (0.5 * dt) * k2[s];
            rhs(model, tmp, k3);
            for (int s = 0; s < 2; ++s) tmp[s] = rho[s] + dt * k3[s];
            rhs(model, tmp, k4);
            for (int s = 0; s < 2; ++s) {
                rho[s] += (dt / 6.0) * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
                // Roundoff leaves a tiny anti-Hermitian part; measure it, then drop it.
                const double herm = (rho[s] - rho[s].adjoint()).cwiseAbs().maxCoeff();
                trace.max_hermiticity_error = std::max(trace.max_hermiticity_error, herm);
                tmp[s] = 0.5 * (rho[s] + rho[s].adjoint());
                rho[s].swap(tmp[s]);
            }
            ++trace.steps;
        }
        const double t = sample * interval;
        record(t, sample);
        if (!std::isfinite(trace.excited.back())) throw NumericalError("master-equation integration diverged");
        if (cfg.stop_loss > 0.0 && t >= min_time && initial_pe > 0.0 &&
            initial_pe - trace.excited.back() >= cfg.stop_loss * initial_pe)
            break;
    }

    if (occupancy_alarm) trace.alarms.push_back("top-two Fock levels exceeded 1e-6 population");
    if (positivity_alarm) trace.alarms.push_back("density matrix eigenvalue below -1e-7");
    if (trace.max_trace_error > 1e-8) trace.alarms.push_back("trace drifted by more than 1e-8");
    return trace;
}

RateFit extract_rate(const PopulationTrace& trace, double window_start) {
    const std::size_t m = trace.time.size();
    if (m != trace.excited.size() || m < 2) throw ConfigError("population trace is empty or inconsistent");
    if (window_start < 0.0) {
        if (!(trace.kappa_g > 0.0)) throw ConfigError("trace lacks kappa_g; pass the window start explicitly");
        window_start = 10.0 / trace.kappa_g;
    }
    const double p0 = trace.excited.front();
    const double loss = p0 - *std::min_element(trace.excited.begin(), trace.excited.end());
    if (!(loss >= 0.02 * std::max(std::abs(p0), 1e-300)))
        throw NumericalError("insufficient decay: population fell by less than 2% over the horizon");

    std::vector<double> t, y;
    for (std::size_t i = 0; i < m; ++i)
        if (trace.time[i] >= window_start - 1e-12) {
            t.push_back(trace.time[i] - window_start);
            y.push_back(trace.excited[i]);
        }
    if (t.size() < 20) throw NumericalError("fewer than 20 samples after the fit-window start");

    RateFit fit;
    fit.window_start = window_start;
    const Eigen::Index count = static_cast<Eigen::Index>(t.size());

    lsq::Model model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(count);
        if (jac) jac->resize(count, 3);
        for (Eigen::Index i = 0; i < count; ++i) {
            const double e = std::exp(-p(1) * t[i]);
            r(i) = p(0) * e + p(2) - y[i];
            if (jac) {
                (*jac)(i, 0) = e;
                (*jac)(i, 1) = -t[i] * p(0) * e;
                (*jac)(i, 2) = 1.0;
            }
        }
    };
    // Seed from the log slope between the window ends.
    const double y0 = std::max(y.front(), 1e-12);
    const double y1 = std::max(y.back(), 1e-12);
    Eigen::VectorXd guess(3);
    guess << y0, std::max(std::log(y0 / y1) / t.back(), 1e-9), 0.0;
    Eigen::VectorXd lower(3), upper(3);
    const double inf = std::numeric_limits<double>::infinity();
    lower << -inf, 0.0, 0.0;
    upper << inf, inf, 0.1;
    lsq::Options options;
    options.max_iterations = 1000;
    const lsq::Result result = lsq::minimize(model, guess, lower, upper, options);
    if (!result.converged)
        throw NumericalError("exponential rate fit did not converge: " + result.message +
                             ", residual norm " + std::to_string(result.residuals.norm()));

    fit.amplitude = result.params(0);
    fit.rate = result.params(1);
    fit.offset = result.params(2);
    fit.residual_rms = std::sqrt(result.residuals.squaredNorm() / static_cast<double>(count));
    fit.message = result.message;

    // An oscillating residual means the exponential is the wrong model.
    int sign_changes = 0;
    for (Eigen::Index i = 1; i < count; ++i)
        if ((result.residuals(i) > 0.0) != (result.residuals(i - 1) > 0.0)) ++sign_changes;
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    const double range = *ymax - *ymin;
    if (sign_changes >= 6 && fit.residual_rms > 5e-3 * range) {
        DecayTrace window;
        window.time = t;
        window.population = y;
        const InversionRecoveryParams seed = guess_inversion_recovery(window);
        try {
            const InversionRecoveryFit env = fit_inversion_recovery(window, seed);
            fit.oscillatory = true;
            fit.envelope = env.params;
            fit.rate = env.params.gamma2;
            fit.amplitude = env.params.a1;
            fit.offset = 0.0;
            fit.residual_rms = env.residual_norm / std::sqrt(static_cast<double>(count));
            fit.message = "oscillatory trace; reporting the envelope decay (" + env.message + ")";
        } catch (const FitError& e) {
            throw NumericalError(std::string("oscillatory trace and the envelope fit failed: ") + e.what());
        }
    }
    return fit;
}

Certification certify(const SimConfig& cfg, double tolerance) {
    Certification cert;
    cert.trace = evolve(cfg);
    cert.rate = extract_rate(cert.trace).rate;

    // Re-run over the same horizon so all three fits see the same window.
    SimConfig fixed = cfg;
    fixed.horizon = cert.trace.time.back();
    fixed.stop_loss = 0.0;
    fixed.sample_interval = cert.trace.time.size() > 1 ? cert.trace.time[1] - cert.trace.time[0] : 0.0;

    SimConfig half = fixed;
    half.step_scale = cfg.step_scale * 0.5;
    const PopulationTrace half_trace = evolve(half);
    cert.rate_half_step = extract_rate(half_trace).rate;

    SimConfig more = fixed;
    more.fock = cert.trace.fock + 5;
    const PopulationTrace more_trace = evolve(more);
    cert.rate_more_fock = extract_rate(more_trace).rate;

    cert.step_change = std::abs(cert.rate_half_step - cert.rate) / cert.rate;
    cert.fock_change = std::abs(cert.rate_more_fock - cert.rate) / cert.rate;
    cert.max_trace_error = std::max({cert.trace.max_trace_error, half_trace.max_trace_error,
                                     more_trace.max_trace_error});
    cert.passed = cert.step_change < tolerance && cert.fock_change < tolerance && cert.trace.alarms.empty() &&
                  half_trace.alarms.empty() && more_trace.alarms.empty();
    return cert;
}

}  // namespace numsplit
