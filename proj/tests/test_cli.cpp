#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "numsplit/cli.hpp"
#include "numsplit/config.hpp"
#include "numsplit/csv.hpp"
#include "numsplit/error.hpp"
#include "numsplit/manifest.hpp"

using namespace numsplit;
using fixtures::mhz;
using fixtures::rel;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) {
        dir = fs::temp_directory_path() / ("numsplit_test_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    fs::path put(const std::string& file, const std::string& text) const {
        std::ofstream(dir / file) << text;
        return dir / file;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

const char* lab_device_json = R"(
  "device": {
    "qubit_frequency": {"value": 4746.3, "unit": "MHz_over_2pi"},
    "resonator_frequency": {"value": 6779.6, "unit": "MHz_over_2pi"},
    "dispersive_shift": {"value": -8.8, "unit": "MHz_over_2pi"},
    "kappa_g": {"value": 9.0, "unit": "MHz_over_2pi"},
    "kappa_e": {"value": 6.6, "unit": "MHz_over_2pi"},
    "quantum_efficiency": 0.1294
  })";

std::string lab_config(const std::string& rest) { return std::string("{") + lab_device_json + "," + rest + "}"; }

const char* weak_config = R"({
  "device": {
    "qubit_frequency": {"value": 5000.0, "unit": "MHz_over_2pi"},
    "resonator_frequency": {"value": 7000.0, "unit": "MHz_over_2pi"},
    "dispersive_shift": {"value": -5.0, "unit": "MHz_over_2pi"},
    "kappa": {"value": 5.0, "unit": "MHz_over_2pi"}
  },
  "drive": {"at": "resonator_e", "delta_alpha": 1.0},
  "bath": {"tls": [
    {"detuning": {"value": -12.0, "unit": "MHz_over_2pi"}, "coupling": {"value": 0.5, "unit": "MHz_over_2pi"},
     "gamma2": {"value": 0.5, "unit": "MHz_over_2pi"}},
    {"detuning": {"value": -20.0, "unit": "MHz_over_2pi"}, "coupling": {"value": 0.5, "unit": "MHz_over_2pi"},
     "gamma2": {"value": 0.5, "unit": "MHz_over_2pi"}}]},
  "sweep": {"drive_detunings": {"start": -6.0, "stop": 1.0, "count": 15, "unit": "MHz_over_2pi"},
            "leveling": "gamma_m", "gamma_ms": {"values": [5.0, 15.0], "unit": "MHz_rate"}}
})";

std::map<std::string, double> read_quantities(const fs::path& p) {
    const csv::Parsed t = csv::read(p);
    std::map<std::string, double> out;
    for (const auto& r : t.rows) out[r[0]] = std::stod(r[2]);
    return out;
}

}  // namespace

TEST_CASE("config: units are explicit") {
    SUBCASE("MHz over 2pi becomes angular") {
        const Config c = Config::parse(weak_config);
        CHECK(rel(device_from(c).kappa, mhz(5.0)) < 1e-15);
    }
    SUBCASE("a bare number in a dimensional field names the field") {
        try {
            Config::parse(R"({"device": {"kappa": 5.0}})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("device.kappa") != std::string::npos);
        }
    }
    SUBCASE("unknown or mismatched tags") {
        CHECK_THROWS_AS(Config::parse(R"({"device": {"kappa": {"value": 5, "unit": "GHz"}}})"), ConfigError);
        CHECK_THROWS_AS(Config::parse(R"({"oracle": {"horizon": {"value": 5, "unit": "MHz_rate"}}})"), ConfigError);
        CHECK_THROWS_AS(Config::parse(R"({"device": {"qubit_frequency": {"value": 5, "unit": "MHz_rate"}}})"),
                        ConfigError);
        CHECK_THROWS_AS(Config::parse(R"({"device": {"quantum_efficiency": {"value": 0.5, "unit": "us"}}})"),
                        ConfigError);
    }
    SUBCASE("a rate tagged MHz_over_2pi picks up the 2pi") {
        const Config c = Config::parse(R"({"bath": {"background": {"value": 1.0, "unit": "MHz_over_2pi"}}})");
        CHECK(rel(c.normalized()["bath"]["background"]["value"].get<double>(), mhz(1.0)) < 1e-15);
    }
    SUBCASE("normalized export reloads to the identical tree") {
        const Config c = Config::parse(weak_config);
        const Config again = Config::parse(c.dump());
        CHECK(again.normalized() == c.normalized());
        CHECK(again.dump() == c.dump());
    }
}

TEST_CASE("config: sections") {
    const Config c = Config::parse(weak_config);
    const DeviceParams dev = device_from(c);
    CHECK(drive_frequency_at(dev, "resonator_e") == dev.resonator_frequency_e());
    CHECK(drive_frequency_at(dev, "midpoint") == dev.resonator_frequency + dev.dispersive_shift / 2.0);
    CHECK_THROWS_AS(drive_frequency_at(dev, "somewhere"), ConfigError);
    const DriveSpec drive = drive_from(c, dev);
    CHECK(std::abs(std::abs(solve_pointer_states(dev, drive).delta_alpha) - 1.0) < 1e-14);
    const BathSpectrum bath = bath_from(c, dev);
    REQUIRE(bath.components.size() == 2);
    CHECK(rel(bath.components[0].frequency, dev.qubit_frequency + mhz(-12.0)) < 1e-15);
    const SweepPlan plan = sweep_from(c, dev);
    CHECK(plan.drive_frequencies.size() == 15);
    CHECK(plan.levels == std::vector<double>{5.0, 15.0});

    const Config lab = Config::parse(lab_config(R"("drive": {"at": "resonator_g", "gamma_m": {"value": 1, "unit": "MHz_rate"}})"));
    const DeviceParams ld = device_from(lab);
    CHECK(rel(ld.kappa_e(), mhz(6.6)) < 1e-14);
    const SimConfig sim = sim_from(lab);
    CHECK(sim.qubit_decay == 0.0);
}

TEST_CASE("csv: round trip and bad input") {
    Scratch s("csv");
    DecayTrace tr{{0.0, 0.1, 0.2}, {1.0, 0.123456789012345678, 1.0 / 3.0}};
    csv::write_trace(tr, s.dir / "t.csv");
    const DecayTrace back = csv::read_trace(s.dir / "t.csv");
    CHECK(back.time == tr.time);
    CHECK(back.population == tr.population);
    CHECK_THROWS_AS(csv::read_trace(s.put("empty.csv", "")), ConfigError);
    CHECK_THROWS_AS(csv::read_trace(s.put("bad.csv", "t_us,P_e\n0,abc\n")), ConfigError);
    CHECK_THROWS_AS(csv::read_trace(s.put("cols.csv", "time,pop\n0,1\n")), ConfigError);
    CHECK_THROWS_AS(csv::read_trace(s.dir / "missing.csv"), ConfigError);
}

TEST_CASE("cli: pointer on the measured device") {
    Scratch s("pointer");
    SUBCASE("zero drive gives zero fields") {
        const auto cfg = s.put("c.json", lab_config(R"("drive": {"at": "resonator_g", "amplitude": {"value": 0, "unit": "MHz_over_2pi"}})"));
        REQUIRE(run({"pointer", "--config", cfg.string(), "--out-dir", s.dir.string()}) == exit_ok);
        const auto q = read_quantities(s.dir / "pointer.csv");
        CHECK(q.at("alpha_g") == 0.0);
        CHECK(q.at("alpha_e") == 0.0);
        CHECK(q.at("Gamma_m") == 0.0);
    }
    SUBCASE("drive leveled to Gamma_m / 2pi = 0.5 MHz at w_r(g)") {
        const auto cfg = s.put("c.json", lab_config(R"("drive": {"at": "resonator_g", "gamma_m": {"value": 0.5, "unit": "MHz_over_2pi"}})"));
        REQUIRE(run({"pointer", "--config", cfg.string(), "--out-dir", s.dir.string()}) == exit_ok);
        const auto q = read_quantities(s.dir / "pointer.csv");
        CHECK(rel(q.at("Gamma_m"), mhz(0.5)) < 1e-12);
        const DeviceParams dev = fixtures::lab_device();
        const double d = amplitude_for_gamma_m(dev, dev.resonator_frequency, mhz(0.5));
        CHECK(rel(q.at("d_r"), d) < 1e-14);
        CHECK(fs::exists(s.dir / "pointer_manifest.json"));
    }
    SUBCASE("malformed unit tag exits 2") {
        const auto cfg = s.put("c.json", lab_config(R"("drive": {"at": "resonator_g", "gamma_m": {"value": 0.5, "unit": "Mhz"}})"));
        CHECK(run({"pointer", "--config", cfg.string(), "--out-dir", s.dir.string()}) == exit_config);
    }
    SUBCASE("missing config file exits 2") {
        CHECK(run({"pointer", "--config", (s.dir / "nope.json").string(), "--out-dir", s.dir.string()}) == exit_config);
    }
}

TEST_CASE("cli: spectrum") {
    Scratch s("spectrum");
    const auto cfg = s.put("c.json", weak_config);
    REQUIRE(run({"spectrum", "--config", cfg.string(), "--out-dir", s.dir.string()}) == exit_ok);
    for (const char* label : {"resonator_g", "midpoint", "resonator_e"})
        CHECK(fs::exists(s.dir / (std::string("spectrum_") + label + ".csv")));
    // Drive at w_r(g): a single peak
    const csv::Parsed t = csv::read(s.dir / "spectrum_resonator_g.csv");
    std::vector<double> y;
    for (const auto& r : t.rows) y.push_back(std::stod(r[1]));
    int maxima = 0;
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i] > y[i - 1] && y[i] > y[i + 1]) ++maxima;
    CHECK(maxima == 1);
}

TEST_CASE("cli: rate, sweep determinism and manifests") {
    Scratch s("sweep");
    const auto cfg = s.put("c.json", weak_config);
    std::string text;
    REQUIRE(run({"rate", "--config", cfg.string(), "--out-dir", s.dir.string()}, &text) == exit_ok);
    CHECK(text.find("0.36129363") != std::string::npos);

    const fs::path a = s.dir / "a", b = s.dir / "b";
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out-dir", a.string()}) == exit_ok);
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out-dir", b.string(), "--jobs", "3"}) == exit_ok);
    CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
    const json ma = json::parse(slurp(a / "sweep_manifest.json"));
    const json mb = json::parse(slurp(b / "sweep_manifest.json"));
    CHECK(ma["outputs"] == mb["outputs"]);
    CHECK(ma["outputs"][0]["sha256"] == sha256_file(a / "sweep.csv"));
    CHECK(csv::read(a / "sweep.csv").rows.size() == 30);

    SUBCASE("a manifest replays its run") {
        const fs::path c = s.dir / "c";
        REQUIRE(run({"sweep", "--config", (a / "sweep_manifest.json").string(), "--out-dir", c.string()}) == exit_ok);
        CHECK(slurp(a / "sweep.csv") == slurp(c / "sweep.csv"));
    }
    SUBCASE("every point failing exits 4") {
        std::string bad = weak_config;
        bad.replace(bad.find("[5.0, 15.0]"), 11, "[-1.0, -2.0]");
        const auto bcfg = s.put("bad.json", bad);
        CHECK(run({"sweep", "--config", bcfg.string(), "--out-dir", (s.dir / "d").string()}) == exit_sweep_failed);
    }
    SUBCASE("quadrature through --method") {
        const fs::path q = s.dir / "q";
        REQUIRE(run({"sweep", "--config", cfg.string(), "--out-dir", q.string(), "--method", "quadrature"}) == exit_ok);
        const csv::Parsed pa = csv::read(a / "sweep.csv"), pq = csv::read(q / "sweep.csv");
        const int col = pa.column("Gamma_eg_per_us");
        for (std::size_t i = 0; i < pa.rows.size(); ++i)
            CHECK(rel(std::stod(pq.rows[i][col]), std::stod(pa.rows[i][col])) < 1e-6);
    }
}

TEST_CASE("cli: fit-tls and synth") {
    Scratch s("fit");
    const auto cfg = s.put("c.json", lab_config(R"(
      "synth": {"a1": 0.45, "a2": 0.5, "coupling": {"value": 0.20, "unit": "MHz_over_2pi"},
                "gamma2": {"value": 0.85, "unit": "MHz_rate"}, "gamma1": {"value": 0.15, "unit": "MHz_rate"},
                "horizon": {"value": 20, "unit": "us"}, "samples": 401},
      "fit": {"tls_detuning": {"value": -16.3, "unit": "MHz_over_2pi"}, "background": {"value": 0.15, "unit": "MHz_rate"}})"));
    REQUIRE(run({"synth", "--config", cfg.string(), "--out-dir", s.dir.string()}) == exit_ok);
    REQUIRE(run({"fit-tls", "--config", cfg.string(), "--trace", (s.dir / "trace.csv").string(), "--out-dir",
                 s.dir.string()}) == exit_ok);
    const csv::Parsed rep = csv::read(s.dir / "fit_report.csv");
    std::map<std::string, double> v;
    for (const auto& r : rep.rows) v[r[0]] = std::stod(r[1]);
    CHECK(rel(v.at("g_tls_over_2pi_MHz"), 0.20) < 1e-6);
    CHECK(rel(v.at("gamma2_tls_per_us"), 0.85) < 1e-6);
    const json bath = json::parse(slurp(s.dir / "bath.json"));
    const Config bc = Config::from_json(json{{"device", Config::parse(lab_config("\"x\": 0")).normalized()["device"]},
                                             {"bath", bath}});
    const BathSpectrum b = bath_from(bc, device_from(bc));
    REQUIRE(b.components.size() == 1);
    CHECK(rel(b.components[0].frequency, fixtures::lab_device().qubit_frequency + mhz(-16.3)) < 1e-14);

    SUBCASE("empty trace exits 2") {
        const auto empty = s.put("empty.csv", "");
        CHECK(run({"fit-tls", "--config", cfg.string(), "--trace", empty.string(), "--out-dir", s.dir.string()}) ==
              exit_config);
    }
}

TEST_CASE("cli: level") {
    Scratch s("level");
    const auto cfg = s.put("c.json", lab_config(R"("level": {"snr_rate": {"value": 1.0, "unit": "MHz_rate"},
                                                          "at": ["resonator_g", "resonator_e"]})"));
    REQUIRE(run({"level", "--config", cfg.string(), "--out-dir", s.dir.string()}) == exit_ok);
    const csv::Parsed t = csv::read(s.dir / "level.csv");
    REQUIRE(t.rows.size() == 2);
    CHECK(rel(std::stod(t.rows[0][t.column("Gamma_m_target_per_us")]), 1.9319938176197836) < 1e-14);
    CHECK(t.rows[0][t.column("note")].empty());
    CHECK(t.rows[1][t.column("note")].find("vanishes") != std::string::npos);
    CHECK(std::abs(std::stod(t.rows[1][t.column("drive_term_over_2pi_MHz")])) < 1e-12);
    CHECK(run({"level", "--config", cfg.string(), "--out-dir", s.dir.string(), "--snr-rate", "0"}) == exit_config);
}
