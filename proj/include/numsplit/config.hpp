// config.hpp - JSON run configuration with explicit per-field unit tags
//
// Every dimensional quantity is an object {"value": x, "unit": tag}; lists use
// {"values": [...], "unit": tag} or {"start", "stop", "count", "unit"}. Bare
// numbers in a dimensional field are rejected. On load every quantity is
// converted to internal units and re-tagged canonically (rad_per_us for
// frequencies, MHz_rate for rates, us for times), so exporting and
// re-loading the normalized form is the identity.
//
// A run manifest is accepted wherever a config is: its "config" member is used.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "numsplit/bath.hpp"
#include "numsplit/oracle.hpp"
#include "numsplit/pointer.hpp"
#include "numsplit/rate.hpp"

namespace numsplit {

class Config {
public:
    Config() = default;

    static Config parse(const std::string& text, const std::string& origin = "<config>");
    static Config load(const std::filesystem::path& path);
    static Config from_json(const nlohmann::json& raw, const std::string& origin = "<config>");

    const nlohmann::json& normalized() const { return data_; }
    nlohmann::json& normalized() { return data_; }
    std::string dump() const;  // normalized form, sorted keys, two-space indent

    bool has(const std::string& section) const { return data_.contains(section); }

private:
    nlohmann::json data_ = nlohmann::json::object();
};

// Drive-frequency labels: resonator_g, resonator_e, midpoint.
double drive_frequency_at(const DeviceParams& device, const std::string& label);

DeviceParams device_from(const Config& cfg);
// Drive section; the amplitude may be given directly or through a leveling
// target (gamma_m, snr_rate or delta_alpha).
DriveSpec drive_from(const Config& cfg, const DeviceParams& device,
                     std::optional<double> frequency = std::nullopt);
BathSpectrum bath_from(const Config& cfg, const DeviceParams& device);
SimConfig sim_from(const Config& cfg, std::optional<double> frequency = std::nullopt);

struct SweepPlan {
    std::vector<double> drive_frequencies;
    Leveling leveling{Leveling::fixed_gamma_m};
    std::vector<double> levels;
    std::string method{"analytic"};  // analytic | oracle | both
    RateMethod rate_method{RateMethod::closed_form};
};
SweepPlan sweep_from(const Config& cfg, const DeviceParams& device);

struct SpectrumPlan {
    std::vector<std::string> drives;  // labels or "config"
    double omega_min{0.0};
    double omega_max{0.0};
    int points{801};
    bool fft{true};
};
SpectrumPlan spectrum_from(const Config& cfg, const DeviceParams& device);

struct RunSettings {
    std::uint64_t seed{0};
    std::optional<std::string> method;
    double tol{1e-8};
    int jobs{1};
    double truncation{1e-10};
};
RunSettings run_from(const Config& cfg);

}  // namespace numsplit
