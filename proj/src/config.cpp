#include "numsplit/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "numsplit/error.hpp"
#include "numsplit/units.hpp"

namespace numsplit {

using nlohmann::json;

namespace {

const std::map<std::string, units::Kind>& quantity_fields() {
    using units::Kind;
    static const std::map<std::string, Kind> fields = {
        {"qubit_frequency", Kind::frequency},   {"resonator_frequency", Kind::frequency},
        {"dispersive_shift", Kind::frequency},  {"purcell_frequency", Kind::frequency},
        {"purcell_coupling", Kind::frequency},  {"frequency", Kind::frequency},
        {"detuning", Kind::frequency},          {"amplitude", Kind::frequency},
        {"coupling", Kind::frequency},          {"tls_frequency", Kind::frequency},
        {"tls_detuning", Kind::frequency},      {"omega_min", Kind::frequency},
        {"omega_max", Kind::frequency},         {"offset_min", Kind::frequency},
        {"offset_max", Kind::frequency},        {"drive_frequencies", Kind::frequency},
        {"drive_detunings", Kind::frequency},   {"amplitudes", Kind::frequency},
        {"kappa", Kind::rate},                  {"kappa_g", Kind::rate},
        {"kappa_e", Kind::rate},                {"gamma_m", Kind::rate},
        {"snr_rate", Kind::rate},               {"gamma2", Kind::rate},
        {"gamma1", Kind::rate},                 {"gamma_phi", Kind::rate},
        {"background", Kind::rate},             {"qubit_decay", Kind::rate},
        {"gamma_ms", Kind::rate},               {"snr_rates", Kind::rate},
        {"horizon", Kind::time},                {"sample_interval", Kind::time},
    };
    return fields;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double finite_number(const json& node, const std::string& where) {
    if (!node.is_number()) throw ConfigError(where + ": expected a number");
    const double v = node.get<double>();
    if (!std::isfinite(v)) throw ConfigError(where + ": value must be finite");
    return v;
}

json normalize_quantity(const json& node, units::Kind kind, const std::string& where) {
    if (!node.contains("unit") || !node["unit"].is_string())
        throw ConfigError(where + ": missing unit tag");
    units::Tag tag;
    try {
        tag = units::parse_tag(node["unit"].get<std::string>());
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    if (!units::accepts(kind, tag))
        throw ConfigError(where + ": unit '" + std::string(units::tag_name(tag)) + "' does not fit this field");
    const units::Tag canonical = units::canonical_tag(kind);
    auto convert = [&](const json& v, const std::string& w) {
        return units::from_internal(units::to_internal(finite_number(v, w), tag), canonical);
    };

    json out = json::object();
    out["unit"] = std::string(units::tag_name(canonical));
    bool matched = false;
    for (const auto& [key, value] : node.items()) {
        if (key == "unit") continue;
        if (key == "value") {
            out["value"] = convert(value, join(where, key));
            matched = true;
        } else if (key == "values") {
            if (!value.is_array() || value.empty()) throw ConfigError(join(where, key) + ": expected a non-empty list");
            json list = json::array();
            for (std::size_t i = 0; i < value.size(); ++i)
                list.push_back(convert(value[i], join(where, key) + "[" + std::to_string(i) + "]"));
            out["values"] = list;
            matched = true;
        } else if (key == "start" || key == "stop") {
            out[key] = convert(value, join(where, key));
            matched = true;
        } else if (key == "count") {
            if (!value.is_number_integer() || value.get<long>() < 1)
                throw ConfigError(join(where, key) + ": expected a positive integer");
            out[key] = value;
        } else {
            throw ConfigError(join(where, key) + ": unexpected member of a tagged quantity");
        }
    }
    if (!matched) throw ConfigError(where + ": tagged quantity without value");
    if (out.contains("start") != out.contains("stop") || out.contains("start") != out.contains("count"))
        throw ConfigError(where + ": a range needs start, stop and count");
    return out;
}

json normalize(const json& node, const std::string& key, const std::string& path) {
    const auto& fields = quantity_fields();
    const auto field = fields.find(key);
    if (field != fields.end()) {
        if (!node.is_object()) throw ConfigError(path + ": missing unit tag (write {\"value\": ..., \"unit\": ...})");
        return normalize_quantity(node, field->second, path);
    }
    if (node.is_object()) {
        if (node.contains("unit")) throw ConfigError(path + ": unit tag on a field that takes none");
        json out = json::object();
        for (const auto& [k, v] : node.items()) out[k] = normalize(v, k, join(path, k));
        return out;
    }
    if (node.is_array()) {
        json out = json::array();
        for (std::size_t i = 0; i < node.size(); ++i)
            out.push_back(normalize(node[i], "", path + "[" + std::to_string(i) + "]"));
        return out;
    }
    return node;
}

const json* section(const Config& cfg, const std::string& name) {
    const json& root = cfg.normalized();
    if (!root.contains(name)) return nullptr;
    if (!root[name].is_object()) throw ConfigError(name + ": expected an object");
    return &root[name];
}

std::optional<double> quantity(const json* sec, const std::string& key) {
    if (!sec || !sec->contains(key)) return std::nullopt;
    return (*sec)[key]["value"].get<double>();
}

double require_quantity(const json* sec, const std::string& sec_name, const std::string& key) {
    const auto v = quantity(sec, key);
    if (!v) throw ConfigError(join(sec_name, key) + ": required field is missing");
    return *v;
}

std::optional<double> plain(const json* sec, const std::string& sec_name, const std::string& key) {
    if (!sec || !sec->contains(key)) return std::nullopt;
    return finite_number((*sec)[key], join(sec_name, key));
}

std::vector<double> quantity_list(const json& node, const std::string& where) {
    if (node.contains("values")) return node["values"].get<std::vector<double>>();
    if (node.contains("start")) {
        const double a = node["start"].get<double>();
        const double b = node["stop"].get<double>();
        const long n = node["count"].get<long>();
        std::vector<double> out;
        for (long i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1));
        return out;
    }
    if (node.contains("value")) return {node["value"].get<double>()};
    throw ConfigError(where + ": expected values or a range");
}

std::vector<double> plain_list(const json& node, const std::string& where) {
    if (!node.is_array() || node.empty()) throw ConfigError(where + ": expected a non-empty list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i)
        out.push_back(finite_number(node[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

template <typename F>
auto with_context(const std::string& where, F&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

Config Config::from_json(const json& raw, const std::string& origin) {
    if (!raw.is_object()) throw ConfigError(origin + ": top level must be an object");
    const json* body = &raw;
    // A manifest carries the resolved config it ran with.
    if (raw.contains("config") && raw.contains("outputs")) body = &raw["config"];
    if (!body->is_object()) throw ConfigError(origin + ": config must be an object");
    Config cfg;
    cfg.data_ = normalize(*body, "", "");
    return cfg;
}

Config Config::parse(const std::string& text, const std::string& origin) {
    json raw;
    try {
        raw = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return from_json(raw, origin);
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

std::string Config::dump() const { return data_.dump(2) + "\n"; }

double drive_frequency_at(const DeviceParams& device, const std::string& label) {
    if (label == "resonator_g") return device.resonator_frequency;
    if (label == "resonator_e") return device.resonator_frequency_e();
    if (label == "midpoint") return device.resonator_frequency + device.dispersive_shift / 2.0;
    throw ConfigError("unknown drive label '" + label + "' (expected resonator_g, resonator_e or midpoint)");
}

DeviceParams device_from(const Config& cfg) {
    const json* sec = section(cfg, "device");
    if (!sec) throw ConfigError("device: section is missing");
    const double wq = require_quantity(sec, "device", "qubit_frequency");
    const double wr = require_quantity(sec, "device", "resonator_frequency");
    const double chi = require_quantity(sec, "device", "dispersive_shift");
    const double eta = plain(sec, "device", "quantum_efficiency").value_or(1.0);

    DeviceParams device;
    const bool split = sec->contains("kappa_g") || sec->contains("kappa_e");
    if (split) {
        if (sec->contains("kappa") || sec->contains("purcell_asymmetry"))
            throw ConfigError("device: give either kappa (+ purcell_asymmetry) or kappa_g + kappa_e");
        device = with_context("device", [&] {
            return DeviceParams::from_linewidths(wq, wr, chi, require_quantity(sec, "device", "kappa_g"),
                                                 require_quantity(sec, "device", "kappa_e"), eta);
        });
    } else {
        device.qubit_frequency = wq;
        device.resonator_frequency = wr;
        device.dispersive_shift = chi;
        device.kappa = require_quantity(sec, "device", "kappa");
        device.purcell_asymmetry = plain(sec, "device", "purcell_asymmetry").value_or(0.0);
        device.quantum_efficiency = eta;
    }
    device.purcell_frequency = quantity(sec, "purcell_frequency");
    device.purcell_coupling = quantity(sec, "purcell_coupling");
    with_context("device", [&] {
        device.validate();
        return 0;
    });
    return device;
}

DriveSpec drive_from(const Config& cfg, const DeviceParams& device, std::optional<double> frequency) {
    const json* sec = section(cfg, "drive");
    double wd = device.resonator_frequency;
    if (frequency) {
        wd = *frequency;
    } else if (sec) {
        const int given = sec->contains("frequency") + sec->contains("detuning") + sec->contains("at");
        if (given > 1) throw ConfigError("drive: give only one of frequency, detuning, at");
        if (sec->contains("frequency")) wd = *quantity(sec, "frequency");
        if (sec->contains("detuning")) wd = device.resonator_frequency + *quantity(sec, "detuning");
        if (sec->contains("at")) {
            if (!(*sec)["at"].is_string()) throw ConfigError("drive.at: expected a label");
            wd = with_context("drive.at", [&] { return drive_frequency_at(device, (*sec)["at"].get<std::string>()); });
        }
    }

    double amplitude = 0.0;
    if (sec) {
        const int given = sec->contains("amplitude") + sec->contains("gamma_m") + sec->contains("snr_rate") +
                          sec->contains("delta_alpha");
        if (given > 1) throw ConfigError("drive: give only one of amplitude, gamma_m, snr_rate, delta_alpha");
        amplitude = with_context("drive", [&] {
            if (sec->contains("amplitude")) return leveled_amplitude(device, wd, Leveling::fixed_amplitude, *quantity(sec, "amplitude"));
            if (sec->contains("gamma_m")) return leveled_amplitude(device, wd, Leveling::fixed_gamma_m, *quantity(sec, "gamma_m"));
            if (sec->contains("snr_rate")) return leveled_amplitude(device, wd, Leveling::fixed_snr_rate, *quantity(sec, "snr_rate"));
            if (sec->contains("delta_alpha"))
                return leveled_amplitude(device, wd, Leveling::fixed_separation, *plain(sec, "drive", "delta_alpha"));
            return 0.0;
        });
    }
    DriveSpec drive = DriveSpec::from_device(device, wd, amplitude);
    if (sec) {
        if (auto v = plain(sec, "drive", "x")) drive.x = *v;
        if (auto v = plain(sec, "drive", "y")) drive.y = *v;
        if (auto v = plain(sec, "drive", "u")) drive.u = *v;
        if (auto v = plain(sec, "drive", "v")) drive.v = *v;
    }
    with_context("drive", [&] {
        drive.validate();
        return 0;
    });
    return drive;
}

BathSpectrum bath_from(const Config& cfg, const DeviceParams& device) {
    BathSpectrum bath;
    const json* sec = section(cfg, "bath");
    if (!sec) return bath;
    bath.background = quantity(sec, "background").value_or(0.0);
    if (sec->contains("tls")) {
        const json& list = (*sec)["tls"];
        if (!list.is_array()) throw ConfigError("bath.tls: expected a list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "bath.tls[" + std::to_string(i) + "]";
            const json* t = &list[i];
            if (!t->is_object()) throw ConfigError(where + ": expected an object");
            TLSSpec tls;
            if (t->contains("frequency") == t->contains("detuning"))
                throw ConfigError(where + ": give exactly one of frequency, detuning");
            tls.frequency = t->contains("frequency") ? *quantity(t, "frequency")
                                                     : device.qubit_frequency + *quantity(t, "detuning");
            tls.coupling = require_quantity(t, where, "coupling");
            tls.gamma2 = require_quantity(t, where, "gamma2");
            tls.gamma1 = quantity(t, "gamma1");
            tls.gamma_phi = quantity(t, "gamma_phi");
            with_context(where, [&] {
                tls.validate();
                return 0;
            });
            bath.components.push_back(tls);
        }
    }
    with_context("bath", [&] {
        bath.validate();
        return 0;
    });
    return bath;
}

SimConfig sim_from(const Config& cfg, std::optional<double> frequency) {
    SimConfig sim;
    sim.device = device_from(cfg);
    sim.drive = drive_from(cfg, sim.device, frequency);
    const BathSpectrum bath = bath_from(cfg, sim.device);
    sim.tls = bath.components;
    // The flat floor of the bath is a Markovian qubit decay in the simulator.
    sim.qubit_decay = bath.background;
    const json* sec = section(cfg, "oracle");
    if (sec) {
        if (auto v = plain(sec, "oracle", "fock")) sim.fock = static_cast<int>(*v);
        if (auto v = quantity(sec, "horizon")) sim.horizon = *v;
        if (auto v = plain(sec, "oracle", "stop_loss")) sim.stop_loss = *v;
        if (auto v = quantity(sec, "sample_interval")) sim.sample_interval = *v;
        if (auto v = quantity(sec, "qubit_decay")) sim.qubit_decay = *v;
        if (sec->contains("initial")) {
            const std::string s = (*sec)["initial"].get<std::string>();
            if (s == "excited_pointer") sim.initial = InitialState::excited_pointer;
            else if (s == "excited_vacuum") sim.initial = InitialState::excited_vacuum;
            else if (s == "ground_vacuum") sim.initial = InitialState::ground_vacuum;
            else throw ConfigError("oracle.initial: unknown initial state '" + s + "'");
        }
    }
    with_context("oracle", [&] {
        sim.validate();
        return 0;
    });
    return sim;
}

SweepPlan sweep_from(const Config& cfg, const DeviceParams& device) {
    const json* sec = section(cfg, "sweep");
    if (!sec) throw ConfigError("sweep: section is missing");
    SweepPlan plan;
    const int grids = sec->contains("drive_frequencies") + sec->contains("drive_detunings") + sec->contains("at");
    if (grids != 1) throw ConfigError("sweep: give exactly one of drive_frequencies, drive_detunings, at");
    if (sec->contains("drive_frequencies"))
        plan.drive_frequencies = quantity_list((*sec)["drive_frequencies"], "sweep.drive_frequencies");
    if (sec->contains("drive_detunings"))
        for (double d : quantity_list((*sec)["drive_detunings"], "sweep.drive_detunings"))
            plan.drive_frequencies.push_back(device.resonator_frequency + d);
    if (sec->contains("at")) {
        const json& labels = (*sec)["at"];
        if (!labels.is_array() || labels.empty()) throw ConfigError("sweep.at: expected a list of labels");
        for (const auto& l : labels)
            plan.drive_frequencies.push_back(
                with_context("sweep.at", [&] { return drive_frequency_at(device, l.get<std::string>()); }));
    }

    const std::string leveling = sec->value("leveling", std::string("gamma_m"));
    plan.leveling = with_context("sweep.leveling", [&] { return parse_leveling(leveling); });
    const char* key = nullptr;
    switch (plan.leveling) {
        case Leveling::fixed_snr_rate: key = "snr_rates"; break;
        case Leveling::fixed_gamma_m: key = "gamma_ms"; break;
        case Leveling::fixed_amplitude: key = "amplitudes"; break;
        case Leveling::fixed_separation: key = "delta_alphas"; break;
    }
    if (!sec->contains(key)) throw ConfigError(join("sweep", key) + ": required by leveling '" + leveling + "'");
    plan.levels = plan.leveling == Leveling::fixed_separation
                      ? plain_list((*sec)[key], join("sweep", key))
                      : quantity_list((*sec)[key], join("sweep", key));

    plan.method = sec->value("method", std::string("analytic"));
    if (plan.method != "analytic" && plan.method != "oracle" && plan.method != "both")
        throw ConfigError("sweep.method: expected analytic, oracle or both");
    if (sec->contains("rate_method"))
        plan.rate_method = with_context("sweep.rate_method",
                                        [&] { return parse_method((*sec)["rate_method"].get<std::string>()); });
    return plan;
}

SpectrumPlan spectrum_from(const Config& cfg, const DeviceParams& device) {
    SpectrumPlan plan;
    plan.drives = {"resonator_g", "midpoint", "resonator_e"};
    const double span = 4.0 * std::abs(device.dispersive_shift) + 4.0 * device.kappa;
    plan.omega_min = device.qubit_frequency - span;
    plan.omega_max = device.qubit_frequency + span;
    const json* sec = section(cfg, "spectrum");
    if (!sec) return plan;
    if (sec->contains("drives")) {
        plan.drives.clear();
        for (const auto& l : (*sec)["drives"]) plan.drives.push_back(l.get<std::string>());
    }
    if (auto v = quantity(sec, "offset_min")) plan.omega_min = device.qubit_frequency + *v;
    if (auto v = quantity(sec, "offset_max")) plan.omega_max = device.qubit_frequency + *v;
    if (auto v = quantity(sec, "omega_min")) plan.omega_min = *v;
    if (auto v = quantity(sec, "omega_max")) plan.omega_max = *v;
    if (auto v = plain(sec, "spectrum", "points")) plan.points = static_cast<int>(*v);
    if (sec->contains("fft")) plan.fft = (*sec)["fft"].get<bool>();
    if (!(plan.omega_max > plan.omega_min)) throw ConfigError("spectrum: omega_max must exceed omega_min");
    if (plan.points < 2) throw ConfigError("spectrum.points: need at least 2");
    return plan;
}

RunSettings run_from(const Config& cfg) {
    RunSettings run;
    const json* sec = section(cfg, "run");
    if (!sec) return run;
    if (auto v = plain(sec, "run", "seed")) {
        if (*v < 0) throw ConfigError("run.seed: must be non-negative");
        run.seed = static_cast<std::uint64_t>(*v);
    }
    if (sec->contains("method")) run.method = (*sec)["method"].get<std::string>();
    if (auto v = plain(sec, "run", "tol")) run.tol = *v;
    if (auto v = plain(sec, "run", "jobs")) run.jobs = static_cast<int>(*v);
    if (auto v = plain(sec, "run", "truncation")) run.truncation = *v;
    return run;
}

}  // namespace numsplit
