// units.hpp - unit tags used at ingestion and export
//
// Internally every frequency is angular (rad/us), every rate is 1/us and
// every time is in us. Conversion happens once, when a tagged value is read.

#pragma once

#include <numbers>
#include <string>
#include <string_view>

namespace numsplit::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

enum class Tag {
    mhz_over_2pi,  // ordinary frequency f = omega / 2pi in MHz
    mhz_rate,      // plain rate in 1/us, no 2pi
    rad_per_us,    // angular frequency, already internal
    us,            // time
};

// What kind of physical quantity a config field holds; restricts the tags
// that are accepted for it.
enum class Kind {
    frequency,  // mhz_over_2pi | rad_per_us
    rate,       // mhz_over_2pi | mhz_rate | rad_per_us
    time,       // us
};

Tag parse_tag(std::string_view text);
std::string_view tag_name(Tag tag);
bool accepts(Kind kind, Tag tag);

// Convert a tagged value to the internal representation.
double to_internal(double value, Tag tag);
// Inverse of to_internal.
double from_internal(double value, Tag tag);

// Tag used when exporting normalized configs.
Tag canonical_tag(Kind kind);

inline double mhz_to_angular(double f_mhz) { return two_pi * f_mhz; }
inline double angular_to_mhz(double omega) { return omega / two_pi; }

}  // namespace numsplit::units
