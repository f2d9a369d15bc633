#include "numsplit/units.hpp"

#include "numsplit/error.hpp"

namespace numsplit::units {

Tag parse_tag(std::string_view text) {
    if (text == "MHz_over_2pi") return Tag::mhz_over_2pi;
    if (text == "MHz_rate") return Tag::mhz_rate;
    if (text == "rad_per_us") return Tag::rad_per_us;
    if (text == "us") return Tag::us;
    throw ConfigError("unknown unit tag '" + std::string(text) +
                      "' (expected MHz_over_2pi, MHz_rate, rad_per_us or us)");
}

std::string_view tag_name(Tag tag) {
    switch (tag) {
        case Tag::mhz_over_2pi: return "MHz_over_2pi";
        case Tag::mhz_rate: return "MHz_rate";
        case Tag::rad_per_us: return "rad_per_us";
        case Tag::us: return "us";
    }
    return "?";
}

bool accepts(Kind kind, Tag tag) {
    switch (kind) {
        case Kind::frequency: return tag == Tag::mhz_over_2pi || tag == Tag::rad_per_us;
        case Kind::rate: return tag != Tag::us;
        case Kind::time: return tag == Tag::us;
    }
    return false;
}

double to_internal(double value, Tag tag) {
    return tag == Tag::mhz_over_2pi ? two_pi * value : value;
}

double from_internal(double value, Tag tag) {
    return tag == Tag::mhz_over_2pi ? value / two_pi : value;
}

Tag canonical_tag(Kind kind) {
    switch (kind) {
        case Kind::frequency: return Tag::rad_per_us;
        case Kind::rate: return Tag::mhz_rate;
        case Kind::time: return Tag::us;
    }
    return Tag::us;
}

}  // namespace numsplit::units
