#include "ssre/common.hpp"

#include <cmath>

namespace ssre {

std::string_view to_string(Boundary b) { return b == Boundary::ring ? "ring" : "segment"; }

std::string_view to_string(Variant v) {
    return v == Variant::standard ? "standard" : "conservative";
}

Boundary parse_boundary(std::string_view s) {
    if (s == "ring") return Boundary::ring;
    if (s == "segment") return Boundary::segment;
    throw PreconditionError("unknown boundary mode '" + std::string(s) + "' (expected ring|segment)");
}

Variant parse_variant(std::string_view s) {
    if (s == "standard") return Variant::standard;
    if (s == "conservative") return Variant::conservative;
    throw PreconditionError("unknown migration variant '" + std::string(s) +
                            "' (expected standard|conservative)");
}

void Migration::validate() const {
    if (!(m > 0.0) || !std::isfinite(m)) throw PreconditionError("m must be positive");
    if (variant == Variant::conservative && m > 1.0)
        throw PreconditionError("conservative migration requires m <= 1");
}

}  // namespace ssre
