#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssre {

// Errors raised by the model layer. Each carries enough context in what()
// to be surfaced directly by the CLI.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A deme size (or a family value) outside [1/K, K].
class EllipticityError : public ModelError {
public:
    using ModelError::ModelError;
};

// A site, window or support that falls outside the simulated window.
class OutOfWindowError : public ModelError {
public:
    using ModelError::ModelError;
};

// A violated operation precondition (bad parameter, non-monotone map, ...).
class PreconditionError : public ModelError {
public:
    using ModelError::ModelError;
};

// A numerical self-check that failed (detailed balance, singular solve).
class ConsistencyError : public ModelError {
public:
    using ModelError::ModelError;
};

enum class Boundary { ring, segment };
enum class Variant { standard, conservative };

std::string_view to_string(Boundary b);
std::string_view to_string(Variant v);
Boundary parse_boundary(std::string_view s);
Variant parse_variant(std::string_view s);

// Migration mechanism. In the standard variant a lineage at x jumps to a
// neighbour y at rate m N(y) / N3(x) with N3 = N(x-1) + N(x) + N(x+1).
// The conservative variant uses N3 = (m/2) N(x-1) + (1-m) N(x) + (m/2) N(x+1)
// and replaces the rate prefactor m by m/2.
struct Migration {
    double m = 1.0;
    Variant variant = Variant::standard;

    double rate_prefactor() const { return variant == Variant::standard ? m : 0.5 * m; }
    double weight_side() const { return variant == Variant::standard ? 1.0 : 0.5 * m; }
    double weight_centre() const { return variant == Variant::standard ? 1.0 : 1.0 - m; }

    // Value of N3 for the three sizes around a site.
    double n3(double left, double centre, double right) const {
        return weight_side() * (left + right) + weight_centre() * centre;
    }

    void validate() const;
};

}  // namespace ssre
