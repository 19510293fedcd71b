#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssem/model.hpp"
#include "ssem/population.hpp"

namespace ssem::harness {

/// A configuration problem tied to the dotted key that caused it.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message);

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Flat `section.key = value` text. Blank lines and `#` comments are ignored;
/// repeating a key is an error.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text, const std::string& origin);

/// Reads a key-value file, or the "config" object embedded in a JSON report
/// when the path ends in .json.
KeyValues load_key_values(const std::string& path);

/// Applies one `key=value` override.
void apply_override(KeyValues& values, const std::string& assignment);

struct ModelSection {
    std::string kind;    // gmm | sym2 | expfam
    std::string family;  // expfam only
    std::vector<double> pi;
    std::vector<double> theta_star;  // one entry for sym2

    friend bool operator==(const ModelSection&, const ModelSection&) = default;
};

struct DataSection {
    double gamma = 0.0;
    std::size_t total_samples = 10000;
    std::uint64_t seed = 0;
    std::string allocation = "proportional";

    friend bool operator==(const DataSection&, const DataSection&) = default;
};

struct EmSection {
    std::optional<std::vector<double>> theta0;
    std::size_t max_iters = 500;
    double tol = 1e-10;

    friend bool operator==(const EmSection&, const EmSection&) = default;
};

struct QuadratureSection {
    double abs_tol = 1e-10;
    double range_sigma = 12.0;
    std::size_t max_subdivisions = 65536;

    friend bool operator==(const QuadratureSection&, const QuadratureSection&) = default;
};

struct VerifySection {
    std::vector<double> gammas{0.1, 0.25, 0.5, 0.75, 0.9};
    std::optional<std::vector<std::vector<double>>> probes;
    std::vector<double> epsilons{0.2, 0.1, 0.05, 0.025};
    std::vector<double> item3_offsets{1.01, 2.0, 4.0};
    std::vector<double> t_grid{1.0, 1.5, 2.0, 3.0, 4.0, 5.0};

    friend bool operator==(const VerifySection&, const VerifySection&) = default;
};

struct OutputSection {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};

    friend bool operator==(const OutputSection&, const OutputSection&) = default;
};

struct RunConfig {
    ModelSection model;
    DataSection data;
    EmSection em;
    QuadratureSection quadrature;
    VerifySection verify;
    OutputSection output;

    bool wants(const std::string& format) const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Typed view of the key-value map with defaults filled in. Unknown keys,
/// malformed values and cross-field inconsistencies raise ConfigError.
RunConfig resolve(const KeyValues& values);

/// The resolved configuration as canonical key-value strings (doubles in
/// shortest round-trip form), so that resolve(to_key_values(c)) == c.
KeyValues to_key_values(const RunConfig& cfg);

ModelKind model_kind(const RunConfig& cfg);
MixtureParams truth(const RunConfig& cfg);
/// Throws ConfigError on em.theta0 when it is missing.
MixtureParams initial_params(const RunConfig& cfg);
/// A probe vector with the truth's weights; sym2 probes are scalars.
MixtureParams probe_params(const RunConfig& cfg, const std::vector<double>& probe);
QuadratureScheme quadrature_scheme(const RunConfig& cfg);

/// Every recognized key in a fixed order, for documentation and error text.
const std::vector<std::string>& known_keys();

}  // namespace ssem::harness
