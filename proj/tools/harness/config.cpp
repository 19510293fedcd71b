#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <concepts>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "ssem/error.hpp"
#include "ssem/sampling.hpp"

namespace ssem::harness {

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

namespace {

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r");
    return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        parts.push_back(trim(text.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", fmt::format("cannot open config file '{}'", path));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string format_double(double v) { return fmt::format("{}", v); }

std::string join_doubles(const std::vector<double>& values) {
    std::vector<std::string> parts;
    for (double v : values) parts.push_back(format_double(v));
    return fmt::format("{}", fmt::join(parts, ", "));
}

class Reader {
public:
    explicit Reader(const KeyValues& values) : values_(values) {}

    const std::string* find(const std::string& key) {
        seen_.push_back(key);
        auto it = values_.find(key);
        return it == values_.end() ? nullptr : &it->second;
    }

    double number(const std::string& key, const std::string& text) const {
        double v = 0.0;
        const auto* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc() || ptr != end || text.empty()) {
            throw ConfigError(key, fmt::format("'{}' is not a number", text));
        }
        if (!std::isfinite(v)) throw ConfigError(key, "value must be finite");
        return v;
    }

    std::uint64_t unsigned_number(const std::string& key, const std::string& text) const {
        std::uint64_t v = 0;
        const auto* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc() || ptr != end || text.empty()) {
            throw ConfigError(key, fmt::format("'{}' is not a non-negative integer", text));
        }
        return v;
    }

    std::vector<double> list(const std::string& key, const std::string& text) const {
        std::vector<double> out;
        for (const auto& part : split(text, ',')) out.push_back(number(key, part));
        return out;
    }

    void read(const std::string& key, double& out) {
        if (const auto* v = find(key)) out = number(key, *v);
    }
    template <std::unsigned_integral T>
    void read(const std::string& key, T& out) {
        if (const auto* v = find(key)) out = static_cast<T>(unsigned_number(key, *v));
    }
    void read(const std::string& key, std::string& out) {
        if (const auto* v = find(key)) out = *v;
    }
    void read(const std::string& key, std::vector<double>& out) {
        if (const auto* v = find(key)) out = list(key, *v);
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                throw ConfigError(key, "unknown key");
            }
        }
    }

private:
    const KeyValues& values_;
    std::vector<std::string> seen_;
};

template <class Pred>
void require_each(const std::string& key, const std::vector<double>& values, Pred pred, const char* what) {
    for (double v : values) {
        if (!pred(v)) throw ConfigError(key, fmt::format("{} violates {}", v, what));
    }
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
    KeyValues values;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", fmt::format("{}:{}: expected 'key = value'", origin, line_no));
        }
        auto key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw ConfigError("", fmt::format("{}:{}: empty key", origin, line_no));
        if (!values.emplace(key, trim(std::string_view(body).substr(eq + 1))).second) {
            throw ConfigError(key, fmt::format("{}:{}: duplicate key", origin, line_no));
        }
    }
    return values;
}

KeyValues load_key_values(const std::string& path) {
    const auto text = read_file(path);
    if (!path.ends_with(".json")) return parse_key_values(text, path);

    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("config") || !doc["config"].is_object()) {
        throw ConfigError("config", fmt::format("'{}' has no embedded config object", path));
    }
    KeyValues values;
    for (const auto& [key, value] : doc["config"].items()) {
        if (!value.is_string()) throw ConfigError(key, "embedded config values must be strings");
        values[key] = value.get<std::string>();
    }
    return values;
}

void apply_override(KeyValues& values, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("", fmt::format("override '{}' is not key=value", assignment));
    const auto key = trim(std::string_view(assignment).substr(0, eq));
    if (key.empty()) throw ConfigError("", fmt::format("override '{}' has an empty key", assignment));
    values[key] = trim(std::string_view(assignment).substr(eq + 1));
}

bool RunConfig::wants(const std::string& format) const {
    return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

RunConfig resolve(const KeyValues& values) {
    RunConfig cfg;
    Reader r(values);

    r.read("model.kind", cfg.model.kind);
    if (cfg.model.kind.empty()) throw ConfigError("model.kind", "required (gmm, sym2 or expfam)");
    if (cfg.model.kind != "gmm" && cfg.model.kind != "sym2" && cfg.model.kind != "expfam") {
        throw ConfigError("model.kind", fmt::format("'{}' is not one of gmm, sym2, expfam", cfg.model.kind));
    }
    const bool sym2 = cfg.model.kind == "sym2";

    r.read("model.family", cfg.model.family);
    if (cfg.model.kind == "expfam") {
        if (cfg.model.family.empty()) cfg.model.family = "gaussian";
        try {
            family_by_name(cfg.model.family);
        } catch (const Error& e) {
            throw ConfigError("model.family", e.message());
        }
    } else if (!cfg.model.family.empty()) {
        throw ConfigError("model.family", "only meaningful for model.kind = expfam");
    }

    r.read("model.theta_star", cfg.model.theta_star);
    if (cfg.model.theta_star.empty()) throw ConfigError("model.theta_star", "required");
    const std::size_t width = cfg.model.theta_star.size();
    if (sym2 && width != 1) throw ConfigError("model.theta_star", "sym2 takes a single scalar");

    std::size_t k_declared = 0;
    r.read("model.K", k_declared);
    const std::size_t K = sym2 ? 2 : width;
    if (values.count("model.K") && k_declared != K) {
        throw ConfigError("model.K", fmt::format("K = {} but model.theta_star implies {}", k_declared, K));
    }

    r.read("model.pi", cfg.model.pi);
    if (cfg.model.pi.empty()) cfg.model.pi.assign(K, 1.0 / static_cast<double>(K));
    if (cfg.model.pi.size() != K) {
        throw ConfigError("model.pi", fmt::format("{} weights for {} components", cfg.model.pi.size(), K));
    }
    if (sym2 && (cfg.model.pi[0] != 0.5 || cfg.model.pi[1] != 0.5)) {
        throw ConfigError("model.pi", "sym2 has fixed weights 0.5, 0.5");
    }
    require_each("model.pi", cfg.model.pi, [](double v) { return v > 0.0; }, "pi_k > 0");
    double total = 0.0;
    for (double p : cfg.model.pi) total += p;
    if (std::abs(total - 1.0) > 1e-12) {
        throw ConfigError("model.pi", fmt::format("weights sum to {:.17g}, not 1", total));
    }

    r.read("data.gamma", cfg.data.gamma);
    if (!(cfg.data.gamma >= 0.0 && cfg.data.gamma <= 1.0)) throw ConfigError("data.gamma", "must lie in [0, 1]");
    r.read("data.total_samples", cfg.data.total_samples);
    if (cfg.data.total_samples == 0) throw ConfigError("data.total_samples", "must be positive");
    r.read("data.seed", cfg.data.seed);
    r.read("data.allocation", cfg.data.allocation);
    try {
        parse_allocation(cfg.data.allocation);
    } catch (const Error& e) {
        throw ConfigError("data.allocation", e.message());
    }

    std::vector<double> theta0;
    r.read("em.theta0", theta0);
    if (!theta0.empty()) {
        if (theta0.size() != width) {
            throw ConfigError("em.theta0", fmt::format("{} values, expected {}", theta0.size(), width));
        }
        cfg.em.theta0 = theta0;
    }
    r.read("em.max_iters", cfg.em.max_iters);
    if (cfg.em.max_iters == 0) throw ConfigError("em.max_iters", "must be positive");
    r.read("em.tol", cfg.em.tol);
    if (!(cfg.em.tol > 0.0)) throw ConfigError("em.tol", "must be positive");

    r.read("quadrature.abs_tol", cfg.quadrature.abs_tol);
    if (!(cfg.quadrature.abs_tol > 0.0)) throw ConfigError("quadrature.abs_tol", "must be positive");
    r.read("quadrature.range_sigma", cfg.quadrature.range_sigma);
    if (!(cfg.quadrature.range_sigma >= 8.0)) throw ConfigError("quadrature.range_sigma", "must be at least 8");
    r.read("quadrature.max_subdivisions", cfg.quadrature.max_subdivisions);
    if (cfg.quadrature.max_subdivisions == 0) throw ConfigError("quadrature.max_subdivisions", "must be positive");

    r.read("verify.gammas", cfg.verify.gammas);
    require_each("verify.gammas", cfg.verify.gammas, [](double g) { return g >= 0.0 && g < 1.0; }, "0 <= gamma < 1");
    if (const auto* text = r.find("verify.probes")) {
        std::vector<std::vector<double>> probes;
        for (const auto& part : split(*text, ';')) {
            auto probe = r.list("verify.probes", part);
            if (probe.size() != width) {
                throw ConfigError("verify.probes",
                                  fmt::format("probe '{}' has {} values, expected {}", part, probe.size(), width));
            }
            probes.push_back(std::move(probe));
        }
        cfg.verify.probes = std::move(probes);
    }
    r.read("verify.epsilons", cfg.verify.epsilons);
    require_each("verify.epsilons", cfg.verify.epsilons, [](double e) { return e > 0.0; }, "epsilon > 0");
    r.read("verify.item3_offsets", cfg.verify.item3_offsets);
    require_each("verify.item3_offsets", cfg.verify.item3_offsets, [](double d) { return d > 1.0; }, "offset > 1");
    r.read("verify.t_grid", cfg.verify.t_grid);
    require_each("verify.t_grid", cfg.verify.t_grid, [](double t) { return t > 0.0; }, "t > 0");

    r.read("output.directory", cfg.output.directory);
    if (cfg.output.directory.empty()) throw ConfigError("output.directory", "must not be empty");
    if (const auto* text = r.find("output.formats")) {
        cfg.output.formats = split(*text, ',');
        for (const auto& f : cfg.output.formats) {
            if (f != "csv" && f != "json") throw ConfigError("output.formats", fmt::format("unknown format '{}'", f));
        }
    }

    r.reject_unknown();

    // Parameter-domain checks need the assembled model.
    try {
        validate(model_kind(cfg), truth(cfg));
    } catch (const Error& e) {
        throw ConfigError("model.theta_star", e.message());
    }
    if (cfg.em.theta0) {
        try {
            validate(model_kind(cfg), initial_params(cfg));
        } catch (const Error& e) {
            throw ConfigError("em.theta0", e.message());
        }
    }
    return cfg;
}

KeyValues to_key_values(const RunConfig& cfg) {
    KeyValues out;
    out["model.kind"] = cfg.model.kind;
    if (!cfg.model.family.empty()) out["model.family"] = cfg.model.family;
    out["model.pi"] = join_doubles(cfg.model.pi);
    out["model.theta_star"] = join_doubles(cfg.model.theta_star);
    out["data.gamma"] = format_double(cfg.data.gamma);
    out["data.total_samples"] = std::to_string(cfg.data.total_samples);
    out["data.seed"] = std::to_string(cfg.data.seed);
    out["data.allocation"] = cfg.data.allocation;
    if (cfg.em.theta0) out["em.theta0"] = join_doubles(*cfg.em.theta0);
    out["em.max_iters"] = std::to_string(cfg.em.max_iters);
    out["em.tol"] = format_double(cfg.em.tol);
    out["quadrature.abs_tol"] = format_double(cfg.quadrature.abs_tol);
    out["quadrature.range_sigma"] = format_double(cfg.quadrature.range_sigma);
    out["quadrature.max_subdivisions"] = std::to_string(cfg.quadrature.max_subdivisions);
    out["verify.gammas"] = join_doubles(cfg.verify.gammas);
    if (cfg.verify.probes) {
        std::vector<std::string> parts;
        for (const auto& p : *cfg.verify.probes) parts.push_back(join_doubles(p));
        out["verify.probes"] = fmt::format("{}", fmt::join(parts, "; "));
    }
    out["verify.epsilons"] = join_doubles(cfg.verify.epsilons);
    out["verify.item3_offsets"] = join_doubles(cfg.verify.item3_offsets);
    out["verify.t_grid"] = join_doubles(cfg.verify.t_grid);
    out["output.directory"] = cfg.output.directory;
    out["output.formats"] = fmt::format("{}", fmt::join(cfg.output.formats, ", "));
    return out;
}

ModelKind model_kind(const RunConfig& cfg) {
    if (cfg.model.kind == "gmm") return ModelKind::gmm();
    if (cfg.model.kind == "sym2") return ModelKind::sym2();
    return ModelKind::expfam(family_by_name(cfg.model.family));
}

MixtureParams truth(const RunConfig& cfg) { return probe_params(cfg, cfg.model.theta_star); }

MixtureParams initial_params(const RunConfig& cfg) {
    if (!cfg.em.theta0) throw ConfigError("em.theta0", "required by this command");
    return probe_params(cfg, *cfg.em.theta0);
}

MixtureParams probe_params(const RunConfig& cfg, const std::vector<double>& probe) {
    if (cfg.model.kind == "sym2") return MixtureParams::symmetric(probe.at(0));
    return MixtureParams(cfg.model.pi, probe);
}

QuadratureScheme quadrature_scheme(const RunConfig& cfg) {
    QuadratureScheme scheme;
    scheme.abs_tol = cfg.quadrature.abs_tol;
    scheme.range_sigma = cfg.quadrature.range_sigma;
    scheme.max_subdivisions = cfg.quadrature.max_subdivisions;
    return scheme;
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "model.kind",         "model.family",         "model.K",          "model.pi",
        "model.theta_star",   "data.gamma",           "data.total_samples", "data.seed",
        "data.allocation",    "em.theta0",            "em.max_iters",     "em.tol",
        "quadrature.abs_tol", "quadrature.range_sigma", "quadrature.max_subdivisions",
        "verify.gammas",      "verify.probes",        "verify.epsilons",  "verify.item3_offsets",
        "verify.t_grid",      "output.directory",     "output.formats"};
    return keys;
}

}  // namespace ssem::harness
