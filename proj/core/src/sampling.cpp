#include "ssem/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "ssem/error.hpp"
#include "ssem/rng.hpp"

namespace ssem {

namespace {

enum Stream : std::uint64_t { kLabels = 0, kLabeledY = 1, kUnlabeled = 2 };

std::size_t categorical(std::span<const double> pi, double u) {
    double cumulative = 0.0;
    for (std::size_t k = 0; k + 1 < pi.size(); ++k) {
        cumulative += pi[k];
        if (u < cumulative) return k;
    }
    return pi.size() - 1;
}

}  // namespace

double Dataset::gamma() const {
    if (labeled.empty() && unlabeled.empty()) throw Error(ErrorCode::InvalidArgument, "empty dataset has no gamma");
    return static_cast<double>(m()) / static_cast<double>(m() + n());
}

LabelAllocation parse_allocation(std::string_view text) {
    if (text == "proportional") return LabelAllocation::Proportional;
    if (text == "multinomial") return LabelAllocation::Multinomial;
    throw Error(ErrorCode::InvalidArgument, fmt::format("unknown label allocation '{}'", text));
}

std::string_view to_string(LabelAllocation allocation) noexcept {
    return allocation == LabelAllocation::Proportional ? "proportional" : "multinomial";
}

std::vector<std::size_t> proportional_counts(std::span<const double> pi, std::size_t m) {
    std::vector<std::size_t> counts(pi.size());
    long long assigned = 0;
    for (std::size_t k = 0; k < pi.size(); ++k) {
        counts[k] = static_cast<std::size_t>(std::llround(pi[k] * static_cast<double>(m)));
        assigned += static_cast<long long>(counts[k]);
    }
    const auto largest = static_cast<std::size_t>(std::max_element(pi.begin(), pi.end()) - pi.begin());
    const long long residual = static_cast<long long>(m) - assigned;
    counts[largest] = static_cast<std::size_t>(static_cast<long long>(counts[largest]) + residual);
    return counts;
}

double draw_component(const ModelKind& kind, const MixtureParams& truth, std::size_t k, double u) {
    if (kind.tag() == ModelTag::ExpFam) {
        const auto& fam = kind.family();
        if (!fam.quantile) {
            throw Error(ErrorCode::InvalidArgument, fmt::format("family '{}' has no quantile function", fam.name));
        }
        return fam.quantile(truth.theta(k), u);
    }
    return truth.theta(k) + standard_normal_quantile(u);
}

Dataset sample_dataset(const ModelKind& kind, const MixtureParams& truth, const SampleConfig& cfg) {
    if (cfg.m + cfg.n == 0) throw Error(ErrorCode::InvalidArgument, "sample_dataset needs m + n >= 1");
    validate(kind, truth);

    Dataset data;
    data.labeled.reserve(cfg.m);
    data.unlabeled.reserve(cfg.n);

    Xoshiro256 label_rng(cfg.seed, kLabels);
    Xoshiro256 labeled_y_rng(cfg.seed, kLabeledY);
    Xoshiro256 unlabeled_rng(cfg.seed, kUnlabeled);

    if (cfg.allocation == LabelAllocation::Proportional) {
        const auto counts = proportional_counts(truth.pi(), cfg.m);
        for (std::size_t k = 0; k < counts.size(); ++k) {
            for (std::size_t i = 0; i < counts[k]; ++i) {
                data.labeled.push_back({k, draw_component(kind, truth, k, labeled_y_rng.uniform())});
            }
        }
    } else {
        for (std::size_t j = 0; j < cfg.m; ++j) {
            const std::size_t k = categorical(truth.pi(), label_rng.uniform());
            data.labeled.push_back({k, draw_component(kind, truth, k, labeled_y_rng.uniform())});
        }
    }

    for (std::size_t i = 0; i < cfg.n; ++i) {
        const std::size_t k = categorical(truth.pi(), unlabeled_rng.uniform());
        data.unlabeled.push_back(draw_component(kind, truth, k, unlabeled_rng.uniform()));
    }
    return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    out << "kind,x,y\n";
    for (const auto& s : data.labeled) fmt::print(out, "L,{},{:.17g}\n", s.x + 1, s.y);
    for (double y : data.unlabeled) fmt::print(out, "U,,{:.17g}\n", y);
}

Dataset read_dataset_csv(std::istream& in) {
    Dataset data;
    std::string line;
    if (!std::getline(in, line) || line != "kind,x,y") {
        throw Error(ErrorCode::InvalidArgument, "dataset CSV must start with header 'kind,x,y'");
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw Error(ErrorCode::InvalidArgument, fmt::format("dataset CSV row {} is malformed", row));
        }
        const std::string kind = line.substr(0, c1);
        const std::string x = line.substr(c1 + 1, c2 - c1 - 1);
        const double y = std::stod(line.substr(c2 + 1));
        if (kind == "L") {
            const long label = std::stol(x);
            if (label < 1) throw Error(ErrorCode::InvalidArgument, fmt::format("row {}: label must be >= 1", row));
            data.labeled.push_back({static_cast<std::size_t>(label - 1), y});
        } else if (kind == "U" && x.empty()) {
            data.unlabeled.push_back(y);
        } else {
            throw Error(ErrorCode::InvalidArgument, fmt::format("dataset CSV row {} has bad kind/x", row));
        }
    }
    return data;
}

}  // namespace ssem
