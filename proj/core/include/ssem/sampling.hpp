#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "ssem/model.hpp"

namespace ssem {

struct LabeledSample {
    std::size_t x;  // 0-based component index
    double y;

    friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// m labeled pairs and n unlabeled observations.
struct Dataset {
    std::vector<LabeledSample> labeled;
    std::vector<double> unlabeled;

    std::size_t m() const noexcept { return labeled.size(); }
    std::size_t n() const noexcept { return unlabeled.size(); }
    /// m / (m + n); throws InvalidArgument for an empty dataset.
    double gamma() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class LabelAllocation { Multinomial, Proportional };

LabelAllocation parse_allocation(std::string_view text);
std::string_view to_string(LabelAllocation allocation) noexcept;

struct SampleConfig {
    std::uint64_t seed = 0;
    std::size_t m = 0;
    std::size_t n = 0;
    LabelAllocation allocation = LabelAllocation::Proportional;
};

/// Per-component labeled counts round(pi_k m); the rounding residual goes to
/// the largest-weight component (first one on ties).
std::vector<std::size_t> proportional_counts(std::span<const double> pi, std::size_t m);

/// Draws one observation from component k of the truth using uniform u.
double draw_component(const ModelKind& kind, const MixtureParams& truth, std::size_t k, double u);

/// Deterministic in (kind, truth, cfg): labeled pairs come from p(x) p(y | x),
/// unlabeled values from the marginal. Proportional allocation emits the
/// labeled samples grouped by component in index order.
Dataset sample_dataset(const ModelKind& kind, const MixtureParams& truth, const SampleConfig& cfg);

/// CSV with header `kind,x,y`; kind is L or U, x is 1-based and empty for
/// unlabeled rows, y has 17 significant digits.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);

}  // namespace ssem
