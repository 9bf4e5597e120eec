#pragma once

#include <optional>
#include <string>

#include "regenn/recurrent.hpp"

namespace regenn {

struct RuSpec {
    CellKind kind = CellKind::LSTM;
    Direction direction = Direction::Uni;
    bool operator==(const RuSpec&) const = default;
};

/// Which components an architecture engages. Parses from tags like
/// "(E → URU + BRU) + AR": E is the attention encoder, URU/BRU a
/// uni/bidirectional recurrent unit (first tracks the time axis, second the
/// variable axis), AR the linear shortcut. "AR" alone is the pure linear
/// model and "regenn" the full graph-evolution architecture.
struct VariantSpec {
    bool use_encoder = false;
    std::optional<RuSpec> ru1;
    std::optional<RuSpec> ru2;
    bool use_ar = false;
    bool use_gse = false;

    bool operator==(const VariantSpec&) const = default;

    /// Parses a tag; `cell` supplies the recurrent cell kind, which the tag
    /// grammar does not encode. Errors name the offending token.
    static VariantSpec parse(const std::string& tag, CellKind cell);

    /// Canonical tag string (cell kind not included).
    std::string tag() const;
};

} // namespace regenn
