#pragma once

// Per-connection dendrite gates. A gated connection adds w*x to the node's
// activation sum only when its gate passes for the transmitted value x.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "dendrevo/error.hpp"
#include "dendrevo/random.hpp"

namespace dendrevo {

enum class GateKind : std::uint8_t {
    Inactive,   ///< plain connection
    Lower,      ///< passes when x >= threshold
    Upper,      ///< passes when x <= threshold
    Range,      ///< passes when lo <= x <= hi
    RandomDrop, ///< passes on an independent coin flip per forward pass
};

/// Tagged gate state. Lower keeps its threshold in `lo`, Upper in `hi`,
/// so a Range passes exactly when Lower(lo) and Upper(hi) both pass.
struct Gate {
    GateKind kind = GateKind::Inactive;
    double lo = 0.0;
    double hi = 0.0;

    static constexpr Gate inactive() { return {}; }
    static constexpr Gate lower(double t) { return {GateKind::Lower, t, 0.0}; }
    static constexpr Gate upper(double t) { return {GateKind::Upper, 0.0, t}; }
    static Gate range(double lo, double hi)
    {
        if (!(lo <= hi))
            throw InvalidParameters("range gate requires lo <= hi");
        return {GateKind::Range, lo, hi};
    }
    static constexpr Gate random_drop() { return {GateKind::RandomDrop, 0.0, 0.0}; }

    constexpr bool active() const noexcept { return kind != GateKind::Inactive; }
    constexpr bool stochastic() const noexcept { return kind == GateKind::RandomDrop; }

    double threshold() const noexcept { return kind == GateKind::Upper ? hi : lo; }

    bool operator==(const Gate&) const = default;
};

inline constexpr double default_drop_probability = 0.5;

/// Deterministic gates never touch `rng`.
inline bool gate_passes(const Gate& g, double x, Rng& rng, double drop_probability = default_drop_probability)
{
    switch (g.kind) {
    case GateKind::Inactive:
        return true;
    case GateKind::Lower:
        return x >= g.lo;
    case GateKind::Upper:
        return x <= g.hi;
    case GateKind::Range:
        return g.lo <= x && x <= g.hi;
    case GateKind::RandomDrop:
        return !rng.bernoulli(drop_probability);
    }
    return true;
}

/// One-letter tag used by the genome file format.
inline char gate_tag(GateKind k)
{
    switch (k) {
    case GateKind::Inactive: return 'I';
    case GateKind::Lower: return 'L';
    case GateKind::Upper: return 'U';
    case GateKind::Range: return 'R';
    case GateKind::RandomDrop: return 'D';
    }
    return '?';
}

struct Connection {
    double weight = 0.0;
    Gate gate{};

    bool operator==(const Connection&) const = default;
};

} // namespace dendrevo
