#pragma once

#include "twrelay/channel.hpp"
#include "twrelay/rates.hpp"

namespace twrelay {

/// Which objective the brute-force search maximizes.
///   ma_only: min of the three uplink constraint values over (p1, p2)
///   bc_only: min of the two downlink constraint values over pr
///   type1:   min over all five; separates into ma_only and bc_only
///   type2:   the per-subcarrier-region exchange rate over (p1, p2, pr)
enum class GridObjective { type1, type2, ma_only, bc_only };

struct OracleResult {
    double rate = 0.0;
    PowerAllocation pa;
};

/// Exhaustive verification search, test-grade and limited to N <= 3.
/// Enumerates each active power vector on a regular grid of the budget face
/// {p >= 0, sum p = budget} (every objective is nondecreasing in each power,
/// so a maximizer lies on the face), then optionally zooms in around the best
/// cell and polishes with exchange moves and supergradient ascent.
///
/// grid_points is the requested number of grid divisions per simplex axis;
/// the joint enumeration is capped internally, with zoom rounds restoring
/// the lost resolution. pre: N <= 3, grid_points >= 50.
OracleResult grid_maxmin(const ChannelRealization& ch, const Budgets& budgets,
                         GridObjective objective, int grid_points, bool polish = true);

}  // namespace twrelay
