#pragma once

#include <vector>

namespace roomlayout {

// Minimum-cost assignment on a rows x cols cost matrix (row-major). Returns,
// for each row, the matched column or -1; exactly min(rows, cols) rows are
// matched. O(n^3) shortest augmenting paths.
std::vector<int> min_cost_assignment(const std::vector<double>& cost, int rows, int cols);

}  // namespace roomlayout
