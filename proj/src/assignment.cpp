#include "roomlayout/assignment.hpp"

#include <cmath>
#include <limits>

#include "roomlayout/errors.hpp"

namespace roomlayout {

std::vector<int> min_cost_assignment(const std::vector<double>& cost, int rows, int cols) {
  if (rows < 0 || cols < 0 || cost.size() != static_cast<std::size_t>(rows) * cols) {
    fail(ErrorCode::InvalidArgument, "cost matrix size does not match its dimensions");
  }
  for (double c : cost) {
    if (!std::isfinite(c)) fail(ErrorCode::InvalidArgument, "non-finite assignment cost");
  }
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);

  // Potentials formulation needs rows <= cols; transpose otherwise.
  const bool transposed = rows > cols;
  const int n = transposed ? cols : rows;
  const int m = transposed ? rows : cols;
  auto at = [&](int i, int j) {
    return transposed ? cost[static_cast<std::size_t>(j) * cols + i]
                      : cost[static_cast<std::size_t>(i) * cols + j];
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is a virtual start.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0);  // row matched to each column
  std::vector<int> way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> out(rows, -1);
  for (int j = 1; j <= m; ++j) {
    if (match[j] == 0) continue;
    if (transposed) {
      out[j - 1] = match[j] - 1;
    } else {
      out[match[j] - 1] = j - 1;
    }
  }
  return out;
}

}  // namespace roomlayout
