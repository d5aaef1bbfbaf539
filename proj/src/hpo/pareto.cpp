#include "oceanbo/hpo/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oceanbo/common/error.hpp"

namespace oceanbo::hpo {

std::vector<std::size_t> non_dominated(const std::vector<Point2>& points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a][0] != points[b][0]) return points[a][0] > points[b][0];
    return points[a][1] > points[b][1];
  });

  // Sweep groups of equal first coordinate in descending order. Within a
  // group only the largest second coordinate can survive; it survives if
  // no strictly-larger first coordinate reached the same second value.
  std::vector<std::size_t> keep;
  double best_before = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && points[order[j]][0] == points[order[i]][0]) ++j;
    const double group_max = points[order[i]][1];
    if (group_max > best_before) {
      for (std::size_t k = i; k < j && points[order[k]][1] == group_max; ++k) keep.push_back(order[k]);
    }
    best_before = std::max(best_before, group_max);
    i = j;
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

std::vector<TrialRecord> pareto_front(const std::vector<TrialRecord>& trials) {
  std::vector<const TrialRecord*> ok;
  std::vector<Point2> pts;
  for (const auto& t : trials) {
    if (!t.ok()) continue;
    ok.push_back(&t);
    pts.push_back({t.objectives->neg_mse, t.objectives->acc});
  }
  std::vector<TrialRecord> front;
  for (std::size_t idx : non_dominated(pts)) front.push_back(*ok[idx]);
  std::sort(front.begin(), front.end(),
            [](const TrialRecord& a, const TrialRecord& b) { return a.trial_id < b.trial_id; });
  return front;
}

double hypervolume2d(const std::vector<Point2>& front, const Point2& ref) {
  for (const auto& p : front) {
    if (!(p[0] >= ref[0] && p[1] >= ref[1]) || !std::isfinite(p[0]) || !std::isfinite(p[1])) {
      throw ConfigError("hypervolume2d: point does not dominate the reference point");
    }
  }
  std::vector<Point2> sorted = front;
  std::sort(sorted.begin(), sorted.end(), [](const Point2& a, const Point2& b) {
    if (a[0] != b[0]) return a[0] > b[0];
    return a[1] > b[1];
  });
  double volume = 0.0;
  double covered = ref[1];
  for (const auto& p : sorted) {
    if (p[1] > covered) {
      volume += (p[0] - ref[0]) * (p[1] - covered);
      covered = p[1];
    }
  }
  return volume;
}

}  // namespace oceanbo::hpo
