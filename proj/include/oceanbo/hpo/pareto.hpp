#pragma once

#include <array>
#include <vector>

#include "oceanbo/hpo/trial.hpp"

namespace oceanbo::hpo {

using Point2 = std::array<double, 2>;

// Indices of the non-dominated points (both coordinates maximized),
// ascending. Dominated means another point is >= in both coordinates
// and > in at least one; exact duplicates do not dominate each other.
std::vector<std::size_t> non_dominated(const std::vector<Point2>& points);

// Non-dominated successful trials, ordered by trial_id.
std::vector<TrialRecord> pareto_front(const std::vector<TrialRecord>& trials);

// Area dominated by `front` and bounded below by `ref`. Every point must
// be >= ref componentwise; dominated points in the input contribute nothing.
double hypervolume2d(const std::vector<Point2>& front, const Point2& ref);

}  // namespace oceanbo::hpo
