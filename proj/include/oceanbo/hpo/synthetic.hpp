#pragma once

#include "oceanbo/hpo/space.hpp"
#include "oceanbo/hpo/trial.hpp"

namespace oceanbo::hpo {

// A cheap two-objective black box on the encoded unit cube of any space:
// objective 1 is a negated shifted sphere, objective 2 a negated shifted
// sphere with a shallow cosine ripple. The two optima differ, so the
// problem has a genuine Pareto front.
ObjectiveVector synthetic_objectives(const SearchSpace& space, const Configuration& config);

// Six-dimensional mixed space (two floats, two integers, two categoricals).
SearchSpace synthetic_space();

}  // namespace oceanbo::hpo
