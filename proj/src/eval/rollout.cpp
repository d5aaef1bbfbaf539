#include "oceanbo/eval/rollout.hpp"

#include <algorithm>
#include <memory>

#include "oceanbo/common/error.hpp"

namespace oceanbo::eval {

Predictor model_predictor(fno::FnoConfig config, fno::ParamSet params) {
  auto shared = std::make_shared<const fno::ParamSet>(std::move(params));
  return [config, shared](const fno::Tensor4& input, int, int) { return fno::forward(config, *shared, input); };
}

Predictor oracle_predictor(const ocean::PairedDataset& data) {
  return [&data](const fno::Tensor4& input, int sim, int t) {
    const auto& s = input.shape();
    fno::Tensor4 out(fno::Shape4{1, ocean::kStateChannels, s.h, s.w});
    if (t + 1 < data.steps()) {
      const auto f = data.frame(sim, t + 1);
      std::copy(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(out.size()), out.data());
    } else {
      std::copy(input.data(), input.data() + out.size(), out.data());
    }
    return out;
  };
}

RolloutResult rollout(const Predictor& predictor, const ocean::PairedDataset& data, int sim, int t0, int steps) {
  if (steps < 1) throw ConfigError("rollout needs at least one step");
  if (sim < 0 || sim >= data.sims()) throw ConfigError("rollout: no simulation " + std::to_string(sim));
  if (t0 < 0 || t0 >= data.steps()) throw ConfigError("rollout: initial time out of range");

  const int h = data.height();
  const int w = data.width();
  const std::size_t plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  const auto& mask = data.mask();

  RolloutResult res;
  res.sim = sim;
  res.t0 = t0;
  fno::Tensor4 input(fno::Shape4{1, ocean::kChannels, h, w});
  const auto f0 = data.frame(sim, t0);
  std::copy(f0.begin(), f0.end(), input.data());

  for (int k = 1; k <= steps; ++k) {
    fno::Tensor4 pred = predictor(input, sim, t0 + k - 1);
    if (!(pred.shape() == fno::Shape4{1, ocean::kStateChannels, h, w})) {
      throw ShapeError("rollout: predictor returned " + pred.shape().str());
    }
    for (int c = 0; c < ocean::kStateChannels; ++c) {
      auto p = pred.plane(0, c);
      for (std::size_t i = 0; i < plane; ++i) {
        if (!mask[i]) p[i] = 0.0;
      }
    }

    RolloutStep st;
    st.step = k;
    const int t = t0 + k;
    if (t < data.steps()) {
      st.has_truth = true;
      fno::Tensor4 truth(pred.shape());
      const auto f = data.frame(sim, t);
      std::copy(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(truth.size()), truth.data());
      st.metrics = metrics(pred, truth, data.climatology(), mask);
    }
    res.steps.push_back(std::move(st));

    res.inputs.push_back(input);
    std::copy(pred.data(), pred.data() + pred.size(), input.data());
    res.predictions.push_back(std::move(pred));
  }
  return res;
}

}  // namespace oceanbo::eval
