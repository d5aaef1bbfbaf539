#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "oceanbo/fno/activation.hpp"
#include "oceanbo/fno/params.hpp"
#include "oceanbo/fno/spectral.hpp"
#include "oceanbo/fno/tensor.hpp"
#include "oceanbo/hpo/space.hpp"

namespace oceanbo::fno {

enum class PaddingType { kConstant, kReflect, kReplicate, kCircular };

PaddingType padding_type_from_name(const std::string& name);
std::string padding_type_name(PaddingType t);

struct FnoConfig {
  int in_channels = 5;
  int out_channels = 4;
  bool padding = false;
  PaddingType padding_type = PaddingType::kConstant;
  int pad_width = 8;
  bool coord_feat = false;
  Activation lift_act = Activation::kGelu;
  Activation proj_act = Activation::kSilu;
  int num_fno = 4;
  int num_latent_feat = 32;
  int num_modes = 16;
  int num_proj_layers = 2;
  int proj_size = 16;

  int pad() const { return padding ? pad_width : 0; }
  int lifted_channels() const { return in_channels + (coord_feat ? 2 : 0); }
};

// Throws ConfigError naming the first invalid field.
void validate(const FnoConfig& config);

// Builds the architecture described by a search-space configuration for an
// H x W input grid; num_modes is clamped to what the padded grid supports.
FnoConfig fno_config_from(const hpo::Configuration& config, int height, int width, int pad_width = 8);

nlohmann::json to_json(const FnoConfig& config);
FnoConfig fno_config_from_json(const nlohmann::json& j);

// Affine weights ~ U(+-1/sqrt(fan_in)), spectral weights with real and
// imaginary parts ~ N(0, (1/latent^2)^2), biases 0, PReLU slopes 0.25.
ParamSet init_params(const FnoConfig& config, std::uint64_t seed);

// Intermediates retained by forward() for backward().
struct ForwardCache {
  const ParamSet* params = nullptr;
  std::uint64_t params_version = 0;
  FnoConfig config;
  Shape4 input_shape;
  std::shared_ptr<const SpectralBasis> basis;
  Tensor4 lift_in;
  Tensor4 lift_pre;
  std::vector<Tensor4> block_pre;
  std::vector<SpectralCache> spectral;
  std::vector<Tensor4> proj_pre;
};

// (B, in_channels, H, W) -> (B, out_channels, H, W). Pass a cache to keep
// what backward() needs.
Tensor4 forward(const FnoConfig& config, const ParamSet& params, const Tensor4& input,
                ForwardCache* cache = nullptr);

// Reverse-mode gradients of every parameter given dL/d(prediction).
ParamSet backward(const ForwardCache& cache, const Tensor4& grad_output);
// As backward(), adding into an existing gradient set.
void backward_accumulate(const ForwardCache& cache, const Tensor4& grad_output, ParamSet& grads);

// Pieces of the pipeline, exposed for tests.
Tensor4 add_coordinate_channels(const Tensor4& x);
Tensor4 pad_spatial(const Tensor4& x, int width, PaddingType type);
Tensor4 crop_spatial(const Tensor4& x, int width);
int padded_source_index(int index, int size, PaddingType type);

}  // namespace oceanbo::fno
