#include "oceanbo/fno/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "oceanbo/common/error.hpp"
#include "oceanbo/common/seed.hpp"

namespace oceanbo::fno {

namespace {

using ConstRealMap = Eigen::Map<const RealMatrix>;
using RealMap = Eigen::Map<RealMatrix>;

Tensor4 affine(const Tensor4& x, const Param& weight, const Param& bias) {
  const auto& s = x.shape();
  const int cout = weight.shape[0];
  const int cin = weight.shape[1];
  if (cin != s.c) throw ShapeError("affine '" + weight.name + "': expected " + std::to_string(cin) + " channels");
  Tensor4 out(Shape4{s.n, cout, s.h, s.w});
  const auto plane = static_cast<Eigen::Index>(s.plane());
  ConstRealMap w(weight.values.data(), cout, cin);
  Eigen::Map<const Eigen::VectorXd> b(bias.values.data(), cout);
  for (int n = 0; n < s.n; ++n) {
    ConstRealMap in(x.data() + x.offset(n, 0), cin, plane);
    RealMap o(out.data() + out.offset(n, 0), cout, plane);
    o.noalias() = w * in;
    o.colwise() += b;
  }
  return out;
}

// Accumulates dW, db; returns dx when requested.
void affine_backward(const Tensor4& x, const Param& weight, const Tensor4& grad, Param& dweight, Param& dbias,
                     Tensor4* dx) {
  const auto& s = x.shape();
  const int cout = weight.shape[0];
  const int cin = weight.shape[1];
  const auto plane = static_cast<Eigen::Index>(s.plane());
  ConstRealMap w(weight.values.data(), cout, cin);
  RealMap dw(dweight.values.data(), cout, cin);
  Eigen::Map<Eigen::VectorXd> db(dbias.values.data(), cout);
  if (dx) *dx = Tensor4(s);
  for (int n = 0; n < s.n; ++n) {
    ConstRealMap in(x.data() + x.offset(n, 0), cin, plane);
    ConstRealMap g(grad.data() + grad.offset(n, 0), cout, plane);
    dw.noalias() += g * in.transpose();
    db += g.rowwise().sum();
    if (dx) {
      RealMap d(dx->data() + dx->offset(n, 0), cin, plane);
      d.noalias() = w.transpose() * g;
    }
  }
}

Tensor4 activate_tensor(Activation a, const Tensor4& z, double slope) {
  Tensor4 out(z.shape());
  activation_forward(a, z.values(), out.values(), slope);
  return out;
}

double slope_of(const ParamSet& params, const std::string& name) {
  auto i = params.index_of(name);
  return i ? params.params()[*i].values[0] : kPreluInit;
}

std::string block_name(int b, const char* part) { return "block" + std::to_string(b) + "." + part; }
std::string proj_name(int j, const char* part) { return "proj" + std::to_string(j) + "." + part; }

int proj_in_channels(const FnoConfig& c, int j) { return j == 0 ? c.num_latent_feat : c.proj_size; }

}  // namespace

PaddingType padding_type_from_name(const std::string& name) {
  if (name == "constant") return PaddingType::kConstant;
  if (name == "reflect") return PaddingType::kReflect;
  if (name == "replicate") return PaddingType::kReplicate;
  if (name == "circular") return PaddingType::kCircular;
  throw ConfigError("unknown padding_type '" + name + "'");
}

std::string padding_type_name(PaddingType t) {
  switch (t) {
    case PaddingType::kConstant:
      return "constant";
    case PaddingType::kReflect:
      return "reflect";
    case PaddingType::kReplicate:
      return "replicate";
    case PaddingType::kCircular:
      return "circular";
  }
  return "constant";
}

void validate(const FnoConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid FnoConfig: " + what);
  };
  require(c.in_channels >= 1, "in_channels >= 1");
  require(c.out_channels >= 1, "out_channels >= 1");
  require(c.pad_width >= 0, "pad_width >= 0");
  require(c.num_fno >= 0, "num_FNO >= 0");
  require(c.num_latent_feat >= 1, "num_latent_feat >= 1");
  require(c.num_modes >= 1, "num_modes >= 1");
  require(c.num_proj_layers >= 0, "num_proj_layers >= 0");
  require(c.proj_size >= 1, "proj_size >= 1");
}

FnoConfig fno_config_from(const hpo::Configuration& config, int height, int width, int pad_width) {
  FnoConfig c;
  c.padding = config.get_flag("padding");
  c.padding_type = padding_type_from_name(config.get_string("padding_type"));
  c.pad_width = pad_width;
  c.coord_feat = config.get_flag("coord_feat");
  c.lift_act = activation_from_name(config.get_string("lift_act"));
  c.proj_act = activation_from_name(config.get_string("proj_act"));
  c.num_fno = static_cast<int>(config.get_int("num_FNO"));
  c.num_latent_feat = static_cast<int>(config.get_int("num_latent_feat"));
  c.num_proj_layers = static_cast<int>(config.get_int("num_proj_layers"));
  c.proj_size = static_cast<int>(config.get_int("proj_size"));
  const int limit = max_modes(height + 2 * c.pad(), width + 2 * c.pad());
  c.num_modes = std::min(static_cast<int>(config.get_int("num_modes")), limit);
  validate(c);
  return c;
}

nlohmann::json to_json(const FnoConfig& c) {
  return {{"in_channels", c.in_channels},
          {"out_channels", c.out_channels},
          {"padding", c.padding},
          {"padding_type", padding_type_name(c.padding_type)},
          {"pad_width", c.pad_width},
          {"coord_feat", c.coord_feat},
          {"lift_act", activation_name(c.lift_act)},
          {"proj_act", activation_name(c.proj_act)},
          {"num_FNO", c.num_fno},
          {"num_latent_feat", c.num_latent_feat},
          {"num_modes", c.num_modes},
          {"num_proj_layers", c.num_proj_layers},
          {"proj_size", c.proj_size}};
}

FnoConfig fno_config_from_json(const nlohmann::json& j) {
  FnoConfig c;
  c.in_channels = j.at("in_channels").get<int>();
  c.out_channels = j.at("out_channels").get<int>();
  c.padding = j.at("padding").get<bool>();
  c.padding_type = padding_type_from_name(j.at("padding_type").get<std::string>());
  c.pad_width = j.at("pad_width").get<int>();
  c.coord_feat = j.at("coord_feat").get<bool>();
  c.lift_act = activation_from_name(j.at("lift_act").get<std::string>());
  c.proj_act = activation_from_name(j.at("proj_act").get<std::string>());
  c.num_fno = j.at("num_FNO").get<int>();
  c.num_latent_feat = j.at("num_latent_feat").get<int>();
  c.num_modes = j.at("num_modes").get<int>();
  c.num_proj_layers = j.at("num_proj_layers").get<int>();
  c.proj_size = j.at("proj_size").get<int>();
  validate(c);
  return c;
}

ParamSet init_params(const FnoConfig& c, std::uint64_t seed) {
  validate(c);
  ParamSet ps;
  Rng rng(seed);
  auto add_affine = [&](const std::string& prefix, int cout, int cin) {
    auto& w = ps.add(prefix + ".weight", {cout, cin});
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : w.values) v = u(rng);
    ps.add(prefix + ".bias", {cout});
  };
  auto add_prelu = [&](const std::string& prefix, Activation a) {
    if (a == Activation::kPrelu) ps.add(prefix + ".prelu", {1}).values[0] = kPreluInit;
  };

  const int latent = c.num_latent_feat;
  add_affine("lift", latent, c.lifted_channels());
  add_prelu("lift", c.lift_act);
  const int m = c.num_modes;
  const double spectral_std = 1.0 / (static_cast<double>(latent) * latent);
  std::normal_distribution<double> normal(0.0, spectral_std);
  for (int b = 0; b < c.num_fno; ++b) {
    auto& r = ps.add(block_name(b, "spectral"), {2 * m - 1, m, latent, latent}, true);
    for (double& v : r.values) v = normal(rng);
    add_affine("block" + std::to_string(b), latent, latent);
  }
  for (int j = 0; j < c.num_proj_layers; ++j) {
    add_affine("proj" + std::to_string(j), c.proj_size, proj_in_channels(c, j));
    add_prelu("proj" + std::to_string(j), c.proj_act);
  }
  add_affine("out", c.out_channels, c.num_proj_layers > 0 ? c.proj_size : latent);
  return ps;
}

int padded_source_index(int p, int n, PaddingType type) {
  switch (type) {
    case PaddingType::kConstant:
      return (p >= 0 && p < n) ? p : -1;
    case PaddingType::kReplicate:
      return std::clamp(p, 0, n - 1);
    case PaddingType::kCircular:
      return ((p % n) + n) % n;
    case PaddingType::kReflect: {
      if (n == 1) return 0;
      const int period = 2 * (n - 1);
      const int q = ((p % period) + period) % period;
      return q < n ? q : period - q;
    }
  }
  return -1;
}

Tensor4 add_coordinate_channels(const Tensor4& x) {
  const auto& s = x.shape();
  Tensor4 out(Shape4{s.n, s.c + 2, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    std::copy(x.data() + x.offset(n, 0), x.data() + x.offset(n, 0) + static_cast<std::size_t>(s.c) * s.plane(),
              out.data() + out.offset(n, 0));
    for (int h = 0; h < s.h; ++h) {
      const double yc = s.h > 1 ? -1.0 + 2.0 * h / (s.h - 1) : 0.0;
      for (int w = 0; w < s.w; ++w) {
        const double xc = s.w > 1 ? -1.0 + 2.0 * w / (s.w - 1) : 0.0;
        out.at(n, s.c, h, w) = xc;
        out.at(n, s.c + 1, h, w) = yc;
      }
    }
  }
  return out;
}

Tensor4 pad_spatial(const Tensor4& x, int p, PaddingType type) {
  if (p == 0) return x;
  const auto& s = x.shape();
  Tensor4 out(Shape4{s.n, s.c, s.h + 2 * p, s.w + 2 * p});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int h = 0; h < s.h + 2 * p; ++h) {
        const int sh = padded_source_index(h - p, s.h, type);
        for (int w = 0; w < s.w + 2 * p; ++w) {
          const int sw = padded_source_index(w - p, s.w, type);
          out.at(n, c, h, w) = (sh < 0 || sw < 0) ? 0.0 : x.at(n, c, sh, sw);
        }
      }
    }
  }
  return out;
}

Tensor4 crop_spatial(const Tensor4& x, int p) {
  if (p == 0) return x;
  const auto& s = x.shape();
  Tensor4 out(Shape4{s.n, s.c, s.h - 2 * p, s.w - 2 * p});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int h = 0; h < s.h - 2 * p; ++h) {
        const double* src = x.data() + x.offset(n, c, h + p, p);
        std::copy(src, src + (s.w - 2 * p), out.data() + out.offset(n, c, h, 0));
      }
    }
  }
  return out;
}

Tensor4 forward(const FnoConfig& config, const ParamSet& params, const Tensor4& input, ForwardCache* cache) {
  const auto& s = input.shape();
  if (s.c != config.in_channels) {
    throw ShapeError("forward: expected " + std::to_string(config.in_channels) + " input channels, got " +
                     std::to_string(s.c));
  }
  if (s.h != s.w) throw ShapeError("forward: spatial dims must be square, got " + s.str());
  if (s.n < 1) throw ShapeError("forward: empty batch");

  const int p = config.pad();
  Tensor4 x = config.coord_feat ? add_coordinate_channels(input) : input;
  x = pad_spatial(x, p, config.padding_type);
  auto basis = std::make_shared<const SpectralBasis>(
      SpectralBasis::truncated(x.shape().h, x.shape().w, config.num_modes));

  const int latent = config.num_latent_feat;
  Tensor4 z = affine(x, params.at("lift.weight"), params.at("lift.bias"));
  Tensor4 a = activate_tensor(config.lift_act, z, slope_of(params, "lift.prelu"));
  if (cache) {
    cache->params = &params;
    cache->params_version = params.version();
    cache->config = config;
    cache->input_shape = s;
    cache->basis = basis;
    cache->lift_in = std::move(x);
    cache->lift_pre = std::move(z);
    cache->block_pre.assign(static_cast<std::size_t>(config.num_fno), Tensor4{});
    cache->spectral.assign(static_cast<std::size_t>(config.num_fno), SpectralCache{});
    cache->proj_pre.assign(static_cast<std::size_t>(config.num_proj_layers), Tensor4{});
  }

  for (int b = 0; b < config.num_fno; ++b) {
    const Param& r = params.at(block_name(b, "spectral"));
    SpectralCache* sc = cache ? &cache->spectral[static_cast<std::size_t>(b)] : nullptr;
    Tensor4 zb = spectral_conv(*basis, a, r.complex_data(), latent, sc);
    const Tensor4 bypass = affine(a, params.at(block_name(b, "weight")), params.at(block_name(b, "bias")));
    for (std::size_t i = 0; i < zb.size(); ++i) zb.values()[i] += bypass.values()[i];
    a = activate_tensor(Activation::kGelu, zb, 0.0);
    if (cache) cache->block_pre[static_cast<std::size_t>(b)] = std::move(zb);
  }

  for (int j = 0; j < config.num_proj_layers; ++j) {
    Tensor4 zj = affine(a, params.at(proj_name(j, "weight")), params.at(proj_name(j, "bias")));
    a = activate_tensor(config.proj_act, zj, slope_of(params, proj_name(j, "prelu")));
    if (cache) cache->proj_pre[static_cast<std::size_t>(j)] = std::move(zj);
  }
  Tensor4 y = affine(a, params.at("out.weight"), params.at("out.bias"));
  return crop_spatial(y, p);
}

void backward_accumulate(const ForwardCache& cache, const Tensor4& grad_output, ParamSet& grads) {
  if (!cache.params) throw std::logic_error("backward: empty forward cache");
  const ParamSet& params = *cache.params;
  if (params.version() != cache.params_version) {
    throw std::logic_error("backward: parameters changed since forward (stale cache)");
  }
  if (!grads.same_layout(params)) throw ShapeError("backward: gradient set does not match parameters");
  const FnoConfig& config = cache.config;
  const auto& in = cache.input_shape;
  const auto& gs = grad_output.shape();
  if (gs.n != in.n || gs.c != config.out_channels || gs.h != in.h || gs.w != in.w) {
    throw ShapeError("backward: gradient shape " + gs.str() + " does not match the forward output");
  }

  const int p = config.pad();
  const int latent = config.num_latent_feat;
  const auto& lifted = cache.lift_in.shape();
  Tensor4 g(Shape4{gs.n, gs.c, lifted.h, lifted.w});
  for (int n = 0; n < gs.n; ++n) {
    for (int c = 0; c < gs.c; ++c) {
      for (int h = 0; h < gs.h; ++h) {
        const double* src = grad_output.data() + grad_output.offset(n, c, h, 0);
        std::copy(src, src + gs.w, g.data() + g.offset(n, c, h + p, p));
      }
    }
  }

  auto grad_of = [&](const std::string& name) -> Param& { return grads.at(name); };

  // Input of the output layer and of every projection layer, recomputed from
  // the stored pre-activations.
  auto block_out = [&](int b) { return activate_tensor(Activation::kGelu, cache.block_pre[static_cast<std::size_t>(b)], 0.0); };
  auto lift_out = [&]() {
    return activate_tensor(config.lift_act, cache.lift_pre, slope_of(params, "lift.prelu"));
  };
  auto trunk_out = [&]() { return config.num_fno > 0 ? block_out(config.num_fno - 1) : lift_out(); };
  auto proj_out = [&](int j) {
    return activate_tensor(config.proj_act, cache.proj_pre[static_cast<std::size_t>(j)],
                           slope_of(params, proj_name(j, "prelu")));
  };

  Tensor4 dx;
  {
    const Tensor4 a = config.num_proj_layers > 0 ? proj_out(config.num_proj_layers - 1) : trunk_out();
    affine_backward(a, params.at("out.weight"), g, grad_of("out.weight"), grad_of("out.bias"), &dx);
    g = std::move(dx);
  }

  for (int j = config.num_proj_layers - 1; j >= 0; --j) {
    const Tensor4& zj = cache.proj_pre[static_cast<std::size_t>(j)];
    Tensor4 gz(zj.shape());
    const std::string prelu = proj_name(j, "prelu");
    const double dslope = activation_backward(config.proj_act, zj.values(), g.values(), gz.values(),
                                              slope_of(params, prelu));
    if (config.proj_act == Activation::kPrelu) grad_of(prelu).values[0] += dslope;
    const Tensor4 a = j > 0 ? proj_out(j - 1) : trunk_out();
    affine_backward(a, params.at(proj_name(j, "weight")), gz, grad_of(proj_name(j, "weight")),
                    grad_of(proj_name(j, "bias")), &dx);
    g = std::move(dx);
  }

  for (int b = config.num_fno - 1; b >= 0; --b) {
    const Tensor4& zb = cache.block_pre[static_cast<std::size_t>(b)];
    Tensor4 gz(zb.shape());
    activation_backward(Activation::kGelu, zb.values(), g.values(), gz.values(), 0.0);
    const Tensor4 a = b > 0 ? block_out(b - 1) : lift_out();
    const Param& r = params.at(block_name(b, "spectral"));
    Param& dr = grad_of(block_name(b, "spectral"));
    Tensor4 g_spec = spectral_conv_backward(*cache.basis, cache.spectral[static_cast<std::size_t>(b)],
                                            r.complex_data(), latent, gz, dr.complex_data());
    affine_backward(a, params.at(block_name(b, "weight")), gz, grad_of(block_name(b, "weight")),
                    grad_of(block_name(b, "bias")), &dx);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.values()[i] += g_spec.values()[i];
    g = std::move(dx);
  }

  Tensor4 gz(cache.lift_pre.shape());
  const double dslope = activation_backward(config.lift_act, cache.lift_pre.values(), g.values(), gz.values(),
                                            slope_of(params, "lift.prelu"));
  if (config.lift_act == Activation::kPrelu) grad_of("lift.prelu").values[0] += dslope;
  affine_backward(cache.lift_in, params.at("lift.weight"), gz, grad_of("lift.weight"), grad_of("lift.bias"),
                  nullptr);
}

ParamSet backward(const ForwardCache& cache, const Tensor4& grad_output) {
  if (!cache.params) throw std::logic_error("backward: empty forward cache");
  ParamSet grads = cache.params->zeros_like();
  backward_accumulate(cache, grad_output, grads);
  return grads;
}

}  // namespace oceanbo::fno
