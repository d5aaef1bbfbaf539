#pragma once

#include <string>

#include <json.hpp>

#include "oceanbo/fno/model.hpp"
#include "oceanbo/fno/params.hpp"

namespace oceanbo::fno {

// File layout: the 8 bytes "OBCKPT01", a little-endian u64 header length,
// the JSON header, then every parameter's values as little-endian float64
// in header order.
struct Checkpoint {
  // "fno" for a trained model. "oracle" marks a test checkpoint without
  // parameters whose predictor replays the ground truth.
  std::string kind = "fno";
  FnoConfig config;
  // Free-form: search configuration, seeds, normalization, metrics.
  nlohmann::json meta = nlohmann::json::object();
  ParamSet params;
};

// Written to a temporary file and renamed into place.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
// Throws FormatError on a bad magic, header or payload length.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace oceanbo::fno
