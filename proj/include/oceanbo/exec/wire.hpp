#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "oceanbo/hpo/space.hpp"
#include "oceanbo/hpo/trial.hpp"

namespace oceanbo::exec {

// Messages are a 4-byte little-endian payload length followed by UTF-8 JSON.
std::string encode_frame(const nlohmann::json& message);

// Blocking I/O on a file descriptor. write_message throws on failure;
// read_message returns nullopt on a clean end of stream and throws
// FormatError on a partial frame or bad JSON.
void write_message(int fd, const nlohmann::json& message);
std::optional<nlohmann::json> read_message(int fd);

struct Job {
  std::int64_t trial_id = -1;
  hpo::Configuration config;
  std::uint64_t seed = 0;
  // Evaluator settings shared by every job of a run.
  nlohmann::json params = nlohmann::json::object();
  double submit_time = 0.0;
};

nlohmann::json to_json(const Job& job);
Job job_from_json(const nlohmann::json& j);

struct Result {
  std::int64_t trial_id = -1;
  hpo::TrialRecord record;
};

nlohmann::json to_json(const Result& result);
Result result_from_json(const nlohmann::json& j);

}  // namespace oceanbo::exec
