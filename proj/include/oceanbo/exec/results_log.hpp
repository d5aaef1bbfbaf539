#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "oceanbo/hpo/optimizer.hpp"
#include "oceanbo/hpo/space.hpp"
#include "oceanbo/hpo/trial.hpp"

namespace oceanbo::exec {

// First line of results.jsonl.
struct LogHeader {
  hpo::SearchSpace space;
  hpo::OptimizerSettings settings;
  std::uint64_t seed = 0;
  int budget = 0;
  int workers = 1;
  nlohmann::json job_params = nlohmann::json::object();
  std::string space_hash;
  std::string code_version;
};

nlohmann::json to_json(const LogHeader& h);
LogHeader log_header_from_json(const nlohmann::json& j);

// One dispatched job, journaled to `<log>.pending` before it is sent so a
// resumed run can re-issue whatever was in flight.
struct PendingEntry {
  std::int64_t trial_id = -1;
  hpo::Configuration config;
  std::uint64_t seed = 0;
  // Optimizer ask counter after the proposal was drawn.
  std::uint64_t ask_counter = 0;
};

nlohmann::json to_json(const PendingEntry& e);
PendingEntry pending_from_json(const nlohmann::json& j);

std::string pending_path(const std::string& log_path);

// Appends whole lines with a single write() on an O_APPEND descriptor.
class LineWriter {
 public:
  explicit LineWriter(const std::string& path);
  ~LineWriter();
  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void append(const nlohmann::json& line);

 private:
  int fd_ = -1;
  std::string path_;
};

// Creates a fresh log holding only the header. Refuses to overwrite a
// non-empty file.
void create_log(const std::string& path, const LogHeader& header);

struct LogContents {
  LogHeader header;
  std::vector<hpo::TrialRecord> trials;
  // Bytes of an unterminated final line that were ignored.
  std::size_t dropped_bytes = 0;
};

// Reads a results log. An unterminated last line (a write cut short) is
// ignored; when `repair` is set it is also truncated away on disk.
LogContents read_log(const std::string& path, bool repair = false);

// Reads the pending journal with the same tolerance; a missing file is empty.
std::vector<PendingEntry> read_pending(const std::string& path, bool repair = false);

}  // namespace oceanbo::exec
