#include "oceanbo/exec/results_log.hpp"

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <fcntl.h>
#include <unistd.h>

#include "oceanbo/common/error.hpp"

namespace oceanbo::exec {

namespace {

// Complete lines of a file and the length of the trailing partial line.
std::vector<std::string> complete_lines(const std::string& path, std::size_t& partial, std::size_t& complete_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (true) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos) break;
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  complete_bytes = start;
  partial = text.size() - start;
  return lines;
}

void truncate_to(const std::string& path, std::size_t bytes) {
  std::filesystem::resize_file(path, bytes);
}

}  // namespace

nlohmann::json to_json(const LogHeader& h) {
  return {{"type", "header"},
          {"space", hpo::to_json(h.space)},
          {"settings", hpo::to_json(h.settings)},
          {"seed", h.seed},
          {"budget", h.budget},
          {"workers", h.workers},
          {"job", h.job_params},
          {"space_hash", h.space_hash},
          {"code_version", h.code_version}};
}

LogHeader log_header_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "header") throw FormatError("results log does not start with a header line");
  LogHeader h;
  h.space = hpo::space_from_json(j.at("space"));
  h.settings = hpo::optimizer_settings_from_json(j.at("settings"));
  h.seed = j.at("seed").get<std::uint64_t>();
  h.budget = j.at("budget").get<int>();
  h.workers = j.at("workers").get<int>();
  h.job_params = j.value("job", nlohmann::json::object());
  h.space_hash = j.at("space_hash").get<std::string>();
  h.code_version = j.value("code_version", "");
  if (h.space_hash != h.space.hash()) throw FormatError("results log header: space hash does not match its space");
  return h;
}

nlohmann::json to_json(const PendingEntry& e) {
  return {{"trial_id", e.trial_id}, {"config", hpo::to_json(e.config)}, {"seed", e.seed}, {"ask_counter", e.ask_counter}};
}

PendingEntry pending_from_json(const nlohmann::json& j) {
  PendingEntry e;
  e.trial_id = j.at("trial_id").get<std::int64_t>();
  e.config = hpo::config_from_json(j.at("config"));
  e.seed = j.at("seed").get<std::uint64_t>();
  e.ask_counter = j.value("ask_counter", std::uint64_t{0});
  return e;
}

std::string pending_path(const std::string& log_path) { return log_path + ".pending"; }

LineWriter::LineWriter(const std::string& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw FormatError("cannot open '" + path + "' for append: " + std::strerror(errno));
}

LineWriter::~LineWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void LineWriter::append(const nlohmann::json& line) {
  const std::string text = line.dump() + "\n";
  const ssize_t w = ::write(fd_, text.data(), text.size());
  if (w != static_cast<ssize_t>(text.size())) {
    throw FormatError("short append to '" + path_ + "'");
  }
}

void create_log(const std::string& path, const LogHeader& header) {
  std::error_code ec;
  if (std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0) {
    throw ConfigError("results log '" + path + "' already exists; resume it or choose another output");
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::filesystem::remove(pending_path(path), ec);
  LineWriter w(path);
  w.append(to_json(header));
}

LogContents read_log(const std::string& path, bool repair) {
  std::size_t partial = 0, complete = 0;
  const auto lines = complete_lines(path, partial, complete);
  if (lines.empty()) throw FormatError("results log '" + path + "' has no header");
  LogContents out;
  try {
    out.header = log_header_from_json(nlohmann::json::parse(lines.front()));
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto j = nlohmann::json::parse(lines[i]);
      if (j.value("type", "") != "trial") continue;
      out.trials.push_back(hpo::trial_from_json(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("results log '" + path + "': " + e.what());
  }
  out.dropped_bytes = partial;
  if (repair && partial > 0) truncate_to(path, complete);
  return out;
}

std::vector<PendingEntry> read_pending(const std::string& path, bool repair) {
  std::vector<PendingEntry> out;
  if (!std::filesystem::exists(path)) return out;
  std::size_t partial = 0, complete = 0;
  const auto lines = complete_lines(path, partial, complete);
  try {
    for (const auto& l : lines) {
      if (!l.empty()) out.push_back(pending_from_json(nlohmann::json::parse(l)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("pending journal '" + path + "': " + e.what());
  }
  if (repair && partial > 0) truncate_to(path, complete);
  return out;
}

}  // namespace oceanbo::exec
