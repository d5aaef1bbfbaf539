#include "oceanbo/exec/wire.hpp"

#include <cerrno>
#include <cstring>

#include <unistd.h>

#include "oceanbo/common/error.hpp"

namespace oceanbo::exec {

namespace {

constexpr std::uint32_t kMaxFrame = 64u << 20;

void write_all(int fd, const char* p, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::write(fd, p, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("pipe write failed: ") + std::strerror(errno));
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Bytes read before end of stream.
std::size_t read_all(int fd, char* p, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::read(fd, p + got, n - got);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("pipe read failed: ") + std::strerror(errno));
    }
    if (r == 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

}  // namespace

std::string encode_frame(const nlohmann::json& message) {
  const std::string body = message.dump();
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out(4, '\0');
  for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = static_cast<char>((n >> (8 * i)) & 0xff);
  return out + body;
}

void write_message(int fd, const nlohmann::json& message) {
  const std::string frame = encode_frame(message);
  write_all(fd, frame.data(), frame.size());
}

std::optional<nlohmann::json> read_message(int fd) {
  unsigned char len[4];
  const std::size_t got = read_all(fd, reinterpret_cast<char*>(len), 4);
  if (got == 0) return std::nullopt;
  if (got < 4) throw FormatError("truncated message length");
  const std::uint32_t n = len[0] | (len[1] << 8) | (len[2] << 16) | (static_cast<std::uint32_t>(len[3]) << 24);
  if (n > kMaxFrame) throw FormatError("message of " + std::to_string(n) + " bytes exceeds the frame limit");
  std::string body(n, '\0');
  if (read_all(fd, body.data(), n) != n) throw FormatError("truncated message body");
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad message: ") + e.what());
  }
}

nlohmann::json to_json(const Job& job) {
  return {{"type", "job"},
          {"trial_id", job.trial_id},
          {"config", hpo::to_json(job.config)},
          {"seed", job.seed},
          {"params", job.params},
          {"submit_time", job.submit_time}};
}

Job job_from_json(const nlohmann::json& j) {
  Job job;
  job.trial_id = j.at("trial_id").get<std::int64_t>();
  job.config = hpo::config_from_json(j.at("config"));
  job.seed = j.at("seed").get<std::uint64_t>();
  job.params = j.value("params", nlohmann::json::object());
  job.submit_time = j.value("submit_time", 0.0);
  return job;
}

nlohmann::json to_json(const Result& result) {
  return {{"type", "result"}, {"trial_id", result.trial_id}, {"record", hpo::to_json(result.record)}};
}

Result result_from_json(const nlohmann::json& j) {
  Result r;
  r.trial_id = j.at("trial_id").get<std::int64_t>();
  r.record = hpo::trial_from_json(j.at("record"));
  return r;
}

}  // namespace oceanbo::exec
