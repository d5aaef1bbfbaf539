#include "oceanbo/exec/workers.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <sys/prctl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "oceanbo/common/error.hpp"

namespace oceanbo::exec {

hpo::TrialRecord failed_record(const Job& job, const std::string& reason) {
  hpo::TrialRecord r;
  r.trial_id = job.trial_id;
  r.config = job.config;
  r.seed = job.seed;
  r.failure = reason;
  r.submit_time = job.submit_time;
  r.start_time = job.submit_time;
  r.finish_time = hpo::now_seconds();
  return r;
}

hpo::TrialRecord run_job(const Evaluator& evaluator, const Job& job) {
  const double start = hpo::now_seconds();
  hpo::TrialRecord r;
  try {
    r = evaluator(job);
  } catch (const std::exception& e) {
    r = failed_record(job, std::string("error: ") + e.what());
  }
  r.trial_id = job.trial_id;
  r.config = job.config;
  r.seed = job.seed;
  r.submit_time = job.submit_time;
  r.start_time = start;
  r.finish_time = hpo::now_seconds();
  if (r.wall_seconds == 0.0) r.wall_seconds = r.finish_time - start;
  return r;
}

namespace {

[[noreturn]] void child_main(int in_fd, int out_fd, const Evaluator& evaluator) {
  try {
    while (auto msg = read_message(in_fd)) {
      const Job job = job_from_json(*msg);
      Result res{job.trial_id, run_job(evaluator, job)};
      write_message(out_fd, to_json(res));
    }
  } catch (...) {
    ::_exit(3);
  }
  ::_exit(0);
}

}  // namespace

ProcessPool::ProcessPool(int workers, Evaluator evaluator) : evaluator_(std::move(evaluator)) {
  if (workers < 1) throw ConfigError("worker count must be >= 1");
  // A worker that exits mid-write must not kill the manager.
  std::signal(SIGPIPE, SIG_IGN);
  slots_.resize(static_cast<std::size_t>(workers));
  for (auto& s : slots_) spawn(s);
}

ProcessPool::~ProcessPool() {
  for (auto& s : slots_) {
    if (s.to_child >= 0) ::close(s.to_child);
  }
  for (auto& s : slots_) {
    if (s.pid > 0) {
      if (s.job) ::kill(s.pid, SIGKILL);
      int status = 0;
      ::waitpid(s.pid, &status, 0);
    }
    if (s.from_child >= 0) ::close(s.from_child);
  }
}

void ProcessPool::spawn(Slot& slot) {
  int down[2], up[2];
  if (::pipe2(down, O_CLOEXEC) != 0 || ::pipe2(up, O_CLOEXEC) != 0) {
    throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::prctl(PR_SET_PDEATHSIG, SIGKILL);
    ::close(down[1]);
    ::close(up[0]);
    for (const auto& other : slots_) {
      if (other.to_child >= 0) ::close(other.to_child);
      if (other.from_child >= 0) ::close(other.from_child);
    }
    child_main(down[0], up[1], evaluator_);
  }
  ::close(down[0]);
  ::close(up[1]);
  slot.pid = pid;
  slot.to_child = down[1];
  slot.from_child = up[0];
  slot.job.reset();
}

void ProcessPool::reap(Slot& slot, std::string& reason) {
  if (slot.to_child >= 0) ::close(slot.to_child);
  if (slot.from_child >= 0) ::close(slot.from_child);
  slot.to_child = slot.from_child = -1;
  int status = 0;
  if (slot.pid > 0 && ::waitpid(slot.pid, &status, 0) == slot.pid) {
    if (WIFSIGNALED(status)) {
      reason = "worker_died: signal " + std::to_string(WTERMSIG(status));
    } else if (WIFEXITED(status)) {
      reason = "worker_died: exit " + std::to_string(WEXITSTATUS(status));
    }
  }
  slot.pid = -1;
}

void ProcessPool::submit(int worker, const Job& job) {
  auto& s = slots_.at(static_cast<std::size_t>(worker));
  if (s.job) throw std::logic_error("submit to a busy worker");
  s.job = job;
  try {
    write_message(s.to_child, to_json(job));
  } catch (const std::exception&) {
    // The death is reported by the next wait_any().
  }
}

int ProcessPool::busy() const {
  int n = 0;
  for (const auto& s : slots_) n += s.job ? 1 : 0;
  return n;
}

std::pair<int, Result> ProcessPool::wait_any() {
  if (busy() == 0) throw std::logic_error("wait_any with no job in flight");
  while (true) {
    std::vector<pollfd> fds;
    std::vector<int> owners;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (!slots_[i].job) continue;
      fds.push_back({slots_[i].from_child, POLLIN, 0});
      owners.push_back(static_cast<int>(i));
    }
    const int rc = ::poll(fds.data(), fds.size(), -1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("poll: ") + std::strerror(errno));
    }
    for (std::size_t k = 0; k < fds.size(); ++k) {
      if (fds[k].revents == 0) continue;
      const int w = owners[k];
      auto& s = slots_[static_cast<std::size_t>(w)];
      const Job job = *s.job;
      std::optional<nlohmann::json> msg;
      try {
        msg = read_message(s.from_child);
      } catch (const std::exception&) {
        msg.reset();
      }
      if (msg) {
        s.job.reset();
        Result r = result_from_json(*msg);
        if (r.trial_id != job.trial_id) throw FormatError("worker answered the wrong trial");
        return {w, std::move(r)};
      }
      std::string reason = "worker_died";
      reap(s, reason);
      spawn(s);
      return {w, Result{job.trial_id, failed_record(job, reason)}};
    }
  }
}

ThreadPool::ThreadPool(int workers, Evaluator evaluator) : evaluator_(std::move(evaluator)) {
  if (workers < 1) throw ConfigError("worker count must be >= 1");
  jobs_.resize(static_cast<std::size_t>(workers));
  running_.assign(static_cast<std::size_t>(workers), false);
  for (int w = 0; w < workers; ++w) threads_.emplace_back([this, w] { loop(w); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::loop(int w) {
  const auto i = static_cast<std::size_t>(w);
  while (true) {
    Job job;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [&] { return stop_ || (jobs_[i] && !running_[i]); });
      if (stop_) return;
      running_[i] = true;
      job = *jobs_[i];
    }
    Result r{job.trial_id, run_job(evaluator_, job)};
    {
      std::lock_guard<std::mutex> lock(mu_);
      done_.emplace_back(w, std::move(r));
    }
    cv_.notify_all();
  }
}

void ThreadPool::submit(int worker, const Job& job) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto& slot = jobs_.at(static_cast<std::size_t>(worker));
    if (slot) throw std::logic_error("submit to a busy worker");
    slot = job;
  }
  cv_.notify_all();
}

int ThreadPool::busy() const {
  std::lock_guard<std::mutex> lock(mu_);
  int n = 0;
  for (const auto& j : jobs_) n += j ? 1 : 0;
  return n;
}

std::pair<int, Result> ThreadPool::wait_any() {
  std::unique_lock<std::mutex> lock(mu_);
  bool any = false;
  for (const auto& j : jobs_) any = any || j.has_value();
  if (!any) throw std::logic_error("wait_any with no job in flight");
  cv_.wait(lock, [&] { return !done_.empty(); });
  auto out = std::move(done_.front());
  done_.pop_front();
  const auto i = static_cast<std::size_t>(out.first);
  jobs_[i].reset();
  running_[i] = false;
  return out;
}

}  // namespace oceanbo::exec
