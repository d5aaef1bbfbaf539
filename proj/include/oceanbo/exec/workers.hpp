#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include <sys/types.h>

#include "oceanbo/exec/wire.hpp"

namespace oceanbo::exec {

// Runs one job to completion. Exceptions become failed records.
using Evaluator = std::function<hpo::TrialRecord(const Job& job)>;

// Record for a job whose evaluator threw or whose worker vanished.
hpo::TrialRecord failed_record(const Job& job, const std::string& reason);

// Calls the evaluator and fills in the bookkeeping fields of its record.
hpo::TrialRecord run_job(const Evaluator& evaluator, const Job& job);

class WorkerPool {
 public:
  virtual ~WorkerPool() = default;
  virtual int size() const = 0;
  // The worker must be idle.
  virtual void submit(int worker, const Job& job) = 0;
  // Blocks until some busy worker finishes and returns (worker, result).
  // A worker that dies yields a failed "worker_died" result and is replaced.
  virtual std::pair<int, Result> wait_any() = 0;
  virtual int busy() const = 0;
};

// Forked worker processes talking length-prefixed JSON over pipes.
class ProcessPool : public WorkerPool {
 public:
  ProcessPool(int workers, Evaluator evaluator);
  ~ProcessPool() override;

  int size() const override { return static_cast<int>(slots_.size()); }
  void submit(int worker, const Job& job) override;
  std::pair<int, Result> wait_any() override;
  int busy() const override;

  pid_t pid(int worker) const { return slots_[static_cast<std::size_t>(worker)].pid; }

 private:
  struct Slot {
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::optional<Job> job;
  };
  void spawn(Slot& slot);
  void reap(Slot& slot, std::string& reason);

  Evaluator evaluator_;
  std::vector<Slot> slots_;
};

// Worker threads in this process, for tests and small runs.
class ThreadPool : public WorkerPool {
 public:
  ThreadPool(int workers, Evaluator evaluator);
  ~ThreadPool() override;

  int size() const override { return static_cast<int>(jobs_.size()); }
  void submit(int worker, const Job& job) override;
  std::pair<int, Result> wait_any() override;
  int busy() const override;

 private:
  void loop(int worker);

  Evaluator evaluator_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::optional<Job>> jobs_;
  std::vector<bool> running_;
  std::deque<std::pair<int, Result>> done_;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace oceanbo::exec
