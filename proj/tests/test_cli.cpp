#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "oceanbo/cli/commands.hpp"
#include "oceanbo/cli/csv.hpp"
#include "oceanbo/common/error.hpp"
#include "oceanbo/eval/metrics.hpp"

using namespace oceanbo;
using namespace oceanbo::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("oceanbo_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "oceanbo");
  return run_cli(args);
}

}  // namespace

TEST_CASE("csv quoting round trips") {
  const std::vector<std::string> row{"plain", "with,comma", "say \"hi\"", "two\r\nlines", ""};
  const std::string text = csv_record({"a", "b", "c", "d", "e"}) + csv_record(row);
  const auto parsed = parse_csv(text);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1] == row);
}

TEST_CASE("strict csv reader rejects malformed input") {
  CHECK_THROWS_AS(parse_csv("a,b\r\n1\r\n"), FormatError);
  CHECK_THROWS_AS(parse_csv("a\r\n\"x\r\n"), FormatError);
  CHECK_THROWS_AS(parse_csv("a\r\nx\"y\r\n"), FormatError);
  CHECK_THROWS_AS(parse_csv("a\nb\n"), FormatError);
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("gen-data writes the ensemble and refuses a single frame") {
  const auto dir = scratch("gen");
  CHECK(run({"gen-data", "--sims", "3", "--days", "3", "--grid", "8", "--out", dir.string()}) == kExitOk);
  const auto side = nlohmann::json::parse(slurp(dir / "ensemble.json"));
  CHECK(side.at("shape") == nlohmann::json::array({3, 3, 8, 8, 5}));
  const auto man = nlohmann::json::parse(slurp(dir / "manifest-gen-data.json"));
  CHECK(man.at("outputs").size() == 2);
  CHECK(run({"gen-data", "--days", "1", "--out", dir.string()}) == kExitUsage);
  CHECK(run({"gen-data", "--bogus"}) == kExitUsage);
}

TEST_CASE("missing data and bad configs are usage errors") {
  const auto dir = scratch("train");
  CHECK(run({"baseline", "--data", (dir / "nowhere").string(), "--out", dir.string()}) == kExitUsage);
  CHECK(run({"gen-data", "--sims", "5", "--days", "3", "--grid", "8", "--out", dir.string()}) == kExitOk);
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"num_FNO": 99, "optimizer": "Lion", "colour": 1})";
  CHECK(run({"train", "--data", dir.string(), "--config", (dir / "bad.json").string(), "--out", dir.string()}) ==
        kExitUsage);
}

TEST_CASE("synthetic search, report and a single-trial pareto file") {
  const auto dir = scratch("search");
  CHECK(run({"search", "--evaluator", "synthetic", "--budget", "8", "--workers", "2", "--threads", "--out",
             dir.string()}) == kExitOk);
  const auto log = (dir / "results.jsonl").string();
  CHECK(run({"report", "--log", log, "--out", dir.string()}) == kExitOk);
  const auto pc = parse_csv(slurp(dir / "parallel_coords.csv"));
  CHECK(pc.size() == 9);
  CHECK(pc[0].size() == 2 + 15 + 4);
  const auto sc = parse_csv(slurp(dir / "scatter.csv"));
  REQUIRE(sc.size() == 9);
  std::vector<double> mse;
  for (std::size_t i = 1; i < pc.size(); ++i) mse.push_back(-std::stod(pc[i][17]));
  const auto q = eval::quantile_transform(mse);
  for (std::size_t i = 1; i < sc.size(); ++i) {
    CHECK(std::stod(sc[i][1]) == q[i - 1]);
    CHECK(std::stod(sc[i][3]) == std::stod(sc[i][1]) + std::stod(sc[i][2]));
  }
  const auto best = nlohmann::json::parse(slurp(dir / "best.json"));
  CHECK(best.at("trial_id").is_number_integer());
  CHECK(run({"search", "--evaluator", "synthetic", "--budget", "8", "--workers", "2", "--out", dir.string()}) ==
        kExitUsage);

  const auto one = scratch("one");
  CHECK(run({"search", "--evaluator", "synthetic", "--budget", "1", "--workers", "1", "--threads", "--out",
             one.string()}) == kExitOk);
  const auto pareto = parse_csv(slurp(one / "pareto.csv"));
  REQUIRE(pareto.size() == 2);
  CHECK(pareto[1][0] == "0");
}

TEST_CASE("an all-failed search leaves nothing to retrain and report refuses an empty log") {
  const auto dir = scratch("empty");
  CHECK(run({"search", "--evaluator", "diverge", "--budget", "2", "--workers", "2", "--threads", "--out",
             dir.string()}) == kExitOk);
  const auto best = nlohmann::json::parse(slurp(dir / "best.json"));
  CHECK(best.at("trial_id").is_null());
  const auto data = scratch("empty_data");
  REQUIRE(run({"gen-data", "--sims", "5", "--days", "3", "--grid", "8", "--out", data.string()}) == kExitOk);
  CHECK(run({"train", "--data", data.string(), "--config", (dir / "best.json").string(), "--epochs", "1", "--out",
             (data / "train").string()}) == kExitUsage);
  const auto log = dir / "results.jsonl";
  const auto text = slurp(log);
  std::ofstream(log, std::ios::trunc) << text.substr(0, text.find('\n') + 1);
  CHECK(run({"report", "--log", log.string(), "--out", dir.string()}) == kExitRuntime);
}
