#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <thread>

#include "armlab/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace armlab;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("armlab_orch_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

ExperimentSpec baseline_spec(const fs::path& out, BaselineType type = BaselineType::kUcb,
                             std::size_t replicates = 40) {
  ExperimentSpec s;
  s.name = "orch";
  s.horizon = 30;
  s.replicates = replicates;
  s.master_seed = 17;
  s.agent = BaselineParams{.type = type};
  s.output = out;
  s.timestamps = false;
  return s;
}

ExperimentSpec mock_spec(const fs::path& out, const std::string& script, const std::string& code) {
  ExperimentSpec s = baseline_spec(out);
  LlmAgentSpec llm;
  llm.config = parse_config_code(code);
  llm.model.provider = "mock";
  llm.model.script = script;
  llm.model.model = "mock-" + script;
  llm.model.temperature = llm.config.temperature();
  s.agent = llm;
  s.replicates = 6;
  s.horizon = 12;
  return s;
}

std::string strip_timestamps(const std::string& log) {
  std::string out;
  std::istringstream in(log);
  for (std::string line; std::getline(in, line);) {
    auto j = Json::parse(line);
    j.erase("ts");
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace

TEST(Spec, JsonRoundTripAndValidation) {
  ExperimentSpec s = mock_spec("x.jsonl", "greedy", "BSSCD");
  s.token_budget = 5000;
  const ExperimentSpec back = spec_from_json(spec_to_json(s));
  EXPECT_EQ(spec_to_json(back), spec_to_json(s));
  EXPECT_EQ(s.experiment_id(), "orch/mock-greedy:BSSCD");

  Json bad = spec_to_json(s);
  bad["agent"]["model"]["temperature"] = 1.0;
  EXPECT_THROW(spec_from_json(bad), ConfigError);
  Json eps = spec_to_json(baseline_spec("y.jsonl"));
  eps["agent"] = {{"type", "eps_greedy"}, {"epsilon", 2.0}};
  EXPECT_THROW(spec_from_json(eps), ConfigError);
  Json custom = spec_to_json(baseline_spec("z.jsonl"));
  custom["instance"] = {{"arms", 3}, {"delta", 0.3}};
  EXPECT_EQ(spec_from_json(custom).base_instance().num_arms(), 3u);
  EXPECT_THROW(spec_from_json(Json{{"instance", "hard"}}), ConfigError);
}

TEST(Run, IdenticalSpecsGiveIdenticalLogs) {
  TempDir dir;
  for (auto type : {BaselineType::kUcb, BaselineType::kThompson, BaselineType::kGreedy}) {
    run_experiment(baseline_spec(dir / "a.jsonl", type));
    run_experiment(baseline_spec(dir / "b.jsonl", type));
    EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
  }
  auto with_ts = baseline_spec(dir / "c.jsonl");
  with_ts.timestamps = true;
  run_experiment(with_ts);
  run_experiment(baseline_spec(dir / "d.jsonl"));
  EXPECT_EQ(strip_timestamps(read_file(dir / "c.jsonl")), read_file(dir / "d.jsonl"));
}

TEST(Run, ParallelMatchesSerial) {
  TempDir dir;
  auto serial = baseline_spec(dir / "serial.jsonl", BaselineType::kThompson);
  auto parallel = baseline_spec(dir / "parallel.jsonl", BaselineType::kThompson);
  parallel.threads = 4;
  run_experiment(serial);
  run_experiment(parallel);
  EXPECT_EQ(read_file(dir / "serial.jsonl"), read_file(dir / "parallel.jsonl"));
}

TEST(Run, SeedAndExperimentChangeTheStreams) {
  TempDir dir;
  auto a = baseline_spec(dir / "a.jsonl");
  auto b = baseline_spec(dir / "b.jsonl");
  b.master_seed = 18;
  auto c = baseline_spec(dir / "c.jsonl");
  c.name = "other";
  run_experiment(a);
  run_experiment(b);
  run_experiment(c);
  EXPECT_NE(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
  const auto ra = load_run(dir / "a.jsonl"), rc = load_run(dir / "c.jsonl");
  bool differs = false;
  for (std::size_t r = 0; r < ra.trajectories.size(); ++r) {
    differs |= ra.trajectories[r].instance.permutation != rc.trajectories[r].instance.permutation;
  }
  EXPECT_TRUE(differs);
}

TEST(Run, LogAndManifestContents) {
  TempDir dir;
  const auto out = run_experiment(baseline_spec(dir / "run.jsonl", BaselineType::kGreedy, 5));
  EXPECT_EQ(out.complete, 5u);
  EXPECT_FALSE(out.aborted);
  const Json manifest = Json::parse(read_file(manifest_path(dir / "run.jsonl")));
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(manifest["replicates"].size(), 5u);
  EXPECT_EQ(manifest["code_version"], kCodeVersion);
  const auto records = read_log_records(dir / "run.jsonl");
  ASSERT_EQ(records.size(), 5u * 32u);
  EXPECT_EQ(records[0]["type"], "replicate_start");
  EXPECT_EQ(records[1]["type"], "round");
  EXPECT_EQ(records[1]["experiment_id"], "orch/greedy");
  EXPECT_EQ(records[31]["type"], "replicate_end");
  const auto run = load_run(dir / "run.jsonl");
  ASSERT_EQ(run.trajectories.size(), 5u);
  EXPECT_EQ(run.agent, "greedy");
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_TRUE(run.trajectories[r].complete());
    EXPECT_EQ(run.trajectories[r].rounds.size(), 30u);
    EXPECT_EQ(run.trajectories[r].instance.permutation,
              manifest["replicates"][r]["permutation"].get<std::vector<ArmIndex>>());
  }
}

TEST(Run, MockRunsLogEveryExchange) {
  TempDir dir;
  const auto out = run_experiment(mock_spec(dir / "m.jsonl", "greedy", "BSSCD"));
  EXPECT_EQ(out.complete, 6u);
  std::size_t exchanges = 0;
  for (const auto& r : read_log_records(dir / "m.jsonl")) {
    if (r["type"] == "exchange") {
      ++exchanges;
      EXPECT_FALSE(r["system"].get<std::string>().empty());
      EXPECT_NE(r["response"].get<std::string>().find("<Answer>"), std::string::npos);
    }
    if (r["type"] == "round") {
      EXPECT_TRUE(r.contains("raw_response"));
    }
  }
  EXPECT_EQ(exchanges, 6u * 12u);
}

TEST(Run, MalformedMockFailsReplicatesAfterRetries) {
  TempDir dir;
  const auto out = run_experiment(mock_spec(dir / "bad.jsonl", "malformed", "BNRN0"));
  EXPECT_EQ(out.failed, 6u);
  EXPECT_EQ(out.complete, 0u);
  const auto run = load_run(dir / "bad.jsonl");
  for (const auto& tr : run.trajectories) {
    EXPECT_EQ(tr.status, ReplicateStatus::kFailed);
    EXPECT_EQ(tr.failure, "parse_retries_exhausted");
    EXPECT_EQ(tr.failure_retries.size(), 3u);
    EXPECT_TRUE(tr.rounds.empty());
  }
}

TEST(Run, BudgetStopsTheRun) {
  TempDir dir;
  auto spec = mock_spec(dir / "budget.jsonl", "uniform", "BNRN0");
  spec.token_budget = 3000;
  const auto out = run_experiment(spec);
  EXPECT_TRUE(out.aborted);
  EXPECT_LT(out.complete, spec.replicates);
  ASSERT_GE(out.failed, 1u);
  bool budget_failure = false;
  for (const auto& tr : load_run(spec.output).trajectories) {
    budget_failure |= tr.failure.rfind("budget_exceeded", 0) == 0;
  }
  EXPECT_TRUE(budget_failure);
}

TEST(Resume, TruncatedLogResumesToIdenticalBytes) {
  TempDir dir;
  const auto ref_path = dir / "ref.jsonl";
  run_experiment(baseline_spec(ref_path, BaselineType::kThompson));
  const std::string reference = read_file(ref_path);
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 12; ++trial) {
    const auto path = dir / ("cut" + std::to_string(trial) + ".jsonl");
    auto spec = baseline_spec(path, BaselineType::kThompson);
    spec.threads = 1 + trial % 3;
    run_experiment(spec);
    const std::size_t cut = trial == 0 ? 0 : gen() % reference.size();
    write_file_atomic(path, reference.substr(0, cut));
    const auto out = resume(path, spec);
    EXPECT_EQ(out.complete, spec.replicates);
    EXPECT_EQ(read_file(path), reference) << "cut at byte " << cut;
  }
}

TEST(Resume, StoppedRunResumesToIdenticalBytes) {
  TempDir dir;
  run_experiment(baseline_spec(dir / "ref.jsonl", BaselineType::kUcb, 200));
  auto spec = baseline_spec(dir / "stop.jsonl", BaselineType::kUcb, 200);
  spec.threads = 2;
  std::atomic<bool> stop{false};
  Experiment e(spec);
  std::thread killer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    stop = true;
  });
  const auto partial = e.run(&stop);
  killer.join();
  if (partial.aborted) {
    EXPECT_LT(partial.complete, 200u);
    EXPECT_EQ(Json::parse(read_file(manifest_path(spec.output)))["status"], "running");
  }
  resume(spec.output);
  EXPECT_EQ(read_file(dir / "stop.jsonl"), read_file(dir / "ref.jsonl"));
}

TEST(Resume, CompleteLogIsANoOp) {
  TempDir dir;
  const auto spec = baseline_spec(dir / "done.jsonl");
  run_experiment(spec);
  const auto before = read_file(spec.output);
  const auto mtime = fs::last_write_time(spec.output);
  const auto out = resume(spec.output, spec);
  EXPECT_EQ(out.complete, spec.replicates);
  EXPECT_EQ(read_file(spec.output), before);
  EXPECT_EQ(fs::last_write_time(spec.output), mtime);
}

TEST(Resume, RefusesMismatchedSpec) {
  TempDir dir;
  const auto spec = baseline_spec(dir / "mm.jsonl");
  run_experiment(spec);
  auto other = spec;
  other.master_seed = 99;
  EXPECT_THROW(resume(spec.output, other), IntegrityError);
  auto moved = spec;
  moved.output = dir / "elsewhere.jsonl";
  EXPECT_THROW(resume(spec.output, moved), IntegrityError);
  EXPECT_THROW(resume(dir / "missing.jsonl"), IntegrityError);
}

TEST(Resume, RestartedLlmReplicatesAreFlagged) {
  TempDir dir;
  auto spec = mock_spec(dir / "llm.jsonl", "greedy", "BNRN0");
  run_experiment(spec);
  const std::string full = read_file(spec.output);
  // Cut inside replicate 2: keep its start and a few rounds.
  std::size_t pos = 0, lines = 0;
  const std::size_t per_rep = 1 + 12 * 2 + 1;
  while (lines < 2 * per_rep + 6) {
    pos = full.find('\n', pos) + 1;
    ++lines;
  }
  write_file_atomic(spec.output, full.substr(0, pos));
  resume(spec.output);
  const auto run = load_run(spec.output);
  for (const auto& tr : run.trajectories) {
    EXPECT_TRUE(tr.complete());
    EXPECT_EQ(tr.restarted, tr.replicate == 2) << tr.replicate;
  }
}

TEST(Load, CorruptLinesAreRejectedButTornTailIsIgnored) {
  TempDir dir;
  const auto spec = baseline_spec(dir / "c.jsonl", BaselineType::kGreedy, 3);
  run_experiment(spec);
  const std::string full = read_file(spec.output);
  write_file_atomic(spec.output, full + "{\"type\":\"rou");
  EXPECT_EQ(load_run(spec.output).trajectories.size(), 3u);
  write_file_atomic(spec.output, "not json\n" + full);
  EXPECT_THROW(load_run(spec.output), IntegrityError);
}
