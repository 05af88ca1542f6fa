// armlab: run bandit experiments, analyze run logs, probe per-round
// decisions, and emit reports.
//
//   armlab run --config exp.json [--config more.json] [--resume run.jsonl]
//   armlab analyze --log run.jsonl [--log ...] --out summary.csv [--md summary.md]
//   armlab probe --source unif|ucb|ts --t 30 --n 50 --agent ucb
//   armlab report --in summary.csv|run.jsonl [--in ...] --out-dir out [--scatter|--table|--detail]

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "armlab/analysis.hpp"
#include "armlab/openai_client.hpp"
#include "armlab/orchestrator.hpp"
#include "armlab/report.hpp"

namespace fs = std::filesystem;
using namespace armlab;

namespace {

int cmd_run(const std::vector<std::string>& configs, const std::string& resume_log,
            std::optional<std::size_t> threads) {
  if (!resume_log.empty()) {
    if (configs.size() > 1) throw ConfigError("--resume takes at most one --config");
    std::optional<ExperimentSpec> spec;
    if (!configs.empty()) spec = load_spec(configs.front());
    if (spec && threads) spec->threads = *threads;
    const RunLog out = resume(resume_log, spec, make_network_client);
    std::printf("%s: complete=%zu failed=%zu incomplete=%zu%s\n", out.log.c_str(), out.complete,
                out.failed, out.incomplete, out.aborted ? " (aborted)" : "");
    return out.aborted ? 3 : 0;
  }
  if (configs.empty()) throw ConfigError("run needs --config");
  int rc = 0;
  for (const auto& path : configs) {
    ExperimentSpec spec = load_spec(path);
    if (threads) spec.threads = *threads;
    if (const auto* llm = std::get_if<LlmAgentSpec>(&spec.agent)) {
      if (auto warn = check_model_support(llm->config, llm->model.model)) {
        std::fprintf(stderr, "warning: %s\n", warn->c_str());
      }
    }
    const RunLog out = run_experiment(spec, make_network_client);
    std::printf("%s: complete=%zu failed=%zu incomplete=%zu%s\n", out.log.c_str(), out.complete,
                out.failed, out.incomplete, out.aborted ? " (aborted)" : "");
    if (out.aborted) rc = 3;
  }
  return rc;
}

int cmd_analyze(const std::vector<std::string>& logs, const std::string& out_csv,
                const std::string& out_md) {
  std::vector<SummaryRow> rows;
  for (const auto& log : logs) rows.push_back(summary_row(make_report(load_run(log))));
  const std::string csv = analysis_table(rows).to_csv();
  if (out_csv.empty() || out_csv == "-") {
    std::cout << csv;
  } else {
    if (fs::path(out_csv).has_parent_path()) fs::create_directories(fs::path(out_csv).parent_path());
    write_file_atomic(out_csv, csv);
  }
  if (!out_md.empty()) write_file_atomic(out_md, summary_markdown(rows));
  return 0;
}

ProbeAgent probe_agent_from(const std::string& text) {
  Json j;
  if (text.ends_with(".json")) {
    j = Json::parse(read_file(text));
  } else if (text.rfind("eps_greedy=", 0) == 0) {
    j = {{"type", "eps_greedy"}, {"epsilon", parse_number(text.substr(11))}};
  } else if (text.rfind("mock:", 0) == 0) {
    // mock:<script>:<code>
    const auto sep = text.rfind(':');
    j = {{"type", "llm"},
         {"config", text.substr(sep + 1)},
         {"model", {{"provider", "mock"}, {"script", text.substr(5, sep - 5)}}}};
  } else {
    j = {{"type", text}};
  }
  const AgentSpec agent = agent_from_json(j);
  if (const auto* b = std::get_if<BaselineParams>(&agent)) return baseline_probe_agent(*b);
  const auto& llm = std::get<LlmAgentSpec>(agent);
  auto client = std::make_shared<GuardedClient>(make_network_client(llm.model), llm.model);
  return llm_probe_agent(llm.config, client);
}

int cmd_probe(const std::string& source, std::size_t length, std::size_t count,
              const std::string& agent, const std::string& instance, std::size_t horizon,
              std::uint64_t seed) {
  const HistorySource src = parse_history_source(source);
  const MabInstance inst = make_instance(parse_instance_kind(instance), horizon);
  const auto histories = generate_histories(src, length, count, inst, seed);
  const ProbeResult res = probe_per_round(probe_agent_from(agent), histories, src, seed);
  std::printf("agent,source,t,n,failures,greedy_frac,least_frac\n%s,%s,%zu,%zu,%zu,%s,%s\n",
              agent.c_str(), to_string(res.source), res.length, res.count, res.failures,
              format_number(res.greedy_frac).c_str(), format_number(res.least_frac).c_str());
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir, bool scatter,
               bool table, bool detail) {
  if (!scatter && !table && !detail) scatter = table = detail = true;
  std::vector<SummaryRow> rows;
  std::vector<LabelledRun> runs;
  for (const auto& in : inputs) {
    if (in.ends_with(".csv")) {
      for (auto& r : summary_rows(Table::from_csv(read_file(in)))) rows.push_back(std::move(r));
    } else {
      LoadedRun run = load_run(in);
      rows.push_back(summary_row(make_report(run)));
      runs.push_back({run.agent, std::move(run.trajectories)});
    }
  }
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  if (scatter) {
    const Table t = scatter_table(rows);
    write_artifact(dir, {"scatter", t, scatter_svg(t)});
  }
  if (table) {
    write_file_atomic(dir / "summary.csv", summary_table(rows).to_csv());
    write_file_atomic(dir / "summary.md", summary_markdown(rows));
  }
  if (detail) {
    if (runs.empty()) {
      std::fprintf(stderr, "note: --detail needs run logs; skipped for CSV inputs\n");
    } else {
      for (const auto& a : detail_view(runs)) write_artifact(dir / "detail", a);
    }
  }
  std::printf("wrote %s\n", dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandit exploration harness for LLM and baseline agents"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run experiments from config files");
  std::vector<std::string> configs;
  std::string resume_log;
  std::optional<std::size_t> threads;
  run->add_option("--config", configs, "Experiment config (JSON); repeatable");
  run->add_option("--resume", resume_log, "Resume the run log at this path");
  run->add_option("--threads", threads, "Worker threads (overrides config)");

  auto* analyze = app.add_subcommand("analyze", "Compute surrogate statistics from run logs");
  std::vector<std::string> logs;
  std::string out_csv = "-", out_md;
  analyze->add_option("--log", logs, "Run log (JSONL); repeatable")->required();
  analyze->add_option("--out", out_csv, "Output CSV path ('-' for stdout)");
  analyze->add_option("--md", out_md, "Also write a markdown table here");

  auto* probe = app.add_subcommand("probe", "One-step decision probe on generated histories");
  std::string source = "unif", agent = "ucb", instance = "hard";
  std::size_t length = 30, count = 50, horizon = 100;
  std::uint64_t seed = 0;
  probe->add_option("--source", source, "History source: unif, ucb or ts");
  probe->add_option("--t", length, "History length");
  probe->add_option("--n", count, "Number of histories");
  probe->add_option("--agent", agent,
                    "ucb | ts | greedy | eps_greedy=<eps> | mock:<script>:<code> | agent.json");
  probe->add_option("--instance", instance, "hard or easy");
  probe->add_option("--horizon", horizon, "Horizon stated in LLM prompts");
  probe->add_option("--seed", seed, "Master seed");

  auto* report = app.add_subcommand("report", "Write scatter, summary table and detail charts");
  std::vector<std::string> inputs;
  std::string out_dir = "report";
  bool scatter = false, table = false, detail = false;
  report->add_option("--in", inputs, "Analysis CSV or run log; repeatable")->required();
  report->add_option("--out-dir", out_dir, "Output directory");
  report->add_flag("--scatter", scatter, "Scatter plot only");
  report->add_flag("--table", table, "Summary table only");
  report->add_flag("--detail", detail, "Detail views only");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(configs, resume_log, threads);
    if (*analyze) return cmd_analyze(logs, out_csv, out_md);
    if (*probe) return cmd_probe(source, length, count, agent, instance, horizon, seed);
    if (*report) return cmd_report(inputs, out_dir, scatter, table, detail);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
