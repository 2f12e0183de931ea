#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctxroute/config.hpp"
#include "ctxroute/metrics.hpp"
#include "ctxroute/reporting.hpp"
#include "ctxroute/runner.hpp"
#include "ctxroute/sim.hpp"
#include "ctxroute/version.hpp"

namespace {

using namespace ctxroute;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigInvalid("cannot write file: " + path);
  out << text;
}

std::vector<Strategy> parse_strategy_list(const std::string& csv) {
  std::vector<Strategy> out;
  for (const auto& part : split(csv, ',')) {
    auto s = Strategy::parse(trim(part));
    if (!s) throw ConfigInvalid("unparseable strategy: " + part);
    out.push_back(*s);
  }
  return out;
}

struct RunCli {
  std::string config_path;
  std::string tasks;
  std::string output;
  std::string policy_kind;
  std::string static_strategy;
  std::string candidates;
  std::string router;
  long long max_context = 0;
  double trigger_ratio = -1.0;
  long long max_turns = 0;
  int lookahead = -1;
  std::string agent_kind;
  std::string agent_url;
  std::string agent_model;
  std::string script;
  std::string capture;
  std::string summarizer_url, summarizer_model;
  std::string router_url, router_model;
  std::string judge_url, judge_model;
  std::string tools_mode;
  std::string corpus;
  std::string enabled_tools;
  std::string judge_mode;
  double temperature = -1.0;
  int max_output_tokens = 0;
  std::uint64_t seed = 0;
  int parallelism = 0;
  bool deterministic = false;
  long long router_budget = -1;
  std::string counter;
  long long max_tasks = -1;
  bool quiet = false;
};

RunConfig assemble_run_config(const RunCli& cli, const CLI::App& cmd) {
  RunConfig cfg;
  if (!cli.config_path.empty()) cfg = read_json_file(cli.config_path).get<RunConfig>();

  auto passed = [&](const std::string& flag) { return cmd.count(flag) > 0; };

  if (passed("--tasks")) cfg.benchmark_path = cli.tasks;
  if (passed("--output")) cfg.output_dir = cli.output;
  if (passed("--policy")) cfg.policy.kind = cli.policy_kind;
  if (passed("--static-strategy")) {
    auto s = Strategy::parse(cli.static_strategy);
    if (!s) throw ConfigInvalid("unparseable static strategy: " + cli.static_strategy);
    cfg.policy.static_strategy = *s;
  }
  if (passed("--candidates")) cfg.policy.candidates = parse_strategy_list(cli.candidates);
  if (passed("--router")) {
    auto r = RouterPolicy::parse(cli.router);
    if (!r) throw ConfigInvalid("unparseable router policy: " + cli.router);
    cfg.policy.router = *r;
  }
  if (passed("--max-context")) cfg.budget.max_context_tokens = cli.max_context;
  if (passed("--trigger-ratio")) cfg.budget.trigger_ratio = cli.trigger_ratio;
  if (passed("--max-turns")) cfg.budget.max_turns = cli.max_turns;
  if (passed("--lookahead")) {
    cfg.budget.lookahead_depth = cli.lookahead;
    cfg.policy.router.lookahead_depth = cli.lookahead;
  }
  if (passed("--agent-kind")) cfg.agent.kind = cli.agent_kind;
  if (passed("--agent-url")) cfg.agent.base_url = cli.agent_url;
  if (passed("--agent-model")) cfg.agent.model_id = cli.agent_model;
  if (passed("--script")) {
    cfg.agent.kind = "scripted";
    cfg.agent.script_path = cli.script;
  }
  if (passed("--capture")) cfg.agent.capture_path = cli.capture;
  auto role_override = [&](const std::string& url_flag, const std::string& url,
                           const std::string& model, std::optional<BackendSpec>& slot) {
    if (!passed(url_flag)) return;
    BackendSpec spec = slot ? *slot : cfg.agent;
    spec.kind = "http";
    spec.base_url = url;
    if (!model.empty()) spec.model_id = model;
    slot = spec;
  };
  role_override("--summarizer-url", cli.summarizer_url, cli.summarizer_model, cfg.summarizer);
  role_override("--router-url", cli.router_url, cli.router_model, cfg.router);
  role_override("--judge-url", cli.judge_url, cli.judge_model, cfg.judge);
  if (passed("--tools")) cfg.tools_mode = cli.tools_mode;
  if (passed("--corpus")) cfg.corpus_dir = cli.corpus;
  if (passed("--enabled-tools")) {
    cfg.enabled_tools.clear();
    for (const auto& t : split(cli.enabled_tools, ',')) cfg.enabled_tools.push_back(trim(t));
  }
  if (passed("--judge")) cfg.judge_mode = cli.judge_mode;
  if (passed("--temperature")) cfg.sampling.temperature = cli.temperature;
  if (passed("--max-output-tokens")) cfg.sampling.max_output_tokens = cli.max_output_tokens;
  if (passed("--seed")) cfg.seed = cli.seed;
  if (passed("--parallelism")) cfg.task_parallelism = cli.parallelism;
  if (passed("--deterministic")) cfg.deterministic = cli.deterministic;
  if (passed("--router-budget")) cfg.router_token_budget = cli.router_budget;
  if (passed("--counter")) cfg.counter = cli.counter;
  if (passed("--max-tasks")) cfg.max_tasks = cli.max_tasks;
  return cfg;
}

int cmd_run(const RunCli& cli, const CLI::App& cmd) {
  RunConfig cfg = assemble_run_config(cli, cmd);
  RunnerHooks hooks;
  if (!cli.quiet) {
    hooks.on_record = [](const RunRecord& r) {
      std::string reason = r.exhaust_reason ? ":" + *r.exhaust_reason : "";
      std::fprintf(stderr, "[%s] %s%s\n", r.task_id.c_str(), r.status.c_str(), reason.c_str());
    };
  }
  RunSummary summary = run_benchmark(cfg, hooks);
  std::fprintf(stderr, "executed %d, skipped %d (resumed), errors %d -> %s\n", summary.executed,
               summary.skipped, summary.errors, summary.records_path.string().c_str());

  RunSet set = load_run_dir(std::filesystem::path(cfg.output_dir));
  std::cout << render_metrics_table({estimate_eta_rho(set)});
  return summary.errors == 0 ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& dirs, bool as_json, bool transitions,
               bool cm_subset, const std::string& cost_csv) {
  std::vector<RunSet> sets;
  for (const auto& d : dirs) sets.push_back(load_run_dir(d));

  std::vector<MetricsReport> reports;
  for (const auto& s : sets) reports.push_back(estimate_eta_rho(s));

  if (as_json) {
    nlohmann::json out;
    out["runs"] = nlohmann::json::array();
    for (const auto& r : reports) out["runs"].push_back(metrics_to_json(r));
    if (sets.size() > 1) {
      auto aligned = aligned_precision(sets);
      nlohmann::json ja;
      ja["aligned_tasks"] = aligned.aligned_tasks;
      for (const auto& l : aligned.labels) {
        const auto& p = aligned.precision.at(l);
        ja["precision"][l] = p ? nlohmann::json{{"num", p->num}, {"den", p->den}} : nullptr;
      }
      out["aligned"] = ja;
    }
    if (transitions)
      for (const auto& s : sets)
        try {
          out["transitions"][s.label] = transition_to_json(transition_matrix(s));
        } catch (const NoTransitions&) {
          out["transitions"][s.label] = nullptr;
        }
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << render_metrics_table(reports);
    if (sets.size() > 1) std::cout << "\n" << render_aligned_table(aligned_precision(sets));
    if (cm_subset && sets.size() > 1) {
      auto tasks = aligned_cm_subset(sets);
      std::vector<MetricsReport> sub;
      for (const auto& s : sets) sub.push_back(estimate_eta_rho(restrict_tasks(s, tasks)));
      std::cout << "\ntasks with at least one compaction under every strategy: " << tasks.size()
                << "\n"
                << render_metrics_table(sub);
    }
    if (transitions)
      for (const auto& s : sets)
        try {
          std::cout << "\nrouting transitions for " << s.label << ":\n"
                    << render_transition_matrix(transition_matrix(s));
        } catch (const NoTransitions&) {
          std::cout << "\nrouting transitions for " << s.label << ": none recorded\n";
        }
  }
  if (!cost_csv.empty()) {
    write_text_file(cost_csv, cost_scatter_csv(cost_report(sets)));
    std::fprintf(stderr, "wrote cost scatter to %s\n", cost_csv.c_str());
  }
  return 0;
}

int cmd_simulate(const std::string& preset, const std::string& model_file,
                 const std::string& policies_csv, long long n_tasks, std::uint64_t seed,
                 const std::string& sweep_axis, const std::string& grid_csv,
                 const std::string& csv_out, bool as_json) {
  sim::TaskModel model;
  Budget budget = sim::context_rot_budget();
  if (!model_file.empty()) {
    auto j = read_json_file(model_file);
    model = j.at("model").get<sim::TaskModel>();
    if (j.contains("budget")) budget = j["budget"].get<Budget>();
  } else {
    auto m = sim::preset_by_name(preset);
    if (!m) throw ConfigInvalid("unknown preset: " + preset);
    model = *m;
  }

  std::vector<sim::SimPolicy> policies;
  for (const auto& p : split(policies_csv, ',')) {
    auto pol = sim::SimPolicy::parse(trim(p));
    if (!pol) throw ConfigInvalid("unknown policy: " + p);
    policies.push_back(*pol);
  }

  if (!sweep_axis.empty()) {
    sim::SweepAxis axis;
    if (sweep_axis == "max_turns") axis = sim::SweepAxis::MaxTurns;
    else if (sweep_axis == "trigger_ratio") axis = sim::SweepAxis::TriggerRatio;
    else throw ConfigInvalid("sweep axis must be max_turns or trigger_ratio");
    std::vector<double> grid;
    for (const auto& g : split(grid_csv, ',')) grid.push_back(std::stod(trim(g)));
    auto rows = sim::sweep(model, policies, axis, grid, budget, n_tasks, seed);
    std::string csv = sweep_csv(rows, sweep_axis);
    if (!csv_out.empty()) {
      write_text_file(csv_out, csv);
      std::fprintf(stderr, "wrote sweep to %s\n", csv_out.c_str());
    } else {
      std::cout << csv;
    }
    return 0;
  }

  std::vector<RunSet> sets;
  for (const auto& p : policies)
    sets.push_back(sim::simulate_policy(model, p, budget, n_tasks, seed));
  std::vector<MetricsReport> reports;
  for (const auto& s : sets) reports.push_back(estimate_eta_rho(s));
  if (as_json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : reports) out.push_back(metrics_to_json(r));
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << render_metrics_table(reports);
    if (sets.size() > 1) std::cout << "\n" << render_aligned_table(aligned_precision(sets));
  }
  return 0;
}

int cmd_validate(const std::string& config_path) {
  RunConfig cfg = read_json_file(config_path).get<RunConfig>();
  validate_config(cfg);
  std::cout << "config OK\ndigest: " << config_digest(cfg) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive context management runtime and evaluation harness"};
  app.set_version_flag("--version", std::string(ctxroute::kLibraryVersion));
  app.require_subcommand(1);

  RunCli rc;
  auto* run = app.add_subcommand("run", "execute a benchmark task file under one policy");
  run->add_option("--config", rc.config_path, "run config JSON; flags below override it");
  run->add_option("--tasks", rc.tasks, "benchmark JSONL file (one task per line)");
  run->add_option("--output", rc.output, "output directory for records.jsonl");
  run->add_option("--policy", rc.policy_kind, "baseline | static | adaptive");
  run->add_option("--static-strategy", rc.static_strategy,
                  "strategy for --policy static, e.g. keep_last_n:5");
  run->add_option("--candidates", rc.candidates,
                  "comma list of candidate strategies for the adaptive policy");
  run->add_option("--router", rc.router, "lookahead:<k> | no_lookahead | random");
  run->add_option("--max-context", rc.max_context, "context window size in tokens");
  run->add_option("--trigger-ratio", rc.trigger_ratio, "fraction of the window that triggers");
  run->add_option("--max-turns", rc.max_turns, "turn budget per task");
  run->add_option("--lookahead", rc.lookahead, "probe depth for branch rollouts");
  run->add_option("--agent-kind", rc.agent_kind, "http | scripted");
  run->add_option("--agent-url", rc.agent_url, "OpenAI compatible base url");
  run->add_option("--agent-model", rc.agent_model, "model id sent to the endpoint");
  run->add_option("--script", rc.script, "scripted replies JSON (implies --agent-kind scripted)");
  run->add_option("--capture", rc.capture, "JSONL file mirroring every backend exchange");
  run->add_option("--summarizer-url", rc.summarizer_url, "separate summarizer endpoint");
  run->add_option("--summarizer-model", rc.summarizer_model, "summarizer model id");
  run->add_option("--router-url", rc.router_url, "separate router endpoint");
  run->add_option("--router-model", rc.router_model, "router model id");
  run->add_option("--judge-url", rc.judge_url, "separate judge endpoint");
  run->add_option("--judge-model", rc.judge_model, "judge model id");
  run->add_option("--tools", rc.tools_mode, "mock | live");
  run->add_option("--corpus", rc.corpus, "mock corpus directory");
  run->add_option("--enabled-tools", rc.enabled_tools, "comma list from search,visit,google_scholar,python_interpreter");
  run->add_option("--judge", rc.judge_mode, "exact | llm | none");
  run->add_option("--temperature", rc.temperature, "agent sampling temperature");
  run->add_option("--max-output-tokens", rc.max_output_tokens, "completion token cap");
  run->add_option("--seed", rc.seed, "base seed for routing permutations and retries");
  run->add_option("--parallelism", rc.parallelism, "concurrent tasks");
  run->add_flag("--deterministic", rc.deterministic,
                "single threaded, zeroed wall times, byte stable records");
  run->add_option("--router-budget", rc.router_budget, "token budget for the routing prompt");
  run->add_option("--counter", rc.counter, "heuristic | backend_usage");
  run->add_option("--max-tasks", rc.max_tasks, "run only the first N tasks");
  run->add_flag("--quiet", rc.quiet, "suppress per task progress lines");

  std::vector<std::string> report_dirs;
  bool report_json = false, report_transitions = false, report_cm = false;
  std::string cost_csv;
  auto* report = app.add_subcommand("report", "metrics over one or more run directories");
  report->add_option("dirs", report_dirs, "run directories containing records.jsonl")
      ->required()
      ->expected(-1);
  report->add_flag("--json", report_json, "emit JSON instead of tables");
  report->add_flag("--transitions", report_transitions, "include routing transition matrices");
  report->add_flag("--cm-subset", report_cm,
                   "also report over tasks where every strategy compacted at least once");
  report->add_option("--cost-csv", cost_csv, "write per task turn and token scatter CSV");

  std::string sim_preset = "context_rot", sim_model_file, sim_policies =
      "baseline,discard_all,keep_last_n,summary";
  long long sim_tasks = 10000;
  std::uint64_t sim_seed = 0;
  std::string sim_sweep, sim_grid, sim_csv;
  bool sim_json = false;
  auto* simulate = app.add_subcommand("simulate", "synthetic policy comparison, no backend");
  simulate->add_option("--preset", sim_preset, "built in task model name");
  simulate->add_option("--model-file", sim_model_file, "task model JSON (overrides --preset)");
  simulate->add_option("--policies", sim_policies, "comma list: baseline,discard_all,keep_last_n,summary");
  simulate->add_option("--n", sim_tasks, "number of synthetic tasks");
  simulate->add_option("--seed", sim_seed, "base seed; policies share per task streams");
  simulate->add_option("--sweep", sim_sweep, "sweep axis: max_turns | trigger_ratio");
  simulate->add_option("--grid", sim_grid, "comma list of axis values for --sweep");
  simulate->add_option("--csv", sim_csv, "write sweep CSV here instead of stdout");
  simulate->add_flag("--json", sim_json, "emit JSON instead of tables");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "check a config file and print its digest");
  validate->add_option("--config", validate_path, "run config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(rc, *run);
    if (report->parsed())
      return cmd_report(report_dirs, report_json, report_transitions, report_cm, cost_csv);
    if (simulate->parsed())
      return cmd_simulate(sim_preset, sim_model_file, sim_policies, sim_tasks, sim_seed,
                          sim_sweep, sim_grid, sim_csv, sim_json);
    if (validate->parsed()) return cmd_validate(validate_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
