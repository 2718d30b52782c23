#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "nval/planner.hpp"
#include "nval/sim.hpp"

namespace nval {

// Time-sortable ULID-style experiment id: 10 chars of ms timestamp followed
// by 16 random chars, Crockford base32.
inline std::string make_experiment_id() {
  static const char* kAlphabet = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";
  static std::atomic<std::uint64_t> counter{0};
  static thread_local std::mt19937_64 rng(
      std::random_device{}() ^
      std::chrono::steady_clock::now().time_since_epoch().count());
  std::uint64_t ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  std::string id(26, '0');
  for (int i = 9; i >= 0; --i) {
    id[i] = kAlphabet[ms & 31];
    ms >>= 5;
  }
  std::uint64_t rand = rng() ^ (counter.fetch_add(1) << 32);
  std::uint64_t rand2 = rng();
  for (int i = 0; i < 8; ++i) id[10 + i] = kAlphabet[(rand >> (5 * i)) & 31];
  for (int i = 0; i < 8; ++i) id[18 + i] = kAlphabet[(rand2 >> (5 * i)) & 31];
  return id;
}

struct ActivityLogEntry {
  std::string experiment_id;
  std::string activity;  // LOAD-MODULES, CREATE-EXP-RECORD, VERIFY, DEPLOY,
                         // EVALUATION, STORE-EXP-RECORD, PLANNING-OVERHEADS,
                         // ORCHESTRATION-OVERHEADS
  double start_ms = 0;   // epoch ms
  double end_ms = 0;
  std::string detail;

  double duration_ms() const { return end_ms - start_ms; }

  Json to_json() const {
    return Json{{"experiment_id", experiment_id},
                {"activity", activity},
                {"start", static_cast<std::int64_t>(start_ms)},
                {"end", static_cast<std::int64_t>(end_ms)},
                {"detail", detail}};
  }
};

enum class ExperimentStatus { Created, Running, Succeeded, Failed, Unsatisfiable };

inline const char* to_string(ExperimentStatus s) {
  switch (s) {
    case ExperimentStatus::Created: return "created";
    case ExperimentStatus::Running: return "running";
    case ExperimentStatus::Succeeded: return "succeeded";
    case ExperimentStatus::Failed: return "failed";
    case ExperimentStatus::Unsatisfiable: return "unsatisfiable";
  }
  return "?";
}

inline std::optional<ExperimentStatus> experiment_status_from(const std::string& s) {
  if (s == "created") return ExperimentStatus::Created;
  if (s == "running") return ExperimentStatus::Running;
  if (s == "succeeded") return ExperimentStatus::Succeeded;
  if (s == "failed") return ExperimentStatus::Failed;
  if (s == "unsatisfiable") return ExperimentStatus::Unsatisfiable;
  return std::nullopt;
}

struct ExperimentRecord {
  std::string experiment_id;
  Json request_doc;
  Json plan;  // plan_to_json output, or null before planning
  std::vector<int> runtime_state;
  ExperimentStatus status = ExperimentStatus::Created;
  std::map<std::string, std::vector<std::string>> endpoints;  // channel -> URLs
  // (channel, deploying action) in deployment order; drives teardown.
  std::vector<std::pair<std::string, std::string>> deployments;
  std::vector<std::string> datasets;
  std::string diagnostics;

  Json to_json() const {
    Json j;
    j["experiment_id"] = experiment_id;
    j["status"] = to_string(status);
    j["request"] = request_doc;
    j["plan"] = plan;
    j["runtime_state"] = runtime_state;
    j["endpoints"] = Json::object();
    for (const auto& [channel, urls] : endpoints) j["endpoints"][channel] = urls;
    j["deployments"] = Json::array();
    for (const auto& [channel, action] : deployments)
      j["deployments"].push_back({{"channel", channel}, {"action_id", action}});
    j["datasets"] = datasets;
    j["diagnostics"] = diagnostics;
    return j;
  }

  static ExperimentRecord from_json(const Json& j) {
    ExperimentRecord r;
    r.experiment_id = j.at("experiment_id").get<std::string>();
    auto status = experiment_status_from(j.at("status").get<std::string>());
    if (!status) throw SchemaError("unknown experiment status");
    r.status = *status;
    r.request_doc = j.at("request");
    r.plan = j.value("plan", Json());
    for (const auto& v : j.value("runtime_state", Json::array()))
      r.runtime_state.push_back(v.get<int>());
    const Json endpoints = j.value("endpoints", Json::object());
    for (const auto& [channel, urls] : endpoints.items())
      for (const auto& u : urls)
        r.endpoints[channel].push_back(u.get<std::string>());
    for (const auto& d : j.value("deployments", Json::array()))
      r.deployments.emplace_back(d.at("channel").get<std::string>(),
                                 d.at("action_id").get<std::string>());
    for (const auto& d : j.value("datasets", Json::array()))
      r.datasets.push_back(d.get<std::string>());
    r.diagnostics = j.value("diagnostics", "");
    return r;
  }
};

// ---------------------------------------------------------------------------
// Workspace: experiments/<id>/{record.json, log.jsonl, datasets/}

class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }
  fs::path experiment_dir(const std::string& id) const {
    return root_ / "experiments" / id;
  }
  fs::path record_path(const std::string& id) const {
    return experiment_dir(id) / "record.json";
  }
  fs::path log_path(const std::string& id) const {
    return experiment_dir(id) / "log.jsonl";
  }
  fs::path dataset_dir(const std::string& id) const {
    return experiment_dir(id) / "datasets";
  }

  void save_record(const ExperimentRecord& record) const {
    std::error_code ec;
    fs::create_directories(experiment_dir(record.experiment_id), ec);
    auto path = record_path(record.experiment_id);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw IoError("cannot write '" + tmp.string() + "'");
      out << record.to_json().dump(2) << "\n";
      if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);  // readers never observe a partial record
  }

  ExperimentRecord load_record(const std::string& id) const {
    std::ifstream in(record_path(id));
    if (!in) throw IoError("no record for experiment '" + id + "'");
    return ExperimentRecord::from_json(Json::parse(in));
  }

  bool has_record(const std::string& id) const {
    return fs::exists(record_path(id));
  }

  void append_log(const ActivityLogEntry& entry) const {
    auto path = entry.experiment_id.empty() ? root_ / "engine-log.jsonl"
                                            : log_path(entry.experiment_id);
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot append to '" + path.string() + "'");
    out << entry.to_json().dump() << "\n";
  }

  std::string read_log(const std::string& id) const {
    std::ifstream in(log_path(id));
    if (!in) throw IoError("no log for experiment '" + id + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

 private:
  fs::path root_;
};

// ---------------------------------------------------------------------------
// Overhead accounting

struct ActivityStats {
  size_t count = 0;
  double mean_ms = 0;
  double max_ms = 0;
  double stddev_ms = 0;
};

struct OverheadReport {
  std::map<std::string, ActivityStats> per_activity;
  double total_overhead_mean_ms = 0;  // CREATE + PLANNING + ORCHESTRATION + STORE
  double actual_work_mean_ms = 0;     // VERIFY + DEPLOY + EVALUATION

  Json to_json() const {
    Json j;
    for (const auto& [activity, s] : per_activity)
      j["activities"][activity] = {{"count", s.count},
                                   {"mean_ms", s.mean_ms},
                                   {"max_ms", s.max_ms},
                                   {"stddev_ms", s.stddev_ms}};
    j["total_overhead_mean_ms"] = total_overhead_mean_ms;
    j["actual_work_mean_ms"] = actual_work_mean_ms;
    return j;
  }
};

inline OverheadReport compute_overheads(const std::vector<ActivityLogEntry>& entries) {
  OverheadReport report;
  std::map<std::string, std::vector<double>> durations;
  for (const auto& e : entries) durations[e.activity].push_back(e.duration_ms());
  for (const auto& [activity, ds] : durations) {
    ActivityStats s;
    s.count = ds.size();
    for (double d : ds) {
      s.mean_ms += d;
      s.max_ms = std::max(s.max_ms, d);
    }
    s.mean_ms /= ds.size();
    for (double d : ds) s.stddev_ms += (d - s.mean_ms) * (d - s.mean_ms);
    s.stddev_ms = std::sqrt(s.stddev_ms / ds.size());
    report.per_activity[activity] = s;
  }
  auto mean_of = [&](const char* activity) {
    auto it = report.per_activity.find(activity);
    return it == report.per_activity.end() ? 0.0 : it->second.mean_ms;
  };
  report.total_overhead_mean_ms = mean_of("CREATE-EXP-RECORD") +
                                  mean_of("PLANNING-OVERHEADS") +
                                  mean_of("ORCHESTRATION-OVERHEADS") +
                                  mean_of("STORE-EXP-RECORD");
  report.actual_work_mean_ms =
      mean_of("VERIFY") + mean_of("DEPLOY") + mean_of("EVALUATION");
  return report;
}

// ---------------------------------------------------------------------------
// Engine

struct EngineOptions {
  fs::path workspace = "workspace";
  std::optional<fs::path> registry_manifest;  // default: all built-in actions
  bool teardown_after = false;
  bool fail_fast = true;
  int timeout_s = 600;
  std::uint64_t seed = 42;
  SimOptions sim;
  MatchPolicy match;
};

struct RunResult {
  ExperimentRecord record;
  PlanningOutcome planning;
  std::vector<ActivityLogEntry> log;
};

struct ReplaySummary {
  int rounds = 0;
  int experiments = 0;
  int successes = 0;
  int unsatisfiable = 0;
  int total_invocations = 0;
  std::map<std::string, int> invocations_by_action;
  std::map<std::string, std::vector<RequestComponent>> unmatched_by_experiment;
  int datasets_created = 0;
  double mean_experiment_overhead_ms = 0;
  OverheadReport overheads;

  Json to_json() const {
    Json j;
    j["rounds"] = rounds;
    j["experiments"] = experiments;
    j["successes"] = successes;
    j["unsatisfiable"] = unsatisfiable;
    j["success_rate"] =
        experiments == 0 ? 0.0 : static_cast<double>(successes) / experiments;
    j["total_invocations"] = total_invocations;
    j["invocations_by_action"] = invocations_by_action;
    j["datasets_created"] = datasets_created;
    j["mean_experiment_overhead_ms"] = mean_experiment_overhead_ms;
    j["overheads"] = overheads.to_json();
    if (!unmatched_by_experiment.empty()) {
      j["unsatisfiable_experiments"] = Json::object();
      for (const auto& [name, comps] : unmatched_by_experiment) {
        Json arr = Json::array();
        for (const auto& c : comps) arr.push_back(c.channel_id);
        j["unsatisfiable_experiments"][name] = arr;
      }
    }
    return j;
  }
};

namespace detail {

inline double epoch_ms() {
  return std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace detail

class Engine {
 public:
  explicit Engine(EngineOptions opts)
      : opts_(std::move(opts)),
        workspace_(opts_.workspace),
        env_(std::make_shared<SimEnvironment>()) {
    auto t0 = detail::epoch_ms();
    auto builtins = make_builtin_actions(env_, opts_.sim);
    registry_ = opts_.registry_manifest
                    ? load_registry(*opts_.registry_manifest, builtins,
                                    opts_.timeout_s)
                    : make_builtin_registry(builtins);
    auto t1 = detail::epoch_ms();
    std::error_code ec;
    fs::create_directories(opts_.workspace, ec);
    workspace_.append_log({"", "LOAD-MODULES", t0, t1,
                           std::to_string(registry_.size()) + " actions"});
  }

  const ActionRegistry& registry() const { return registry_; }
  const Workspace& workspace() const { return workspace_; }
  const EngineOptions& options() const { return opts_; }
  SimEnvironment& sim_env() { return *env_; }

  ExperimentRecord create_experiment(const Json& request_doc,
                                     std::vector<ActivityLogEntry>* log = nullptr) {
    auto t0 = detail::epoch_ms();
    ExperimentRecord record;
    record.experiment_id = make_experiment_id();
    record.request_doc = request_doc;
    record.status = ExperimentStatus::Created;
    workspace_.save_record(record);
    auto entry = ActivityLogEntry{record.experiment_id, "CREATE-EXP-RECORD", t0,
                                  detail::epoch_ms(), ""};
    workspace_.append_log(entry);
    if (log) log->push_back(entry);
    return record;
  }

  // Parse + structural gate + plan + execute. Throws SyntaxError/SchemaError
  // family on malformed requests; execution failures land in the record.
  RunResult run_request(const Json& request_doc) {
    Request request = parse_request(request_doc);
    auto report = validate_structure(request.model);
    if (report.verdict() == Verdict::Errors)
      throw SchemaError("model fails structural validation: " +
                        report.findings.front().message);

    RunResult result;
    result.record = create_experiment(request_doc, &result.log);

    auto t0 = detail::epoch_ms();
    size_t n = 0;
    auto components = build_components(request, &n);
    result.planning = plan_components(components, n, registry_, opts_.match);
    auto plan_entry = ActivityLogEntry{result.record.experiment_id,
                                       "PLANNING-OVERHEADS", t0,
                                       detail::epoch_ms(), ""};
    workspace_.append_log(plan_entry);
    result.log.push_back(plan_entry);

    result.record.plan = plan_to_json(result.planning);
    if (!result.planning.satisfiable) {
      result.record.status = ExperimentStatus::Unsatisfiable;
      result.record.diagnostics = "no execution plan under the current action pool";
      store_record(result.record, result.log);
      return result;
    }
    execute(result, request, components, n);
    return result;
  }

  // Replays the plan in result.record against the registry, mutating the
  // record in place and appending activity entries.
  void execute(RunResult& result, const Request& request,
               const std::vector<PlanComponent>& components, size_t n) {
    ExperimentRecord& record = result.record;
    const auto& calls = result.planning.plan.calls;
    const size_t m = components.size() - n;

    RequestState state = initial_state(n, m);
    bool has_verify = false;
    for (const auto& c : calls) has_verify = has_verify || c.is_verify;
    if (!has_verify) state.v = 1;
    if (n == 0) state.d = 1;
    if (m == 0) state.e = 1;

    record.status = ExperimentStatus::Running;
    workspace_.save_record(record);

    std::map<std::string, Json> fragment_docs;
    for (const auto& channel : list_channels(request.model))
      fragment_docs[channel] =
          to_json(fragment_model(extract_channel_fragment(request.model, channel)));

    auto component_index = [&](const PlanCall& call) -> int {
      for (size_t i = 0; i < components.size(); ++i) {
        const auto& c = components[i].comp;
        if (c.type == call.type && c.channel_id == call.channel_id &&
            c.metric_group == call.metric_group)
          return static_cast<int>(i);
      }
      return -1;
    };

    InvokeContext ctx{record.experiment_id,
                      workspace_.dataset_dir(record.experiment_id), opts_.seed,
                      opts_.timeout_s};
    std::set<std::string> failed_channels;
    auto exec_start = std::chrono::steady_clock::now();
    double action_ms = 0;
    bool aborted = false;

    for (const auto& call : calls) {
      if (aborted) break;
      if (!opts_.fail_fast && !call.is_verify &&
          call.type == RequestComponent::Type::Evaluation &&
          failed_channels.count(call.channel_id))
        continue;  // channel never deployed, nothing to evaluate

      const ActionEntry* entry = registry_.find(call.action_id);
      ActionInput input;
      const char* activity = "VERIFY";
      if (call.is_verify) {
        input.kind = InputKind::Verify;
        input.request_doc = record.request_doc;
      } else if (call.type == RequestComponent::Type::Deployment) {
        activity = "DEPLOY";
        input.kind = InputKind::Deploy;
        input.channel_id = call.channel_id;
        input.channel_fragment = fragment_docs.at(call.channel_id);
      } else {
        activity = "EVALUATION";
        input.kind = InputKind::Evaluate;
        input.channel_id = call.channel_id;
        input.metric_group = call.metric_group;
        input.channel_fragment = fragment_docs.at(call.channel_id);
        auto eps = record.endpoints.find(call.channel_id);
        if (eps != record.endpoints.end()) input.endpoints = eps->second;
      }

      auto t0 = detail::epoch_ms();
      ActionOutcome outcome;
      if (!entry) {
        outcome = ActionOutcome::failure("action '" + call.action_id +
                                         "' is not in the registry");
      } else {
        try {
          outcome = invoke_action(*entry, input, ctx).outcome;
        } catch (const Error& e) {
          outcome = ActionOutcome::failure(e.what());
        }
      }
      auto t1 = detail::epoch_ms();
      action_ms += t1 - t0;
      std::string detail_str =
          call.action_id + "/" + (call.is_verify ? "-" : call.channel_id);
      auto log_entry = ActivityLogEntry{record.experiment_id, activity, t0, t1,
                                        detail_str};
      workspace_.append_log(log_entry);
      result.log.push_back(log_entry);

      if (call.is_verify) {
        bool verified = outcome.ok && outcome.report.verdict() != Verdict::Errors;
        state.v = verified ? 1 : -1;
        if (!verified) {
          record.diagnostics = outcome.ok
                                   ? "verifier reported errors"
                                   : "verifier failed: " + outcome.diagnostics;
          aborted = true;  // never deploy an unverified request
        }
        continue;
      }

      int idx = component_index(call);
      if (idx < 0) continue;
      if (outcome.ok) {
        state.req[idx] = 1;
        if (call.type == RequestComponent::Type::Deployment) {
          record.endpoints[call.channel_id] = outcome.endpoints;
          record.deployments.emplace_back(call.channel_id, call.action_id);
          bool all = true;
          for (size_t c = 0; c < n; ++c) all = all && state.req[c] == 1;
          if (all) state.d = 1;
        } else {
          for (const auto& d : outcome.datasets)
            if (std::find(record.datasets.begin(), record.datasets.end(), d) ==
                record.datasets.end())
              record.datasets.push_back(d);
          bool all = true;
          for (size_t c = n; c < state.req.size(); ++c)
            all = all && state.req[c] == 1;
          if (all) state.e = 1;
        }
      } else {
        state.req[idx] = -1;
        if (call.type == RequestComponent::Type::Deployment)
          failed_channels.insert(call.channel_id);
        if (record.diagnostics.empty())
          record.diagnostics = call.action_id + "(" + call.channel_id +
                               ") failed: " + outcome.diagnostics;
        if (opts_.fail_fast) aborted = true;
      }
    }

    double wall_ms = std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(
                         std::chrono::steady_clock::now() - exec_start)
                         .count();
    double overhead = std::max(0.0, wall_ms - action_ms);
    auto now = detail::epoch_ms();
    auto orch_entry = ActivityLogEntry{record.experiment_id,
                                       "ORCHESTRATION-OVERHEADS",
                                       now - overhead, now, ""};
    workspace_.append_log(orch_entry);
    result.log.push_back(orch_entry);

    if (opts_.teardown_after) teardown(record, &result.log);

    record.runtime_state = state.tuple();
    bool any_failed = state.v == -1;
    for (auto r : state.req) any_failed = any_failed || r == -1;
    record.status = is_goal(state) ? ExperimentStatus::Succeeded
                    : any_failed   ? ExperimentStatus::Failed
                                   : ExperimentStatus::Failed;
    store_record(record, result.log);
  }

  void teardown(ExperimentRecord& record,
                std::vector<ActivityLogEntry>* log = nullptr) {
    InvokeContext ctx{record.experiment_id,
                      workspace_.dataset_dir(record.experiment_id), opts_.seed,
                      opts_.timeout_s};
    for (auto it = record.deployments.rbegin(); it != record.deployments.rend();
         ++it) {
      const auto& [channel, action_id] = *it;
      const ActionEntry* entry = registry_.find(action_id);
      if (!entry) continue;
      ActionInput input;
      input.kind = InputKind::Teardown;
      input.channel_id = channel;
      auto eps = record.endpoints.find(channel);
      if (eps != record.endpoints.end()) input.endpoints = eps->second;
      auto t0 = detail::epoch_ms();
      try {
        invoke_action(*entry, input, ctx);
      } catch (const Error&) {
        // teardown is best effort
      }
      record.endpoints.erase(channel);
      if (log)
        log->push_back({record.experiment_id, "ORCHESTRATION-OVERHEADS", t0,
                        detail::epoch_ms(), "teardown " + action_id + "/" + channel});
    }
    record.deployments.clear();
  }

  void teardown_by_id(const std::string& experiment_id) {
    auto record = workspace_.load_record(experiment_id);
    teardown(record);
    workspace_.save_record(record);
  }

  ReplaySummary replay_case_study(const fs::path& bundle_dir, int rounds) {
    auto experiments = load_case_study(bundle_dir);
    ReplaySummary summary;
    summary.rounds = rounds;
    std::vector<ActivityLogEntry> all_entries;
    std::vector<double> per_experiment_overhead;

    for (int round = 0; round < rounds; ++round) {
      for (const auto& exp : experiments) {
        auto result = run_request(request_to_json(exp.request));
        ++summary.experiments;
        if (result.record.status == ExperimentStatus::Succeeded)
          ++summary.successes;
        if (result.record.status == ExperimentStatus::Unsatisfiable) {
          ++summary.unsatisfiable;
          summary.unmatched_by_experiment[exp.name] = result.planning.unmatched;
        }
        summary.datasets_created += static_cast<int>(result.record.datasets.size());
        double overhead = 0;
        for (const auto& e : result.log) {
          all_entries.push_back(e);
          if (e.activity == "VERIFY" || e.activity == "DEPLOY" ||
              e.activity == "EVALUATION") {
            ++summary.total_invocations;
            auto slash = e.detail.find('/');
            ++summary.invocations_by_action[e.detail.substr(0, slash)];
          } else {
            overhead += e.duration_ms();
          }
        }
        per_experiment_overhead.push_back(overhead);
      }
    }
    summary.overheads = compute_overheads(all_entries);
    for (double o : per_experiment_overhead)
      summary.mean_experiment_overhead_ms += o;
    if (!per_experiment_overhead.empty())
      summary.mean_experiment_overhead_ms /= per_experiment_overhead.size();
    return summary;
  }

 private:
  void store_record(ExperimentRecord& record, std::vector<ActivityLogEntry>& log) {
    auto t0 = detail::epoch_ms();
    workspace_.save_record(record);
    auto entry = ActivityLogEntry{record.experiment_id, "STORE-EXP-RECORD", t0,
                                  detail::epoch_ms(), ""};
    workspace_.append_log(entry);
    log.push_back(entry);
  }

  EngineOptions opts_;
  Workspace workspace_;
  std::shared_ptr<SimEnvironment> env_;
  ActionRegistry registry_;
};

}  // namespace nval
