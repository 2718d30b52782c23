#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "nval/planner.hpp"
#include "nval/registry.hpp"

namespace nval {

namespace fs = std::filesystem;

struct SimHost {
  std::string hostname;
  std::string hw_arch;
  std::string cluster;
};

struct SimChannelInstance {
  std::string channel_id;
  std::string platform;
  std::vector<std::string> endpoints;  // sim://<host>/<bnode>, one per BNode
  std::vector<std::string> hosts;
  std::int64_t deployed_at_ms = 0;
};

struct SyntheticDatasetSpec {
  std::string metric_group;
  size_t rows = 100;
  std::uint64_t seed = 0;
};

// Stand-in for real target infrastructure: tracks deployed channel instances
// per experiment and produces deterministic synthetic datasets.
class SimEnvironment {
 public:
  SimChannelInstance provision(const std::string& experiment_id,
                               const ChannelFragment& fragment) {
    SimChannelInstance instance;
    instance.channel_id = fragment.channel.id;
    auto cp = fragment.channel.props.find("consensus_protocol");
    if (cp != fragment.channel.props.end() && cp->second.is_string())
      instance.platform = normalize_token(cp->second.get<std::string>());
    std::map<std::string, std::string> host_by_id;
    for (const auto& host : fragment.hosts) {
      auto hn = host.props.find("hostname");
      host_by_id[host.id] = hn != host.props.end() && hn->second.is_string()
                                ? hn->second.get<std::string>()
                                : host.id;
    }
    for (const auto& host : fragment.hosts)
      instance.hosts.push_back(host_by_id[host.id]);
    for (const auto& bnode : fragment.bnodes) {
      std::string host = "unassigned";
      for (const auto& e : fragment.edges)
        if (e.kind == EdgeKind::DeployOnNode && e.from == bnode.id)
          host = host_by_id[e.to];
      instance.endpoints.push_back("sim://" + host + "/" + bnode.id);
    }
    instance.deployed_at_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::system_clock::now().time_since_epoch())
                                  .count();

    std::lock_guard lock(mutex_);
    auto key = std::make_pair(experiment_id, fragment.channel.id);
    if (instances_.count(key))
      throw AlreadyDeployedError("channel '" + fragment.channel.id +
                                 "' already deployed in experiment " +
                                 experiment_id);
    instances_.emplace(key, instance);
    return instance;
  }

  std::optional<SimChannelInstance> find(const std::string& experiment_id,
                                         const std::string& channel_id) const {
    std::lock_guard lock(mutex_);
    auto it = instances_.find({experiment_id, channel_id});
    if (it == instances_.end()) return std::nullopt;
    return it->second;
  }

  bool remove(const std::string& experiment_id, const std::string& channel_id) {
    std::lock_guard lock(mutex_);
    return instances_.erase({experiment_id, channel_id}) > 0;
  }

  // CSV columns: performance -> (timestamp_ms, tx_latency_ms, throughput_tps);
  // resource-consumption -> (timestamp_ms, host, cpu_pct, mem_mb).
  // Byte-identical output for identical (instance, spec).
  fs::path generate_dataset(const std::string& experiment_id,
                            const std::string& channel_id,
                            const SyntheticDatasetSpec& spec,
                            const fs::path& out_dir) const {
    auto instance = find(experiment_id, channel_id);
    if (!instance)
      throw NotDeployedError("channel '" + channel_id +
                             "' is not deployed in experiment " + experiment_id);
    fs::create_directories(out_dir);
    fs::path path =
        out_dir / (normalize_token(channel_id) + "-" + spec.metric_group + ".csv");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write dataset '" + path.string() + "'");

    std::seed_seq seq{spec.seed, std::hash<std::string>{}(channel_id),
                      std::hash<std::string>{}(spec.metric_group)};
    std::mt19937_64 rng(seq);
    char line[160];
    if (spec.metric_group == "performance") {
      out << "timestamp_ms,tx_latency_ms,throughput_tps\n";
      std::uniform_int_distribution<int> latency(40, 2200);
      std::uniform_int_distribution<int> tps(5, 240);
      for (size_t i = 0; i < spec.rows; ++i) {
        std::snprintf(line, sizeof line, "%zu,%d,%d\n", i * 1000, latency(rng),
                      tps(rng));
        out << line;
      }
    } else {
      out << "timestamp_ms,host,cpu_pct,mem_mb\n";
      std::uniform_int_distribution<int> cpu(1, 97);
      std::uniform_int_distribution<int> mem(64, 2048);
      std::vector<std::string> hosts = instance->hosts;
      if (hosts.empty()) hosts.push_back("testbed");
      for (size_t i = 0; i < spec.rows; ++i) {
        std::snprintf(line, sizeof line, "%zu,%s,%d,%d\n", i * 1000,
                      hosts[i % hosts.size()].c_str(), cpu(rng), mem(rng));
        out << line;
      }
    }
    return path;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, SimChannelInstance> instances_;
};

// ---------------------------------------------------------------------------
// Built-in case-study actions

struct SimOptions {
  size_t dataset_rows = 100;
  bool simulate_latency = false;  // draw DEPLOY durations at the paper's scale
};

namespace detail {

inline ChannelFragment fragment_from_doc(const Json& doc) {
  BndModel m = parse_bnd(doc.dump());
  const Vertex* channel = nullptr;
  for (const auto& v : m.vertices)
    if (v.kind == VertexKind::Channel) channel = &v;
  if (!channel) throw SchemaError("channel fragment carries no Channel vertex");
  return extract_channel_fragment(m, channel->id);
}

inline void maybe_sleep_deploy(const SimOptions& opts, std::mt19937_64& rng) {
  if (!opts.simulate_latency) return;
  std::normal_distribution<double> d(40377.0, 25187.0);
  auto ms = std::max(0.0, d(rng));
  std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(ms)));
}

}  // namespace detail

inline ActionEntry make_sim_deployer(std::shared_ptr<SimEnvironment> env,
                                     ActionDescriptor desc, SimOptions opts) {
  ActionEntry entry;
  entry.desc = std::move(desc);
  entry.run = [env, opts](const ActionInput& input, const InvokeContext& ctx) {
    if (input.kind == InputKind::Teardown) {
      env->remove(ctx.experiment_id, input.channel_id);
      return ActionOutcome{};
    }
    try {
      auto fragment = detail::fragment_from_doc(input.channel_fragment);
      std::mt19937_64 rng(ctx.seed);
      detail::maybe_sleep_deploy(opts, rng);
      auto instance = env->provision(ctx.experiment_id, fragment);
      ActionOutcome outcome;
      outcome.endpoints = instance.endpoints;
      return outcome;
    } catch (const Error& e) {
      return ActionOutcome::failure(e.what());
    }
  };
  return entry;
}

inline ActionEntry make_sim_evaluator(std::shared_ptr<SimEnvironment> env,
                                      ActionDescriptor desc, SimOptions opts,
                                      bool companion_resource_dataset) {
  ActionEntry entry;
  entry.desc = std::move(desc);
  entry.run = [env, opts, companion_resource_dataset](const ActionInput& input,
                                                      const InvokeContext& ctx) {
    try {
      ActionOutcome outcome;
      SyntheticDatasetSpec spec{input.metric_group, opts.dataset_rows, ctx.seed};
      outcome.datasets.push_back(
          env->generate_dataset(ctx.experiment_id, input.channel_id, spec,
                                ctx.dataset_dir)
              .string());
      // The Ethereum evaluator benchmarks performance and scrapes host
      // resource metrics in the same run, yielding two datasets.
      if (companion_resource_dataset && input.metric_group == "performance") {
        spec.metric_group = "resource-consumption";
        outcome.datasets.push_back(
            env->generate_dataset(ctx.experiment_id, input.channel_id, spec,
                                  ctx.dataset_dir)
                .string());
      }
      return outcome;
    } catch (const Error& e) {
      return ActionOutcome::failure(e.what());
    }
  };
  return entry;
}

inline ActionEntry make_sim_verifier(ActionDescriptor desc) {
  ActionEntry entry;
  entry.desc = std::move(desc);
  entry.run = [](const ActionInput& input, const InvokeContext&) {
    ActionOutcome outcome;
    try {
      Request request = parse_request(input.request_doc);
      outcome.report = validate_structure(request.model);
    } catch (const Error& e) {
      outcome.report.findings.push_back(
          {Severity::Error, std::string("request rejected: ") + e.what(), {}});
    }
    return outcome;
  };
  return entry;
}

// The seven case-study actions. Iteration order of the returned table is not
// meaningful; registry order comes from the manifest (or builtin_order()).
inline BuiltinTable make_builtin_actions(std::shared_ptr<SimEnvironment> env,
                                         SimOptions opts = {}) {
  BuiltinTable table;
  auto deployer = [](std::string id, std::string platform,
                     std::set<std::string> archs, bool mixed, std::string descr) {
    ActionDescriptor d;
    d.action_id = std::move(id);
    d.kind = ActionKind::Deployer;
    d.platforms = {std::move(platform)};
    d.archs = std::move(archs);
    d.supports_mixed = mixed;
    d.description = std::move(descr);
    return d;
  };

  table.emplace("Verifier", make_sim_verifier([] {
                  ActionDescriptor d;
                  d.action_id = "Verifier";
                  d.kind = ActionKind::Verifier;
                  d.description = "Structural verification via schema validation";
                  return d;
                }()));
  table.emplace("DeplPoA",
                make_sim_deployer(env,
                                  deployer("DeplPoA", "ethereum-poa-clique", {"x64"},
                                           false, "Ethereum PoA (Clique) on X64"),
                                  opts));
  table.emplace("DeplPoA_X64_ARM",
                make_sim_deployer(
                    env,
                    deployer("DeplPoA_X64_ARM", "ethereum-poa-clique",
                             {"x64", "armv7"}, true,
                             "Ethereum PoA (Clique) on mixed X64 & ARM"),
                    opts));
  table.emplace("DeplPoW_X64_ARM",
                make_sim_deployer(
                    env,
                    deployer("DeplPoW_X64_ARM", "ethereum-pow-ethash",
                             {"x64", "armv7"}, true,
                             "Ethereum PoW (Ethash) on mixed X64 & ARM"),
                    opts));
  table.emplace("DeplBaseline",
                make_sim_deployer(env,
                                  deployer("DeplBaseline", "baseline",
                                           {"x64", "armv7"}, true,
                                           "Idle baseline channel"),
                                  opts));
  {
    ActionDescriptor d;
    d.action_id = "EvalPerformanceEthereum";
    d.kind = ActionKind::Evaluator;
    d.platforms = {"ethereum"};
    d.metric_groups = {"performance", "resource-consumption"};
    d.description = "Caliper-style benchmark plus host resource metrics";
    table.emplace(d.action_id, make_sim_evaluator(env, d, opts, true));
  }
  {
    ActionDescriptor d;
    d.action_id = "EvalBaseline";
    d.kind = ActionKind::Evaluator;
    d.platforms = {"baseline"};
    d.metric_groups = {"resource-consumption"};
    d.description = "Idle resource-consumption measurement";
    table.emplace(d.action_id, make_sim_evaluator(env, d, opts, false));
  }
  return table;
}

// Default pool order. DeplPoA precedes DeplPoA_X64_ARM so x64-only PoA
// channels resolve to the narrower deployer.
inline const std::vector<std::string>& builtin_order() {
  static const std::vector<std::string> kOrder{
      "Verifier",     "DeplPoA",      "DeplPoA_X64_ARM",         "DeplPoW_X64_ARM",
      "DeplBaseline", "EvalPerformanceEthereum", "EvalBaseline"};
  return kOrder;
}

inline ActionRegistry make_builtin_registry(const BuiltinTable& table) {
  ActionRegistry registry;
  for (const auto& name : builtin_order()) registry.add(table.at(name));
  return registry;
}

// ---------------------------------------------------------------------------
// Bundled case study (13 experiments: baseline + D1..D12)

struct CaseExperiment {
  std::string name;
  Request request;
  std::map<std::string, int> expected_calls;  // action_id -> invocations
  int expected_total = 0;
};

inline std::vector<CaseExperiment> load_case_study(const fs::path& bundle_dir) {
  fs::path index = bundle_dir / "expected.json";
  std::ifstream in(index);
  if (!in) throw IoError("cannot read '" + index.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SyntaxError(std::string("malformed expected.json: ") + e.what());
  }
  std::vector<CaseExperiment> out;
  for (const auto& ej : j.at("experiments")) {
    CaseExperiment exp;
    exp.name = ej.at("experiment").get<std::string>();
    fs::path model_path = bundle_dir / ej.at("model").get<std::string>();
    std::ifstream mf(model_path);
    if (!mf) throw IoError("cannot read '" + model_path.string() + "'");
    std::stringstream ss;
    ss << mf.rdbuf();
    exp.request.model = parse_bnd(ss.str());
    // One evaluation component per channel: resource-consumption for the
    // idle baseline channel, performance for Ethereum channels (the Ethereum
    // evaluator reports resource consumption alongside).
    for (const auto& channel : list_channels(exp.request.model)) {
      auto reqs = derive_channel_requirements(
          extract_channel_fragment(exp.request.model, channel));
      bool baseline = token_prefix_match(reqs.platform, "baseline");
      exp.request.metrics.emplace_back(
          channel, baseline ? "resource-consumption" : "performance");
    }
    for (const auto& [action, count] : ej.at("calls").items()) {
      exp.expected_calls[action] = count.get<int>();
      exp.expected_total += count.get<int>();
    }
    out.push_back(std::move(exp));
  }
  return out;
}

}  // namespace nval
