// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Uses the bundled models via NVAL_BUNDLE_DIR.

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "nval/orchestrator.hpp"

using namespace nval;

namespace {

int failures = 0;
std::vector<std::string> notes;

void report(int criterion, const std::string& title, bool ok) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": "
            << title << "\n";
  if (!ok) {
    ++failures;
    for (const auto& n : notes) std::cout << "      " << n << "\n";
  }
  notes.clear();
}

void note(const std::string& s) { notes.push_back(s); }

ActionEntry entry(ActionDescriptor desc) {
  return {std::move(desc), [](const ActionInput&, const InvokeContext&) {
            return ActionOutcome{};
          }};
}

ActionDescriptor verifier_desc(std::string id) {
  ActionDescriptor d;
  d.action_id = std::move(id);
  d.kind = ActionKind::Verifier;
  return d;
}

ActionDescriptor deployer_desc(std::string id, std::string platform,
                               std::set<std::string> archs, bool mixed) {
  ActionDescriptor d;
  d.action_id = std::move(id);
  d.kind = ActionKind::Deployer;
  d.platforms = {std::move(platform)};
  d.archs = std::move(archs);
  d.supports_mixed = mixed;
  return d;
}

ActionDescriptor evaluator_desc(std::string id, std::string platform,
                                std::set<std::string> groups) {
  ActionDescriptor d;
  d.action_id = std::move(id);
  d.kind = ActionKind::Evaluator;
  d.platforms = {std::move(platform)};
  d.metric_groups = std::move(groups);
  return d;
}

BndModel exemplary_model() {
  return parse_bnd(testutil::slurp(testutil::bundle_dir() / "exemplary.bnd.json"));
}

size_t count_csv_files(const fs::path& workspace) {
  size_t n = 0;
  if (!fs::exists(workspace / "experiments")) return 0;
  for (const auto& e :
       fs::recursive_directory_iterator(workspace / "experiments"))
    if (e.is_regular_file() && e.path().extension() == ".csv") ++n;
  return n;
}

// --------------------------------------------------------------------------
// Criterion 1: the published 4-call plan for the exemplary request.

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  Request request{exemplary_model(),
                  {{"inter-lab", "performance"}, {"intra-lab", "performance"}}};
  ActionRegistry pool;
  pool.add(entry(deployer_desc("Depl_PoW_x64", "ethereum-pow", {"x64"}, false)));
  pool.add(entry(
      deployer_desc("Depl_PoA_mixed", "ethereum-poa", {"x64", "armv7"}, true)));
  pool.add(entry(evaluator_desc("Eval_Perf_Eth", "ethereum", {"performance"})));

  auto outcome = plan(request, pool);
  double ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  bool ok = outcome.satisfiable && outcome.plan.total_cost == 4 &&
            outcome.plan.calls.size() == 4;
  if (ok) {
    const auto& c = outcome.plan.calls;
    ok = c[0].action_id == "Depl_PoW_x64" && c[0].channel_id == "inter-lab" &&
         c[1].action_id == "Depl_PoA_mixed" && c[1].channel_id == "intra-lab" &&
         c[2].action_id == "Eval_Perf_Eth" && c[2].channel_id == "inter-lab" &&
         c[2].type == RequestComponent::Type::Evaluation &&
         c[3].action_id == "Eval_Perf_Eth" && c[3].channel_id == "intra-lab";
  }
  if (!ok) note("plan: " + plan_to_json(outcome).dump());
  if (ms >= 1000) {
    note("planning took " + std::to_string(ms) + " ms");
    ok = false;
  }
  report(1, "worked 4-call plan for the exemplary request, cost 4, < 1 s", ok);
}

// --------------------------------------------------------------------------
// Criterion 2: 8-element state tuple and 6-call verifier-first plan (n=2, m=3).

void criterion_2() {
  Request request{exemplary_model(),
                  {{"inter-lab", "performance"},
                   {"intra-lab", "performance"},
                   {"intra-lab", "resource-consumption"}}};
  ActionRegistry pool;
  pool.add(entry(verifier_desc("Ver")));
  pool.add(entry(deployer_desc("Depl_PoW_x64", "ethereum-pow", {"x64"}, false)));
  pool.add(entry(
      deployer_desc("Depl_PoA_mixed", "ethereum-poa", {"x64", "armv7"}, true)));
  pool.add(entry(evaluator_desc("Eval_Perf_Eth", "ethereum",
                                {"performance", "resource-consumption"})));

  size_t n = 0;
  auto components = build_components(request, &n);
  size_t m = components.size() - n;
  bool ok = n == 2 && m == 3;
  if (!ok) note("n=" + std::to_string(n) + " m=" + std::to_string(m));

  auto s0 = initial_state(n, m);
  if (s0.tuple() != std::vector<int>{0, 0, 0, 0, 0, 0, 0, 0}) {
    note("initial tuple has " + std::to_string(s0.tuple().size()) + " entries");
    ok = false;
  }
  auto verify_calls = available_calls(s0, n, m, pool);
  if (verify_calls.size() != 1 || verify_calls[0].component != -1) {
    note("expected exactly the verifier call at v=0");
    ok = false;
  } else {
    auto s1 = apply_call(s0, verify_calls[0], components, n, pool);
    if (s1.tuple() != std::vector<int>{1, 0, 0, 0, 0, 0, 0, 0}) {
      note("verifier transition produced a wrong tuple");
      ok = false;
    }
  }
  auto outcome = plan_components(components, n, pool);
  if (!outcome.satisfiable || outcome.plan.calls.size() != 6 ||
      !outcome.plan.calls[0].is_verify) {
    note("plan: " + plan_to_json(outcome).dump());
    ok = false;
  }
  report(2, "8-element state tuple; verifier yields (1,0,...,0); 6-call plan",
         ok);
}

// --------------------------------------------------------------------------
// Criteria 3-5: case-study replay counts, datasets, overheads.

void criteria_3_4_5() {
  const std::map<std::string, int> expected_counts{
      {"Verifier", 13},          {"EvalPerformanceEthereum", 29},
      {"DeplPoW_X64_ARM", 13},   {"DeplPoA", 8},
      {"DeplPoA_X64_ARM", 8},    {"DeplBaseline", 1},
      {"EvalBaseline", 1}};

  EngineOptions opts1;
  opts1.workspace = testutil::fresh_temp_dir("accept-r1");
  Engine engine1(opts1);
  auto t0 = std::chrono::steady_clock::now();
  auto round1 =
      engine1.replay_case_study(testutil::bundle_dir() / "case-study", 1);

  EngineOptions opts5;
  opts5.workspace = testutil::fresh_temp_dir("accept-r5");
  Engine engine5(opts5);
  auto round5 =
      engine5.replay_case_study(testutil::bundle_dir() / "case-study", 5);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();

  bool c3 = round1.total_invocations == 73 &&
            round1.invocations_by_action == expected_counts &&
            round5.total_invocations == 365 &&
            round5.successes == round5.experiments && round5.experiments == 65 &&
            secs < 30;
  if (round1.total_invocations != 73)
    note("round-1 invocations: " + std::to_string(round1.total_invocations));
  for (const auto& [action, count] : round1.invocations_by_action)
    if (!expected_counts.count(action) ||
        expected_counts.at(action) != count)
      note(action + " invoked " + std::to_string(count) + " times");
  if (round5.total_invocations != 365)
    note("round-5 invocations: " + std::to_string(round5.total_invocations));
  if (round5.successes != round5.experiments)
    note("round-5 successes: " + std::to_string(round5.successes) + "/" +
         std::to_string(round5.experiments));
  if (secs >= 30) note("replay took " + std::to_string(secs) + " s");
  report(3, "replay counts: 73 invocations with exact per-action totals; 365 "
            "over 5 rounds, 100% success, < 30 s", c3);

  size_t files1 = count_csv_files(opts1.workspace);
  size_t files5 = count_csv_files(opts5.workspace);
  bool c4 = files1 == 59 && files5 == 295 && round1.datasets_created == 59 &&
            round5.datasets_created == 295;
  if (!c4)
    note("dataset files: round-1 " + std::to_string(files1) + ", round-5 " +
         std::to_string(files5));
  report(4, "59 dataset files per round; 295 over 5 rounds", c4);

  bool c5 = round1.mean_experiment_overhead_ms < 100;
  if (!c5)
    note("mean per-experiment overhead " +
         std::to_string(round1.mean_experiment_overhead_ms) + " ms");
  std::vector<ActivityLogEntry> published{
      {"x", "STORE-EXP-RECORD", 0, 0.48, ""},
      {"x", "VERIFY", 0, 2.49, ""},
      {"x", "ORCHESTRATION-OVERHEADS", 0, 5.66, ""},
      {"x", "CREATE-EXP-RECORD", 0, 42, ""},
      {"x", "PLANNING-OVERHEADS", 0, 47.37, ""},
      {"x", "LOAD-MODULES", 0, 441, ""},
      {"x", "DEPLOY", 0, 40377, ""},
      {"x", "EVALUATION", 0, 440864, ""}};
  double total = compute_overheads(published).total_overhead_mean_ms;
  if (std::abs(total - 95.5) > 0.1) {
    note("published-means overhead came out " + std::to_string(total));
    c5 = false;
  }
  report(5, "mean per-experiment overhead < 100 ms; published means give "
            "95.5 +/- 0.1 ms", c5);
}

// --------------------------------------------------------------------------
// Criterion 6: planner vs exhaustive-enumeration oracle.

struct OracleState {
  bool verified = false;
  std::vector<char> done;  // per component
};

bool oracle_dfs(const OracleState& state,
                const std::vector<PlanComponent>& comps, size_t n,
                const std::vector<ActionDescriptor>& pool, int depth_left) {
  bool have_verifier = false;
  for (const auto& a : pool)
    if (a.kind == ActionKind::Verifier) have_verifier = true;
  bool all_deployed = true, all_evaluated = true;
  for (size_t i = 0; i < comps.size(); ++i)
    (i < n ? all_deployed : all_evaluated) &= state.done[i] != 0;
  if ((state.verified || !have_verifier) && all_deployed && all_evaluated)
    return true;
  if (depth_left == 0) return false;

  if (!state.verified && have_verifier) {
    OracleState next = state;
    next.verified = true;
    return oracle_dfs(next, comps, n, pool, depth_left - 1);
  }
  for (const auto& action : pool) {
    for (size_t i = 0; i < comps.size(); ++i) {
      if (state.done[i]) continue;
      bool deploy_phase = i < n;
      if (deploy_phase && !all_deployed) {
        if (action.kind != ActionKind::Deployer) continue;
        if (!matches_deployer(action, comps[i].reqs)) continue;
      } else if (!deploy_phase && all_deployed) {
        if (action.kind != ActionKind::Evaluator) continue;
        if (!matches_evaluator(action, comps[i].reqs.platform,
                               comps[i].comp.metric_group))
          continue;
      } else {
        continue;  // phase gate
      }
      OracleState next = state;
      next.done[i] = 1;
      if (oracle_dfs(next, comps, n, pool, depth_left - 1)) return true;
    }
  }
  return false;
}

void criterion_6() {
  std::mt19937_64 rng(20260823);
  const std::vector<std::string> platforms{"ethereum-pow", "ethereum-poa",
                                           "ethereum-poa-clique", "baseline"};
  const std::vector<std::string> groups{"performance", "resource-consumption"};
  const std::vector<std::string> arch_names{"x64", "armv7", "riscv"};
  auto pick = [&](size_t k) { return rng() % k; };

  int mismatches = 0, bad_replays = 0, bad_lengths = 0, satisfiable_seen = 0;
  const int kInstances = 1200;
  for (int iter = 0; iter < kInstances; ++iter) {
    size_t total = 1 + pick(4);  // n + m <= 4
    size_t n = pick(total + 1), m = total - n;
    // per-channel requirements stay consistent across components
    size_t n_channels = std::max(n, size_t{1});
    std::vector<ChannelRequirements> channels(n_channels);
    for (size_t c = 0; c < n_channels; ++c) {
      channels[c].channel_id = "ch" + std::to_string(c);
      channels[c].platform = platforms[pick(platforms.size())];
      for (const auto& a : arch_names)
        if (pick(2)) channels[c].archs.insert(a);
      if (channels[c].archs.empty()) channels[c].archs.insert("x64");
      channels[c].mixed = channels[c].archs.size() > 1;
    }
    std::vector<PlanComponent> comps;
    for (size_t i = 0; i < n + m; ++i) {
      PlanComponent pc;
      pc.comp.type = i < n ? RequestComponent::Type::Deployment
                           : RequestComponent::Type::Evaluation;
      pc.reqs = channels[i < n ? i : pick(n_channels)];
      pc.comp.channel_id = pc.reqs.channel_id;
      if (i >= n) pc.comp.metric_group = groups[pick(groups.size())];
      comps.push_back(std::move(pc));
    }
    ActionRegistry registry;
    std::vector<ActionDescriptor> pool;
    size_t n_actions = pick(6);  // <= 5 actions
    for (size_t a = 0; a < n_actions; ++a) {
      ActionDescriptor d;
      std::string id = "A" + std::to_string(a);
      switch (pick(3)) {
        case 0:
          d = verifier_desc(id);
          break;
        case 1:
          d = deployer_desc(id, platforms[pick(platforms.size())], {},
                            pick(2) == 0);
          for (const auto& arch : arch_names)
            if (pick(2)) d.archs.insert(arch);
          if (d.archs.empty()) d.archs.insert("x64");
          break;
        default:
          d = evaluator_desc(id, platforms[pick(platforms.size())],
                             {groups[pick(groups.size())]});
          if (pick(2)) d.metric_groups.insert(groups[pick(groups.size())]);
          break;
      }
      registry.add(entry(d));
      pool.push_back(registry.entries().back().desc);
    }

    bool has_verifier = registry.count_of(ActionKind::Verifier) > 0;
    int limit = static_cast<int>((has_verifier ? 1 : 0) + n + m);
    OracleState start;
    start.done.assign(n + m, 0);
    bool oracle = oracle_dfs(start, comps, n, pool, limit);
    auto outcome = plan_components(comps, n, registry);
    if (outcome.satisfiable != oracle) {
      ++mismatches;
      if (mismatches <= 3)
        note("mismatch at instance " + std::to_string(iter) + ": planner says " +
             (outcome.satisfiable ? "satisfiable" : "unsatisfiable"));
      continue;
    }
    if (!outcome.satisfiable) continue;
    ++satisfiable_seen;
    if (outcome.plan.calls.size() != static_cast<size_t>(limit)) ++bad_lengths;

    // replay the plan through the transition function to the goal tuple
    RequestState s = initial_state(n, m);
    if (!has_verifier) s.v = 1;
    if (n == 0) s.d = 1;
    if (m == 0) s.e = 1;
    bool replay_ok = true;
    for (const auto& call : outcome.plan.calls) {
      ActionCall ac;
      ac.component = -1;
      bool found = false;
      for (size_t ai = 0; ai < registry.entries().size() && !found; ++ai) {
        if (registry.entries()[ai].desc.action_id != call.action_id) continue;
        ac.action_index = ai;
        found = true;
      }
      if (!call.is_verify) {
        for (size_t ci = 0; ci < comps.size(); ++ci)
          if (comps[ci].comp.type == call.type &&
              comps[ci].comp.channel_id == call.channel_id &&
              comps[ci].comp.metric_group == call.metric_group &&
              s.req[ci] == 0) {
            ac.component = static_cast<int>(ci);
            break;
          }
      }
      try {
        auto next = apply_call(s, ac, comps, n, registry);
        if (next == s) replay_ok = false;  // plans never contain no-ops
        s = next;
      } catch (const Error&) {
        replay_ok = false;
        break;
      }
    }
    if (!replay_ok || !is_goal(s)) ++bad_replays;
  }
  bool ok = mismatches == 0 && bad_replays == 0 && bad_lengths == 0;
  note("instances: " + std::to_string(kInstances) + ", satisfiable: " +
       std::to_string(satisfiable_seen) + ", mismatches: " +
       std::to_string(mismatches) + ", bad replays: " +
       std::to_string(bad_replays) + ", bad lengths: " +
       std::to_string(bad_lengths));
  if (ok) notes.clear();
  report(6, "planner agrees with enumeration oracle on 1200 random instances; "
            "plans replay to goal with exact length", ok);
}

// --------------------------------------------------------------------------
// Criterion 7: removing the PoW deployer breaks exactly {d03,d05,d08,d10,d12}.

void criterion_7() {
  auto dir = testutil::fresh_temp_dir("accept-nopow");
  auto manifest = dir / "no-pow.manifest";
  {
    std::ofstream out(manifest);
    for (const char* name :
         {"Verifier", "DeplPoA", "DeplPoA_X64_ARM", "DeplBaseline",
          "EvalPerformanceEthereum", "EvalBaseline"})
      out << "builtin:" << name << "\n";
  }
  EngineOptions opts;
  opts.workspace = dir / "ws";
  opts.registry_manifest = manifest;
  Engine engine(opts);
  auto summary = engine.replay_case_study(testutil::bundle_dir() / "case-study", 1);

  const std::set<std::string> expected{"d03", "d05", "d08", "d10", "d12"};
  std::set<std::string> actual;
  for (const auto& [name, comps] : summary.unmatched_by_experiment)
    actual.insert(name);
  bool ok = actual == expected && summary.unsatisfiable == 5 &&
            summary.successes == 8;
  if (actual != expected) {
    std::string got;
    for (const auto& name : actual) got += name + " ";
    note("unsatisfiable set: " + got);
  }

  // the unmatched components must name exactly the PoW channels
  auto experiments = load_case_study(testutil::bundle_dir() / "case-study");
  for (const auto& exp : experiments) {
    if (!expected.count(exp.name)) continue;
    std::set<std::string> pow_channels;
    for (const auto& channel : list_channels(exp.request.model)) {
      auto reqs = derive_channel_requirements(
          extract_channel_fragment(exp.request.model, channel));
      if (token_prefix_match(reqs.platform, "ethereum-pow"))
        pow_channels.insert(channel);
    }
    std::set<std::string> named;
    auto it = summary.unmatched_by_experiment.find(exp.name);
    if (it != summary.unmatched_by_experiment.end())
      for (const auto& c : it->second) named.insert(c.channel_id);
    if (named != pow_channels) {
      note(exp.name + ": unmatched channels differ from its PoW channels");
      ok = false;
    }
  }
  report(7, "without DeplPoW_X64_ARM exactly {d03,d05,d08,d10,d12} are "
            "unsatisfiable, naming their PoW channels", ok);
}

// --------------------------------------------------------------------------
// Criterion 8: model-layer properties.

void criterion_8() {
  bool ok = true;
  std::mt19937_64 rng(5150);
  for (int i = 0; i < 500; ++i) {
    auto m = testutil::random_valid_model(rng);
    if (!(parse_bnd(serialize_bnd(m)) == m)) {
      note("round-trip mismatch at case " + std::to_string(i));
      ok = false;
      break;
    }
  }

  std::vector<fs::path> bundled{testutil::bundle_dir() / "exemplary.bnd.json"};
  for (const auto& e :
       fs::directory_iterator(testutil::bundle_dir() / "case-study"))
    if (e.path().extension() == ".json" &&
        e.path().filename() != "expected.json")
      bundled.push_back(e.path());
  for (const auto& path : bundled) {
    auto m = parse_bnd(testutil::slurp(path));
    std::set<std::string> all, covered;
    size_t covered_total = 0;
    for (const auto* v : m.vertices_of(VertexKind::BNode)) all.insert(v->id);
    for (const auto& channel : list_channels(m)) {
      auto frag = extract_channel_fragment(m, channel);
      for (const auto& bn : frag.bnodes) covered.insert(bn.id);
      covered_total += frag.bnodes.size();
    }
    if (covered != all || covered_total != covered.size()) {
      note("fragment partition broken for " + path.filename().string());
      ok = false;
    }
  }

  // moving a mining node onto an armv7 host must draw warnings
  auto mutated = exemplary_model();
  for (auto& e : mutated.edges)
    if (e.id == "e-dn-1-1") e.to = "onboard1";
  auto report_v = validate_structure(mutated);
  if (report_v.verdict() != Verdict::Warnings) {
    note("mutated model verdict: " + std::string(to_string(report_v.verdict())));
    ok = false;
  }
  report(8, "round-trip on 500 generated models; fragment partition on all "
            "bundles; mining-on-armv7 mutation warns", ok);
}

}  // namespace

int main() {
  try {
    criterion_1();
    criterion_2();
    criteria_3_4_5();
    criterion_6();
    criterion_7();
    criterion_8();
  } catch (const std::exception& e) {
    std::cout << "FAIL suite aborted: " << e.what() << "\n";
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed"
                              : std::to_string(failures) + " criteria failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}
