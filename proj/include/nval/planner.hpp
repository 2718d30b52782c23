#pragma once

#include <cstdint>
#include <deque>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nval/model.hpp"
#include "nval/registry.hpp"

namespace nval {

struct Request {
  BndModel model;
  // (channel_id, metric_group) pairs, normalized tokens.
  std::vector<std::pair<std::string, std::string>> metrics;
};

// Request wire shape: {"model": <BND-JSON>, "metrics":[{"channel":..,"group":..}]}
inline Request parse_request(const Json& j) {
  if (!j.is_object() || !j.contains("model"))
    throw SchemaError("request must carry a 'model' object");
  Request req;
  req.model = parse_bnd(j.at("model").dump());
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& mj : j.value("metrics", Json::array())) {
    if (!mj.is_object() || !mj.contains("channel") || !mj.contains("group"))
      throw SchemaError("metric entries must carry 'channel' and 'group'");
    auto channel = mj.at("channel").get<std::string>();
    auto group = normalize_token(mj.at("group").get<std::string>());
    if (!seen.insert({channel, group}).second)
      throw SchemaError("duplicate metric request (" + channel + ", " + group + ")");
    if (const Vertex* v = req.model.find_vertex(channel);
        !v || v->kind != VertexKind::Channel)
      throw UnknownChannelError("metric request names unknown channel '" +
                                channel + "'");
    req.metrics.emplace_back(channel, group);
  }
  return req;
}

inline Json request_to_json(const Request& req) {
  Json j;
  j["model"] = to_json(req.model);
  j["metrics"] = Json::array();
  for (const auto& [channel, group] : req.metrics)
    j["metrics"].push_back({{"channel", channel}, {"group", group}});
  return j;
}

struct RequestComponent {
  enum class Type { Deployment, Evaluation };
  Type type = Type::Deployment;
  std::string channel_id;
  std::string metric_group;  // Evaluation only

  bool operator==(const RequestComponent&) const = default;
};

// Stable component order: deployments first (lexicographic by channel), then
// evaluations (lexicographic by channel, group).
inline std::pair<std::vector<RequestComponent>, std::vector<RequestComponent>>
decompose_request(const Request& request) {
  std::vector<RequestComponent> deploys, evals;
  for (const auto& channel : list_channels(request.model))
    deploys.push_back({RequestComponent::Type::Deployment, channel, ""});
  auto metrics = request.metrics;
  std::sort(metrics.begin(), metrics.end());
  for (const auto& [channel, group] : metrics) {
    if (const Vertex* v = request.model.find_vertex(channel);
        !v || v->kind != VertexKind::Channel)
      throw UnknownChannelError("metric request names unknown channel '" +
                                channel + "'");
    evals.push_back({RequestComponent::Type::Evaluation, channel, group});
  }
  return {deploys, evals};
}

// A planning component bundles a request component with the channel
// requirements the matcher needs.
struct PlanComponent {
  RequestComponent comp;
  ChannelRequirements reqs;  // reqs.platform also drives evaluator matching
};

// ---------------------------------------------------------------------------
// Request state: (v, d, e, req[n+m]) with values in {-1, 0, 1}.

struct RequestState {
  std::int8_t v = 0, d = 0, e = 0;
  std::vector<std::int8_t> req;

  bool operator==(const RequestState&) const = default;

  std::vector<int> tuple() const {
    std::vector<int> t{v, d, e};
    for (auto r : req) t.push_back(r);
    return t;
  }

  std::string key() const {
    std::string k;
    k.reserve(req.size() + 3);
    auto push = [&](std::int8_t x) { k.push_back(static_cast<char>('1' + x)); };
    push(v);
    push(d);
    push(e);
    for (auto r : req) push(r);
    return k;
  }
};

inline RequestState initial_state(size_t n, size_t m) {
  RequestState s;
  s.req.assign(n + m, 0);
  return s;
}

inline bool is_goal(const RequestState& s) {
  if (s.v != 1 || s.d != 1 || s.e != 1) return false;
  for (auto r : s.req)
    if (r != 1) return false;
  return true;
}

struct ActionCall {
  size_t action_index = 0;  // index into registry entries
  int component = -1;       // index into components, -1 for verify

  bool operator==(const ActionCall&) const = default;
};

// STEP-COST is uniform; kept as a function so other cost models can slot in.
inline int step_cost(const RequestState&, const ActionCall&) { return 1; }

// ACTIONS(s): verifiers while v=0, then deployers x pending deployment
// components, then evaluators x pending evaluation components.
inline std::vector<ActionCall> available_calls(const RequestState& state, size_t n,
                                               size_t m,
                                               const ActionRegistry& registry) {
  std::vector<ActionCall> calls;
  if (state.v == 0) {
    for (size_t i : registry.indices_of(ActionKind::Verifier))
      calls.push_back({i, -1});
    return calls;
  }
  if (state.d == 0) {
    for (size_t i : registry.indices_of(ActionKind::Deployer))
      for (size_t c = 0; c < n; ++c)
        if (state.req[c] == 0) calls.push_back({i, static_cast<int>(c)});
    return calls;
  }
  if (state.e == 0) {
    for (size_t i : registry.indices_of(ActionKind::Evaluator))
      for (size_t c = n; c < n + m; ++c)
        if (state.req[c] == 0) calls.push_back({i, static_cast<int>(c)});
    return calls;
  }
  return calls;
}

// RESULT(s, a): verifier plans verification; a matching deployer/evaluator
// flips its component to 1 and aggregates d/e; a non-matching action leaves
// the state unchanged (the visited set prunes that branch).
inline RequestState apply_call(const RequestState& state, const ActionCall& call,
                               const std::vector<PlanComponent>& components,
                               size_t n, const ActionRegistry& registry,
                               const MatchPolicy& policy = {}) {
  auto available = available_calls(state, n, components.size() - n, registry);
  if (std::find(available.begin(), available.end(), call) == available.end())
    throw IllegalCallError("call is not available in this state");

  RequestState next = state;
  const ActionDescriptor& desc = registry.entries()[call.action_index].desc;
  if (desc.kind == ActionKind::Verifier) {
    next.v = 1;
    return next;
  }
  const PlanComponent& pc = components[call.component];
  bool matched = desc.kind == ActionKind::Deployer
                     ? matches_deployer(desc, pc.reqs, policy)
                     : matches_evaluator(desc, pc.reqs.platform,
                                         pc.comp.metric_group);
  if (!matched) return next;
  next.req[call.component] = 1;
  if (desc.kind == ActionKind::Deployer) {
    bool all = true;
    for (size_t c = 0; c < n; ++c) all = all && next.req[c] == 1;
    if (all) next.d = 1;
  } else {
    bool all = true;
    for (size_t c = n; c < next.req.size(); ++c) all = all && next.req[c] == 1;
    if (all) next.e = 1;
  }
  return next;
}

// ---------------------------------------------------------------------------
// Plans

struct PlanCall {
  std::string action_id;
  RequestComponent::Type type = RequestComponent::Type::Deployment;
  bool is_verify = false;
  std::string channel_id;
  std::string metric_group;

  bool operator==(const PlanCall&) const = default;
};

struct ExecutionPlan {
  std::vector<PlanCall> calls;
  int total_cost = 0;
};

struct PlanningOutcome {
  bool satisfiable = false;
  ExecutionPlan plan;                          // when satisfiable
  std::vector<RequestComponent> unmatched;     // when not
};

inline Json plan_to_json(const PlanningOutcome& outcome) {
  Json j;
  j["satisfiable"] = outcome.satisfiable;
  if (outcome.satisfiable) {
    j["calls"] = Json::array();
    for (const auto& call : outcome.plan.calls) {
      Json input;
      if (call.is_verify) {
        input = {{"kind", "verify"}};
      } else if (call.type == RequestComponent::Type::Deployment) {
        input = {{"kind", "deploy"}, {"channel", call.channel_id}};
      } else {
        input = {{"kind", "evaluate"},
                 {"channel", call.channel_id},
                 {"group", call.metric_group}};
      }
      j["calls"].push_back({{"action_id", call.action_id}, {"input", input}});
    }
    j["cost"] = outcome.plan.total_cost;
  } else {
    j["unmatched"] = Json::array();
    for (const auto& c : outcome.unmatched) {
      Json cj{{"kind", c.type == RequestComponent::Type::Deployment ? "deploy"
                                                                    : "evaluate"},
              {"channel", c.channel_id}};
      if (c.type == RequestComponent::Type::Evaluation)
        cj["group"] = c.metric_group;
      j["unmatched"].push_back(std::move(cj));
    }
  }
  return j;
}

// Breadth-first search over the request's state space. Returns the shortest
// goal-reaching call sequence, or the components no registered action matches.
inline PlanningOutcome plan_components(const std::vector<PlanComponent>& components,
                                       size_t n, const ActionRegistry& registry,
                                       const MatchPolicy& policy = {}) {
  const size_t m = components.size() - n;
  RequestState start = initial_state(n, m);
  if (registry.count_of(ActionKind::Verifier) == 0) start.v = 1;
  if (n == 0) start.d = 1;
  if (m == 0) start.e = 1;

  struct Node {
    RequestState state;
    std::vector<ActionCall> path;
  };
  std::deque<Node> frontier;
  std::unordered_set<std::string> visited;
  frontier.push_back({start, {}});
  visited.insert(start.key());

  std::vector<ActionCall> goal_path;
  bool found = false;
  while (!frontier.empty() && !found) {
    Node node = std::move(frontier.front());
    frontier.pop_front();
    if (is_goal(node.state)) {
      goal_path = node.path;
      found = true;
      break;
    }
    for (const auto& call : available_calls(node.state, n, m, registry)) {
      RequestState next = apply_call(node.state, call, components, n, registry, policy);
      if (!visited.insert(next.key()).second) continue;
      auto path = node.path;
      path.push_back(call);
      frontier.push_back({std::move(next), std::move(path)});
    }
  }

  PlanningOutcome outcome;
  if (!found) {
    for (const auto& pc : components) {
      bool matched = false;
      if (pc.comp.type == RequestComponent::Type::Deployment) {
        for (size_t i : registry.indices_of(ActionKind::Deployer))
          matched = matched ||
                    matches_deployer(registry.entries()[i].desc, pc.reqs, policy);
      } else {
        for (size_t i : registry.indices_of(ActionKind::Evaluator))
          matched = matched || matches_evaluator(registry.entries()[i].desc,
                                                 pc.reqs.platform,
                                                 pc.comp.metric_group);
      }
      if (!matched) outcome.unmatched.push_back(pc.comp);
    }
    return outcome;
  }

  outcome.satisfiable = true;
  for (const auto& call : goal_path) {
    PlanCall pc;
    pc.action_id = registry.entries()[call.action_index].desc.action_id;
    if (call.component < 0) {
      pc.is_verify = true;
    } else {
      const auto& comp = components[call.component].comp;
      pc.type = comp.type;
      pc.channel_id = comp.channel_id;
      pc.metric_group = comp.metric_group;
    }
    outcome.plan.calls.push_back(std::move(pc));
    outcome.plan.total_cost += step_cost({}, call);
  }
  return outcome;
}

inline std::vector<PlanComponent> build_components(const Request& request,
                                                   size_t* n_out = nullptr) {
  auto [deploys, evals] = decompose_request(request);
  std::map<std::string, ChannelRequirements> reqs_by_channel;
  for (const auto& channel : list_channels(request.model))
    reqs_by_channel[channel] = derive_channel_requirements(
        extract_channel_fragment(request.model, channel));
  std::vector<PlanComponent> components;
  for (const auto& c : deploys)
    components.push_back({c, reqs_by_channel.at(c.channel_id)});
  for (const auto& c : evals)
    components.push_back({c, reqs_by_channel.at(c.channel_id)});
  if (n_out) *n_out = deploys.size();
  return components;
}

inline PlanningOutcome plan(const Request& request, const ActionRegistry& registry,
                            const MatchPolicy& policy = {}) {
  size_t n = 0;
  auto components = build_components(request, &n);
  return plan_components(components, n, registry, policy);
}

}  // namespace nval
