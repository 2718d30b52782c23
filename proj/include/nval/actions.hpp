#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nval/errors.hpp"
#include "nval/model.hpp"
#include "nval/tokens.hpp"

namespace nval {

enum class ActionKind { Verifier, Deployer, Evaluator };

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Verifier: return "verifier";
    case ActionKind::Deployer: return "deployer";
    case ActionKind::Evaluator: return "evaluator";
  }
  return "?";
}

inline std::optional<ActionKind> action_kind_from(const std::string& s) {
  if (s == "verifier") return ActionKind::Verifier;
  if (s == "deployer") return ActionKind::Deployer;
  if (s == "evaluator") return ActionKind::Evaluator;
  return std::nullopt;
}

struct ActionDescriptor {
  std::string action_id;
  ActionKind kind = ActionKind::Verifier;
  std::set<std::string> platforms;
  std::set<std::string> archs;
  bool supports_mixed = false;
  std::set<std::string> metric_groups;
  std::set<std::string> oses;  // optional OS dimension, unmatched by default
  std::string description;

  Json to_json() const {
    Json j;
    j["action_id"] = action_id;
    j["kind"] = to_string(kind);
    j["platforms"] = platforms;
    j["archs"] = archs;
    j["supports_mixed"] = supports_mixed;
    j["metric_groups"] = metric_groups;
    if (!oses.empty()) j["oses"] = oses;
    j["description"] = description;
    return j;
  }

  static ActionDescriptor from_json(const Json& j) {
    ActionDescriptor d;
    if (!j.is_object() || !j.contains("action_id") || !j.contains("kind"))
      throw DescribeError("descriptor must carry action_id and kind");
    d.action_id = j.at("action_id").get<std::string>();
    auto kind = action_kind_from(j.at("kind").get<std::string>());
    if (!kind)
      throw DescribeError("unknown action kind '" +
                          j.at("kind").get<std::string>() + "'");
    d.kind = *kind;
    auto tokens = [](const Json& arr) {
      std::set<std::string> out;
      for (const auto& t : arr) out.insert(normalize_token(t.get<std::string>()));
      return out;
    };
    d.platforms = tokens(j.value("platforms", Json::array()));
    d.archs = tokens(j.value("archs", Json::array()));
    d.supports_mixed = j.value("supports_mixed", false);
    d.metric_groups = tokens(j.value("metric_groups", Json::array()));
    d.oses = tokens(j.value("oses", Json::array()));
    d.description = j.value("description", "");
    if (d.kind == ActionKind::Deployer && (d.platforms.empty() || d.archs.empty()))
      throw DescribeError("deployer '" + d.action_id +
                          "' must declare platforms and archs");
    if (d.kind == ActionKind::Evaluator &&
        (d.platforms.empty() || d.metric_groups.empty()))
      throw DescribeError("evaluator '" + d.action_id +
                          "' must declare platforms and metric_groups");
    return d;
  }
};

enum class InputKind { Verify, Deploy, Evaluate, Teardown };

inline const char* to_string(InputKind k) {
  switch (k) {
    case InputKind::Verify: return "verify";
    case InputKind::Deploy: return "deploy";
    case InputKind::Evaluate: return "evaluate";
    case InputKind::Teardown: return "teardown";
  }
  return "?";
}

struct ActionInput {
  InputKind kind = InputKind::Verify;
  Json request_doc;                 // Verify
  Json channel_fragment;            // Deploy, Evaluate (BND-JSON)
  std::string channel_id;           // Deploy, Evaluate, Teardown
  std::string metric_group;         // Evaluate
  std::vector<std::string> endpoints;  // Evaluate, Teardown

  Json to_json() const {
    Json j;
    j["input_kind"] = to_string(kind);
    switch (kind) {
      case InputKind::Verify:
        j["request"] = request_doc;
        break;
      case InputKind::Deploy:
        j["channel_fragment"] = channel_fragment;
        j["channel_id"] = channel_id;
        break;
      case InputKind::Evaluate:
        j["channel_fragment"] = channel_fragment;
        j["channel_id"] = channel_id;
        j["metric_group"] = metric_group;
        j["endpoints"] = endpoints;
        break;
      case InputKind::Teardown:
        j["channel_id"] = channel_id;
        j["endpoints"] = endpoints;
        break;
    }
    return j;
  }
};

struct ActionOutcome {
  bool ok = true;
  VerificationReport report;           // verify payload
  std::vector<std::string> endpoints;  // deploy payload
  std::vector<std::string> datasets;   // evaluate payload
  std::string diagnostics;

  static ActionOutcome failure(std::string diagnostics) {
    ActionOutcome o;
    o.ok = false;
    o.diagnostics = std::move(diagnostics);
    return o;
  }
};

// Teardown is valid only against deployers; other inputs must match the kind.
inline bool input_matches_kind(InputKind input, ActionKind kind) {
  switch (input) {
    case InputKind::Verify: return kind == ActionKind::Verifier;
    case InputKind::Deploy: return kind == ActionKind::Deployer;
    case InputKind::Evaluate: return kind == ActionKind::Evaluator;
    case InputKind::Teardown: return kind == ActionKind::Deployer;
  }
  return false;
}

struct MatchPolicy {
  bool match_os = false;  // Table-1 OS dimension; off by default
};

inline bool matches_deployer(const ActionDescriptor& desc,
                             const ChannelRequirements& req,
                             const MatchPolicy& policy = {}) {
  if (desc.kind != ActionKind::Deployer)
    throw KindMismatchError("matches_deployer on non-deployer '" +
                            desc.action_id + "'");
  bool platform_ok = false;
  for (const auto& p : desc.platforms)
    if (token_prefix_match(req.platform, p)) platform_ok = true;
  if (!platform_ok) return false;
  for (const auto& arch : req.archs)
    if (!desc.archs.count(arch)) return false;
  if (req.mixed && !desc.supports_mixed) return false;
  if (policy.match_os && !desc.oses.empty())
    for (const auto& os : req.oses)
      if (!desc.oses.count(os)) return false;
  return true;
}

inline bool matches_evaluator(const ActionDescriptor& desc,
                              const std::string& platform,
                              const std::string& metric_group) {
  if (desc.kind != ActionKind::Evaluator)
    throw KindMismatchError("matches_evaluator on non-evaluator '" +
                            desc.action_id + "'");
  bool platform_ok = false;
  for (const auto& p : desc.platforms)
    if (token_prefix_match(platform, p)) platform_ok = true;
  return platform_ok && desc.metric_groups.count(metric_group) > 0;
}

}  // namespace nval
