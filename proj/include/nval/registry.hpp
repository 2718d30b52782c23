#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nval/actions.hpp"
#include "nval/subprocess.hpp"

namespace nval {

struct InvokeContext {
  std::string experiment_id;
  std::filesystem::path dataset_dir;
  std::uint64_t seed = 0;
  int timeout_s = 600;
};

using Invoker = std::function<ActionOutcome(const ActionInput&, const InvokeContext&)>;

struct ActionEntry {
  ActionDescriptor desc;
  Invoker run;
};

using BuiltinTable = std::map<std::string, ActionEntry>;

class ActionRegistry {
 public:
  void add(ActionEntry entry) {
    for (const auto& e : entries_)
      if (e.desc.action_id == entry.desc.action_id)
        throw DuplicateIdError("duplicate action id '" + entry.desc.action_id + "'");
    entries_.push_back(std::move(entry));
  }

  const std::vector<ActionEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }

  const ActionEntry* find(const std::string& action_id) const {
    for (const auto& e : entries_)
      if (e.desc.action_id == action_id) return &e;
    return nullptr;
  }

  // Registry-ordered indices of one kind.
  std::vector<size_t> indices_of(ActionKind kind) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].desc.kind == kind) out.push_back(i);
    return out;
  }

  size_t count_of(ActionKind kind) const { return indices_of(kind).size(); }

 private:
  std::vector<ActionEntry> entries_;
};

// ---------------------------------------------------------------------------
// External actions: executables speaking JSON over stdio.
//   <exe> describe            -> descriptor JSON on stdout, exit 0
//   <exe> deploy|evaluate|verify|teardown
//                             -> request JSON on stdin, response JSON on stdout

inline ActionEntry make_external_entry(const std::filesystem::path& exe,
                                       int timeout_s = 600) {
  auto describe = run_subprocess({exe.string(), "describe"}, "", timeout_s * 1000);
  if (describe.timed_out)
    throw DescribeError("describe timed out for '" + exe.string() + "'");
  if (describe.exit_code != 0)
    throw DescribeError("describe failed for '" + exe.string() +
                        "' (exit " + std::to_string(describe.exit_code) +
                        "): " + describe.err);
  Json desc_json;
  try {
    desc_json = Json::parse(describe.out);
  } catch (const Json::parse_error&) {
    throw DescribeError("invalid descriptor JSON from '" + exe.string() + "'");
  }
  ActionEntry entry;
  entry.desc = ActionDescriptor::from_json(desc_json);
  std::string exe_path = exe.string();
  entry.run = [exe_path](const ActionInput& input, const InvokeContext& ctx) {
    auto res = run_subprocess({exe_path, to_string(input.kind)},
                              input.to_json().dump(), ctx.timeout_s * 1000);
    if (res.timed_out)
      throw TimeoutError("'" + exe_path + "' timed out after " +
                         std::to_string(ctx.timeout_s) + " s");
    if (res.exit_code != 0)
      return ActionOutcome::failure("NonzeroExit(" + std::to_string(res.exit_code) +
                                    "): " + res.err);
    Json rj;
    try {
      rj = Json::parse(res.out);
    } catch (const Json::parse_error&) {
      throw ProtocolError("malformed response from '" + exe_path + "'");
    }
    ActionOutcome outcome;
    auto status = rj.value("status", "");
    if (status != "success" && status != "failure")
      throw ProtocolError("response from '" + exe_path +
                          "' lacks status success|failure");
    outcome.ok = status == "success";
    outcome.diagnostics = rj.value("diagnostics", "");
    if (!outcome.ok && outcome.diagnostics.empty())
      outcome.diagnostics = "external action reported failure";
    for (const auto& e : rj.value("endpoints", Json::array()))
      outcome.endpoints.push_back(e.get<std::string>());
    for (const auto& d : rj.value("datasets", Json::array()))
      outcome.datasets.push_back(d.get<std::string>());
    if (rj.contains("report"))
      outcome.report = VerificationReport::from_json(rj.at("report"));
    return outcome;
  };
  return entry;
}

// ---------------------------------------------------------------------------
// Registry manifest: one entry per line, `builtin:<name>` or `exec:<path>`,
// `#` starts a comment.

inline ActionRegistry load_registry(const std::filesystem::path& manifest,
                                    const BuiltinTable& builtins,
                                    int timeout_s = 600) {
  std::ifstream in(manifest);
  if (!in) throw ManifestError("cannot read manifest '" + manifest.string() + "'");
  ActionRegistry registry;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    auto where = manifest.string() + ":" + std::to_string(lineno);
    if (line.rfind("builtin:", 0) == 0) {
      auto name = line.substr(8);
      auto it = builtins.find(name);
      if (it == builtins.end())
        throw ManifestError(where + ": unknown builtin action '" + name + "'");
      registry.add(it->second);
    } else if (line.rfind("exec:", 0) == 0) {
      registry.add(make_external_entry(line.substr(5), timeout_s));
    } else {
      throw ManifestError(where + ": expected builtin:<name> or exec:<path>");
    }
  }
  return registry;
}

struct InvokeResult {
  ActionOutcome outcome;
  std::int64_t duration_ms = 0;
};

inline InvokeResult invoke_action(const ActionEntry& entry, const ActionInput& input,
                                  const InvokeContext& ctx) {
  if (!input_matches_kind(input.kind, entry.desc.kind))
    throw KindMismatchError(std::string("input kind '") + to_string(input.kind) +
                            "' does not match action '" + entry.desc.action_id + "'");
  auto start = std::chrono::steady_clock::now();
  ActionOutcome outcome = entry.run(input, ctx);
  auto duration = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  return {std::move(outcome), duration};
}

}  // namespace nval
