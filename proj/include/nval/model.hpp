#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nval/errors.hpp"
#include "nval/tokens.hpp"

namespace nval {

using Json = nlohmann::json;

// Property values are restricted to string | integer | boolean.
using PropertyBag = std::map<std::string, Json>;

enum class VertexKind { Participant, Process, BNode, Channel, ComputeNode, Network };
enum class EdgeKind { ParticipateInProcess, ControlBNode, InChannel, DeployOnNode, InNetwork };

inline const char* to_string(VertexKind k) {
  switch (k) {
    case VertexKind::Participant: return "Participant";
    case VertexKind::Process: return "Process";
    case VertexKind::BNode: return "BNode";
    case VertexKind::Channel: return "Channel";
    case VertexKind::ComputeNode: return "ComputeNode";
    case VertexKind::Network: return "Network";
  }
  return "?";
}

inline const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::ParticipateInProcess: return "ParticipateInProcess";
    case EdgeKind::ControlBNode: return "ControlBNode";
    case EdgeKind::InChannel: return "InChannel";
    case EdgeKind::DeployOnNode: return "DeployOnNode";
    case EdgeKind::InNetwork: return "InNetwork";
  }
  return "?";
}

inline std::optional<VertexKind> vertex_kind_from(const std::string& s) {
  if (s == "Participant") return VertexKind::Participant;
  if (s == "Process") return VertexKind::Process;
  if (s == "BNode") return VertexKind::BNode;
  if (s == "Channel") return VertexKind::Channel;
  if (s == "ComputeNode") return VertexKind::ComputeNode;
  if (s == "Network") return VertexKind::Network;
  return std::nullopt;
}

inline std::optional<EdgeKind> edge_kind_from(const std::string& s) {
  if (s == "ParticipateInProcess") return EdgeKind::ParticipateInProcess;
  if (s == "ControlBNode") return EdgeKind::ControlBNode;
  if (s == "InChannel") return EdgeKind::InChannel;
  if (s == "DeployOnNode") return EdgeKind::DeployOnNode;
  if (s == "InNetwork") return EdgeKind::InNetwork;
  return std::nullopt;
}

struct Vertex {
  std::string id;
  VertexKind kind;
  PropertyBag props;

  bool operator==(const Vertex&) const = default;
};

struct Edge {
  std::string id;
  EdgeKind kind;
  std::string from;
  std::string to;
  PropertyBag props;

  bool operator==(const Edge&) const = default;
};

// Endpoint kinds per edge kind.
inline VertexKind edge_from_kind(EdgeKind k) {
  switch (k) {
    case EdgeKind::ParticipateInProcess: return VertexKind::Participant;
    case EdgeKind::ControlBNode: return VertexKind::Participant;
    case EdgeKind::InChannel: return VertexKind::BNode;
    case EdgeKind::DeployOnNode: return VertexKind::BNode;
    case EdgeKind::InNetwork: return VertexKind::ComputeNode;
  }
  return VertexKind::Participant;
}

inline VertexKind edge_to_kind(EdgeKind k) {
  switch (k) {
    case EdgeKind::ParticipateInProcess: return VertexKind::Process;
    case EdgeKind::ControlBNode: return VertexKind::BNode;
    case EdgeKind::InChannel: return VertexKind::Channel;
    case EdgeKind::DeployOnNode: return VertexKind::ComputeNode;
    case EdgeKind::InNetwork: return VertexKind::Network;
  }
  return VertexKind::Process;
}

class BndModel {
 public:
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  const Vertex* find_vertex(const std::string& id) const {
    for (const auto& v : vertices)
      if (v.id == id) return &v;
    return nullptr;
  }

  std::vector<const Vertex*> vertices_of(VertexKind kind) const {
    std::vector<const Vertex*> out;
    for (const auto& v : vertices)
      if (v.kind == kind) out.push_back(&v);
    return out;
  }

  std::vector<const Edge*> edges_of(EdgeKind kind) const {
    std::vector<const Edge*> out;
    for (const auto& e : edges)
      if (e.kind == kind) out.push_back(&e);
    return out;
  }

  // Set equality: order of vertices/edges is irrelevant.
  bool operator==(const BndModel& other) const {
    auto vkey = [](const Vertex& v) { return v.id; };
    auto ekey = [](const Edge& e) { return e.id; };
    std::map<std::string, Vertex> va, vb;
    std::map<std::string, Edge> ea, eb;
    for (const auto& v : vertices) va.emplace(vkey(v), v);
    for (const auto& v : other.vertices) vb.emplace(vkey(v), v);
    for (const auto& e : edges) ea.emplace(ekey(e), e);
    for (const auto& e : other.edges) eb.emplace(ekey(e), e);
    return va == vb && ea == eb;
  }
};

namespace detail {

inline PropertyBag parse_props(const Json& j, const std::string& owner) {
  PropertyBag bag;
  if (j.is_null()) return bag;
  if (!j.is_object())
    throw SchemaError("props of '" + owner + "' must be an object");
  for (const auto& [name, value] : j.items()) {
    if (name.empty())
      throw SchemaError("empty property name in '" + owner + "'");
    if (!value.is_string() && !value.is_number_integer() && !value.is_boolean())
      throw SchemaError("property '" + name + "' of '" + owner +
                        "' must be a string, integer, or boolean");
    bag.emplace(name, value);
  }
  return bag;
}

inline std::string require_string(const Json& j, const char* field,
                                  const std::string& what) {
  if (!j.contains(field) || !j.at(field).is_string() ||
      j.at(field).get<std::string>().empty())
    throw SchemaError(what + ": missing or invalid '" + field + "'");
  return j.at(field).get<std::string>();
}

}  // namespace detail

inline BndModel parse_bnd(const std::string& document) {
  Json j;
  try {
    j = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw SyntaxError(std::string("malformed BND-JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("vertices") || !j.contains("edges") ||
      !j.at("vertices").is_array() || !j.at("edges").is_array())
    throw SchemaError("BND-JSON document must contain vertices[] and edges[]");

  BndModel model;
  std::set<std::string> vertex_ids, edge_ids;
  for (const auto& vj : j.at("vertices")) {
    if (!vj.is_object()) throw SchemaError("vertex entries must be objects");
    Vertex v;
    v.id = detail::require_string(vj, "id", "vertex");
    auto kind = vertex_kind_from(detail::require_string(vj, "kind", "vertex '" + v.id + "'"));
    if (!kind)
      throw SchemaError("unknown vertex kind '" +
                        vj.at("kind").get<std::string>() + "' on '" + v.id + "'");
    v.kind = *kind;
    v.props = detail::parse_props(vj.value("props", Json()), v.id);
    if (!vertex_ids.insert(v.id).second)
      throw SchemaError("duplicate vertex id '" + v.id + "'");
    model.vertices.push_back(std::move(v));
  }
  for (const auto& ej : j.at("edges")) {
    if (!ej.is_object()) throw SchemaError("edge entries must be objects");
    Edge e;
    e.id = detail::require_string(ej, "id", "edge");
    auto kind = edge_kind_from(detail::require_string(ej, "kind", "edge '" + e.id + "'"));
    if (!kind)
      throw SchemaError("unknown edge kind '" + ej.at("kind").get<std::string>() +
                        "' on '" + e.id + "'");
    e.kind = *kind;
    e.from = detail::require_string(ej, "from", "edge '" + e.id + "'");
    e.to = detail::require_string(ej, "to", "edge '" + e.id + "'");
    e.props = detail::parse_props(ej.value("props", Json()), e.id);
    if (!edge_ids.insert(e.id).second)
      throw SchemaError("duplicate edge id '" + e.id + "'");
    if (!vertex_ids.count(e.from))
      throw DanglingEdgeError("edge '" + e.id + "' references missing vertex '" +
                              e.from + "'");
    if (!vertex_ids.count(e.to))
      throw DanglingEdgeError("edge '" + e.id + "' references missing vertex '" +
                              e.to + "'");
    model.edges.push_back(std::move(e));
  }
  return model;
}

inline Json to_json(const BndModel& model) {
  auto vs = model.vertices;
  auto es = model.edges;
  std::sort(vs.begin(), vs.end(), [](auto& a, auto& b) { return a.id < b.id; });
  std::sort(es.begin(), es.end(), [](auto& a, auto& b) { return a.id < b.id; });
  Json j;
  j["vertices"] = Json::array();
  j["edges"] = Json::array();
  for (const auto& v : vs) {
    Json vj{{"id", v.id}, {"kind", to_string(v.kind)}, {"props", Json::object()}};
    for (const auto& [k, val] : v.props) vj["props"][k] = val;
    j["vertices"].push_back(std::move(vj));
  }
  for (const auto& e : es) {
    Json ej{{"id", e.id}, {"kind", to_string(e.kind)}, {"from", e.from},
            {"to", e.to},  {"props", Json::object()}};
    for (const auto& [k, val] : e.props) ej["props"][k] = val;
    j["edges"].push_back(std::move(ej));
  }
  return j;
}

inline std::string serialize_bnd(const BndModel& model) {
  return to_json(model).dump(2);
}

// ---------------------------------------------------------------------------
// Verification reports

enum class Severity { Recommendation = 1, Warning = 2, Error = 3 };
enum class Verdict { NoProblem = 0, Recommendations = 1, Warnings = 2, Errors = 3 };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::NoProblem: return "no_problem";
    case Verdict::Recommendations: return "recommendations";
    case Verdict::Warnings: return "warnings";
    case Verdict::Errors: return "errors";
  }
  return "?";
}

struct Finding {
  Severity severity;
  std::string message;
  std::vector<std::string> entities;
};

struct VerificationReport {
  std::vector<Finding> findings;

  Verdict verdict() const {
    Verdict v = Verdict::NoProblem;
    for (const auto& f : findings)
      v = std::max(v, static_cast<Verdict>(static_cast<int>(f.severity)));
    return v;
  }

  Json to_json() const {
    Json j;
    j["verdict"] = to_string(verdict());
    j["findings"] = Json::array();
    for (const auto& f : findings) {
      const char* sev = f.severity == Severity::Error     ? "error"
                        : f.severity == Severity::Warning ? "warning"
                                                          : "recommendation";
      j["findings"].push_back(
          {{"severity", sev}, {"message", f.message}, {"entities", f.entities}});
    }
    return j;
  }

  static VerificationReport from_json(const Json& j) {
    VerificationReport r;
    for (const auto& fj : j.value("findings", Json::array())) {
      Finding f;
      auto sev = fj.value("severity", "warning");
      f.severity = sev == "error"            ? Severity::Error
                   : sev == "recommendation" ? Severity::Recommendation
                                             : Severity::Warning;
      f.message = fj.value("message", "");
      for (const auto& e : fj.value("entities", Json::array()))
        f.entities.push_back(e.get<std::string>());
      r.findings.push_back(std::move(f));
    }
    return r;
  }
};

struct ValidationOptions {
  // hw_arch tokens considered too weak to host a mining node.
  std::set<std::string> low_power_archs{"armv6", "armv7", "arm"};
};

inline const std::set<std::string>& bnode_types() {
  static const std::set<std::string> kTypes{"full", "mining", "lightweight",
                                            "remote", "interface"};
  return kTypes;
}

inline VerificationReport validate_structure(const BndModel& model,
                                             const ValidationOptions& opts = {}) {
  VerificationReport report;
  auto err = [&](std::string msg, std::vector<std::string> ids) {
    report.findings.push_back({Severity::Error, std::move(msg), std::move(ids)});
  };
  auto warn = [&](std::string msg, std::vector<std::string> ids) {
    report.findings.push_back({Severity::Warning, std::move(msg), std::move(ids)});
  };
  auto recommend = [&](std::string msg, std::vector<std::string> ids) {
    report.findings.push_back(
        {Severity::Recommendation, std::move(msg), std::move(ids)});
  };

  auto str_prop = [](const Vertex& v, const char* name) -> std::optional<std::string> {
    auto it = v.props.find(name);
    if (it == v.props.end() || !it->second.is_string()) return std::nullopt;
    auto s = it->second.get<std::string>();
    if (s.empty()) return std::nullopt;
    return s;
  };

  for (const auto& v : model.vertices) {
    switch (v.kind) {
      case VertexKind::BNode: {
        auto type = str_prop(v, "node_type");
        if (!type || !bnode_types().count(normalize_token(*type)))
          err("BNode '" + v.id +
                  "' must carry node_type in {full, mining, lightweight, remote}",
              {v.id});
        break;
      }
      case VertexKind::Channel:
        if (!str_prop(v, "consensus_protocol"))
          err("Channel '" + v.id + "' must carry a non-empty consensus_protocol",
              {v.id});
        break;
      case VertexKind::ComputeNode:
        for (const char* p : {"hostname", "hw_arch", "os"})
          if (!str_prop(v, p))
            err("ComputeNode '" + v.id + "' must carry property '" + p + "'",
                {v.id});
        break;
      default:
        break;
    }
  }

  for (const auto& e : model.edges) {
    const Vertex* from = model.find_vertex(e.from);
    const Vertex* to = model.find_vertex(e.to);
    if (!from || !to) {
      err("edge '" + e.id + "' has a dangling endpoint", {e.id});
      continue;
    }
    if (from->kind != edge_from_kind(e.kind) || to->kind != edge_to_kind(e.kind))
      err(std::string(to_string(e.kind)) + " edge '" + e.id + "' must connect " +
              to_string(edge_from_kind(e.kind)) + " to " +
              to_string(edge_to_kind(e.kind)),
          {e.id, from->id, to->id});
  }

  // Per-BNode cardinality: exactly one InChannel, DeployOnNode, ControlBNode.
  for (const auto& v : model.vertices) {
    if (v.kind != VertexKind::BNode) continue;
    int in_channel = 0, deploy = 0, control = 0;
    for (const auto& e : model.edges) {
      if (e.kind == EdgeKind::InChannel && e.from == v.id) ++in_channel;
      if (e.kind == EdgeKind::DeployOnNode && e.from == v.id) ++deploy;
      if (e.kind == EdgeKind::ControlBNode && e.to == v.id) ++control;
    }
    if (in_channel != 1)
      err("BNode '" + v.id + "' must have exactly one InChannel edge (has " +
              std::to_string(in_channel) + ")",
          {v.id});
    if (deploy != 1)
      err("BNode '" + v.id + "' must have exactly one DeployOnNode edge (has " +
              std::to_string(deploy) + ")",
          {v.id});
    if (control != 1)
      err("BNode '" + v.id + "' must have exactly one ControlBNode edge (has " +
              std::to_string(control) + ")",
          {v.id});
  }

  // Heuristic: mining nodes on low-power hosts.
  for (const auto& e : model.edges) {
    if (e.kind != EdgeKind::DeployOnNode) continue;
    const Vertex* bnode = model.find_vertex(e.from);
    const Vertex* host = model.find_vertex(e.to);
    if (!bnode || !host || bnode->kind != VertexKind::BNode ||
        host->kind != VertexKind::ComputeNode)
      continue;
    auto type = str_prop(*bnode, "node_type");
    auto arch = str_prop(*host, "hw_arch");
    if (type && arch && normalize_token(*type) == "mining" &&
        opts.low_power_archs.count(normalize_token(*arch)))
      warn("mining node '" + bnode->id + "' is deployed on low-power host '" +
               host->id + "' (" + *arch + ")",
           {bnode->id, host->id});
  }

  // Heuristic: hosts of one channel should share at least one network.
  for (const auto* ch : model.vertices_of(VertexKind::Channel)) {
    std::set<std::string> hosts;
    for (const auto& ic : model.edges) {
      if (ic.kind != EdgeKind::InChannel || ic.to != ch->id) continue;
      for (const auto& dn : model.edges)
        if (dn.kind == EdgeKind::DeployOnNode && dn.from == ic.from)
          hosts.insert(dn.to);
    }
    if (hosts.size() < 2) continue;
    std::map<std::string, size_t> net_hits;
    for (const auto& host : hosts)
      for (const auto& e : model.edges)
        if (e.kind == EdgeKind::InNetwork && e.from == host) ++net_hits[e.to];
    bool shared = false;
    for (const auto& [net, hits] : net_hits)
      if (hits == hosts.size()) shared = true;
    if (!shared)
      warn("hosts of channel '" + ch->id + "' do not share a common network",
           {ch->id});
  }

  for (const auto* proc : model.vertices_of(VertexKind::Process)) {
    bool has_participant = false;
    for (const auto& e : model.edges)
      if (e.kind == EdgeKind::ParticipateInProcess && e.to == proc->id)
        has_participant = true;
    if (!has_participant)
      recommend("process '" + proc->id + "' has no participants", {proc->id});
  }

  return report;
}

// ---------------------------------------------------------------------------
// Channel fragments and requirements

struct ChannelFragment {
  Vertex channel;
  std::vector<Vertex> bnodes;
  std::vector<Vertex> hosts;         // DeployOnNode targets, deduplicated
  std::vector<Vertex> participants;  // ControlBNode sources, deduplicated
  std::vector<Edge> edges;
};

inline std::vector<std::string> list_channels(const BndModel& model) {
  std::vector<std::string> ids;
  for (const auto* v : model.vertices_of(VertexKind::Channel)) ids.push_back(v->id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline ChannelFragment extract_channel_fragment(const BndModel& model,
                                                const std::string& channel_id) {
  const Vertex* channel = model.find_vertex(channel_id);
  if (!channel || channel->kind != VertexKind::Channel)
    throw UnknownChannelError("unknown channel '" + channel_id + "'");

  ChannelFragment frag;
  frag.channel = *channel;
  std::set<std::string> bnode_ids, host_ids, participant_ids;
  for (const auto& e : model.edges) {
    if (e.kind == EdgeKind::InChannel && e.to == channel_id) {
      const Vertex* bn = model.find_vertex(e.from);
      if (bn && bnode_ids.insert(bn->id).second) frag.bnodes.push_back(*bn);
      frag.edges.push_back(e);
    }
  }
  std::sort(frag.bnodes.begin(), frag.bnodes.end(),
            [](auto& a, auto& b) { return a.id < b.id; });
  for (const auto& bn : frag.bnodes) {
    for (const auto& e : model.edges) {
      if (e.kind == EdgeKind::DeployOnNode && e.from == bn.id) {
        const Vertex* host = model.find_vertex(e.to);
        if (host && host_ids.insert(host->id).second) frag.hosts.push_back(*host);
        frag.edges.push_back(e);
      } else if (e.kind == EdgeKind::ControlBNode && e.to == bn.id) {
        const Vertex* p = model.find_vertex(e.from);
        if (p && participant_ids.insert(p->id).second)
          frag.participants.push_back(*p);
        frag.edges.push_back(e);
      }
    }
  }
  std::sort(frag.hosts.begin(), frag.hosts.end(),
            [](auto& a, auto& b) { return a.id < b.id; });
  std::sort(frag.participants.begin(), frag.participants.end(),
            [](auto& a, auto& b) { return a.id < b.id; });
  return frag;
}

// Fragment as a standalone BND-JSON model (deployer input).
inline BndModel fragment_model(const ChannelFragment& frag) {
  BndModel m;
  m.vertices.push_back(frag.channel);
  for (const auto& v : frag.bnodes) m.vertices.push_back(v);
  for (const auto& v : frag.hosts) m.vertices.push_back(v);
  for (const auto& v : frag.participants) m.vertices.push_back(v);
  m.edges = frag.edges;
  return m;
}

struct ChannelRequirements {
  std::string channel_id;
  std::string platform;          // normalized consensus_protocol token
  std::set<std::string> archs;   // normalized hw_arch tokens of the hosts
  std::set<std::string> oses;    // normalized os tokens of the hosts
  bool mixed = false;            // |archs| > 1

  bool operator==(const ChannelRequirements&) const = default;
};

inline ChannelRequirements derive_channel_requirements(const ChannelFragment& frag) {
  ChannelRequirements req;
  req.channel_id = frag.channel.id;
  auto it = frag.channel.props.find("consensus_protocol");
  if (it == frag.channel.props.end() || !it->second.is_string() ||
      it->second.get<std::string>().empty())
    throw MissingPropertyError("channel '" + frag.channel.id +
                               "' lacks consensus_protocol");
  req.platform = normalize_token(it->second.get<std::string>());
  for (const auto& host : frag.hosts) {
    auto ha = host.props.find("hw_arch");
    if (ha == host.props.end() || !ha->second.is_string())
      throw MissingPropertyError("host '" + host.id + "' lacks hw_arch");
    req.archs.insert(normalize_token(ha->second.get<std::string>()));
    auto os = host.props.find("os");
    if (os != host.props.end() && os->second.is_string())
      req.oses.insert(normalize_token(os->second.get<std::string>()));
  }
  req.mixed = req.archs.size() > 1;
  return req;
}

}  // namespace nval
