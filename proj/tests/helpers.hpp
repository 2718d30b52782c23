#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "nval/model.hpp"

namespace testutil {

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path bundle_dir() {
  if (const char* env = std::getenv("NVAL_BUNDLE_DIR")) return env;
  return "bundles";
}

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("nval-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
              std::to_string(counter.fetch_add(1)));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// One channel with hosts of the given architectures; valid by construction.
inline nval::BndModel channel_model(const std::string& channel_id,
                                    const std::string& consensus,
                                    const std::vector<std::string>& archs) {
  using namespace nval;
  BndModel m;
  m.vertices.push_back({"owner", VertexKind::Participant, {{"name", Json("Owner")}}});
  m.vertices.push_back({"proc", VertexKind::Process, {}});
  m.edges.push_back({"e-pp", EdgeKind::ParticipateInProcess, "owner", "proc", {}});
  m.vertices.push_back({channel_id, VertexKind::Channel,
                        {{"consensus_protocol", Json(consensus)}}});
  for (size_t i = 0; i < archs.size(); ++i) {
    std::string host = channel_id + "-host" + std::to_string(i);
    std::string bn = channel_id + "-bn" + std::to_string(i);
    m.vertices.push_back({host, VertexKind::ComputeNode,
                          {{"hostname", Json(host)},
                           {"hw_arch", Json(archs[i])},
                           {"os", Json("linux")}}});
    m.vertices.push_back({bn, VertexKind::BNode, {{"node_type", Json("full")}}});
    m.edges.push_back({"e-ch-" + bn, EdgeKind::InChannel, bn, channel_id, {}});
    m.edges.push_back({"e-dn-" + bn, EdgeKind::DeployOnNode, bn, host, {}});
    m.edges.push_back({"e-ctl-" + bn, EdgeKind::ControlBNode, "owner", bn, {}});
  }
  return m;
}

inline nval::BndModel merge_models(const std::vector<nval::BndModel>& models) {
  nval::BndModel out;
  std::set<std::string> vids, eids;
  for (const auto& m : models) {
    for (const auto& v : m.vertices)
      if (vids.insert(v.id).second) out.vertices.push_back(v);
    for (const auto& e : m.edges)
      if (eids.insert(e.id).second) out.edges.push_back(e);
  }
  return out;
}

// Structurally valid random model: channels, hosts, BNodes with exactly one
// InChannel/DeployOnNode/ControlBNode each, random extra props.
inline nval::BndModel random_valid_model(std::mt19937_64& rng) {
  using namespace nval;
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const std::vector<std::string> archs{"x64", "armv7", "armv6", "riscv"};
  const std::vector<std::string> protos{"Ethereum PoA (Clique)",
                                        "Ethereum PoW (Ethash)", "Baseline",
                                        "Fabric Raft"};
  const std::vector<std::string> types{"full", "mining", "lightweight", "remote"};

  BndModel m;
  auto random_props = [&](PropertyBag& bag) {
    for (int i = 0, k = pick(0, 3); i < k; ++i) {
      std::string name = "p" + std::to_string(pick(0, 9));
      switch (pick(0, 2)) {
        case 0: bag[name] = "v" + std::to_string(pick(0, 999)); break;
        case 1: bag[name] = pick(-1000, 1000); break;
        default: bag[name] = pick(0, 1) == 1; break;
      }
    }
  };

  int n_participants = pick(1, 3);
  for (int i = 0; i < n_participants; ++i) {
    Vertex v{"part" + std::to_string(i), VertexKind::Participant, {}};
    random_props(v.props);
    m.vertices.push_back(v);
  }
  int n_procs = pick(0, 2);
  for (int i = 0; i < n_procs; ++i) {
    m.vertices.push_back({"proc" + std::to_string(i), VertexKind::Process, {}});
    if (pick(0, 1))
      m.edges.push_back({"e-pp" + std::to_string(i), EdgeKind::ParticipateInProcess,
                         "part" + std::to_string(pick(0, n_participants - 1)),
                         "proc" + std::to_string(i), {}});
  }
  int n_hosts = pick(1, 5);
  int n_nets = pick(0, 2);
  for (int i = 0; i < n_nets; ++i)
    m.vertices.push_back({"net" + std::to_string(i), VertexKind::Network, {}});
  for (int i = 0; i < n_hosts; ++i) {
    Vertex v{"host" + std::to_string(i), VertexKind::ComputeNode,
             {{"hostname", Json("host" + std::to_string(i))},
              {"hw_arch", Json(archs[pick(0, archs.size() - 1)])},
              {"os", Json("linux")}}};
    random_props(v.props);
    m.vertices.push_back(v);
    if (n_nets > 0 && pick(0, 1))
      m.edges.push_back({"e-in" + std::to_string(i), EdgeKind::InNetwork,
                         v.id, "net" + std::to_string(pick(0, n_nets - 1)), {}});
  }
  int n_channels = pick(0, 3);
  int bn_seq = 0;
  for (int c = 0; c < n_channels; ++c) {
    std::string cid = "chan" + std::to_string(c);
    Vertex ch{cid, VertexKind::Channel,
              {{"consensus_protocol", Json(protos[pick(0, protos.size() - 1)])}}};
    random_props(ch.props);
    m.vertices.push_back(ch);
    for (int b = 0, k = pick(1, 4); b < k; ++b) {
      std::string bid = "bn" + std::to_string(bn_seq++);
      m.vertices.push_back(
          {bid, VertexKind::BNode, {{"node_type", Json(types[pick(0, types.size() - 1)])}}});
      m.edges.push_back({"e-ch-" + bid, EdgeKind::InChannel, bid, cid, {}});
      m.edges.push_back({"e-dn-" + bid, EdgeKind::DeployOnNode, bid,
                         "host" + std::to_string(pick(0, n_hosts - 1)), {}});
      m.edges.push_back({"e-ctl-" + bid, EdgeKind::ControlBNode,
                         "part" + std::to_string(pick(0, n_participants - 1)), bid, {}});
    }
  }
  return m;
}

}  // namespace testutil
