#include "fedsim/gossip.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "fedsim/rng.hpp"

namespace fedsim {

GossipTopology complete_topology(const std::vector<std::string>& ids) {
  GossipTopology t;
  for (const std::string& a : ids) {
    auto& adj = t.adjacency[a];
    for (const std::string& b : ids) {
      if (b != a) adj.push_back(b);
    }
    std::sort(adj.begin(), adj.end());
  }
  return t;
}

GossipTopology ring_topology(const std::vector<std::string>& ids) {
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  GossipTopology t;
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::string> adj;
    if (n > 1) {
      adj.insert(sorted[(i + 1) % n]);
      adj.insert(sorted[(i + n - 1) % n]);
    }
    t.adjacency[sorted[i]].assign(adj.begin(), adj.end());
  }
  return t;
}

void validate_topology(const GossipTopology& topology) {
  for (const auto& [id, neighbors] : topology.adjacency) {
    std::set<std::string> seen;
    for (const std::string& peer : neighbors) {
      if (peer == id) {
        raise(ErrorCode::kTopology, "gossip: self-loop at " + id);
      }
      if (!seen.insert(peer).second) {
        raise(ErrorCode::kTopology,
              "gossip: duplicate neighbour " + peer + " at " + id);
      }
      auto it = topology.adjacency.find(peer);
      if (it == topology.adjacency.end()) {
        raise(ErrorCode::kTopology, "gossip: unknown neighbour " + peer);
      }
      if (std::find(it->second.begin(), it->second.end(), id) ==
          it->second.end()) {
        raise(ErrorCode::kTopology,
              "gossip: edge " + id + " -> " + peer + " is not symmetric");
      }
    }
  }
  if (!topology_connected(topology)) {
    raise(ErrorCode::kTopology, "gossip: topology is not connected");
  }
}

bool topology_connected(const GossipTopology& topology) {
  if (topology.adjacency.empty()) return true;
  std::set<std::string> visited;
  std::deque<std::string> frontier{topology.adjacency.begin()->first};
  visited.insert(frontier.front());
  while (!frontier.empty()) {
    const std::string id = std::move(frontier.front());
    frontier.pop_front();
    for (const std::string& peer : topology.adjacency.at(id)) {
      if (visited.insert(peer).second) frontier.push_back(peer);
    }
  }
  return visited.size() == topology.adjacency.size();
}

const char* gossip_mode_name(GossipMode mode) {
  switch (mode) {
    case GossipMode::kSymmetric: return "symmetric";
    case GossipMode::kRotatingLeader: return "rotating_leader";
  }
  return "?";
}

GossipMode gossip_mode_from_name(const std::string& name) {
  if (name == "symmetric") return GossipMode::kSymmetric;
  if (name == "rotating_leader") return GossipMode::kRotatingLeader;
  raise(ErrorCode::kConfig, "unknown gossip mode: " + name);
}

namespace {

// [start, start + len) of segment s when dim is cut into `segments`
// near-equal contiguous blocks.
std::pair<std::size_t, std::size_t> segment_range(std::size_t dim,
                                                  int segments, int s) {
  const std::size_t base = dim / static_cast<std::size_t>(segments);
  const std::size_t rem = dim % static_cast<std::size_t>(segments);
  const std::size_t u = static_cast<std::size_t>(s);
  const std::size_t start = u * base + std::min(u, rem);
  const std::size_t len = base + (u < rem ? 1 : 0);
  return {start, len};
}

}  // namespace

std::map<std::string, ParamVector> gossip_round(
    std::map<std::string, ParamVector> states, const GossipTopology& topology,
    int fanout, int segments, std::uint64_t seed, int round, GossipMode mode,
    GossipTraffic* traffic) {
  if (states.empty()) raise(ErrorCode::kConfig, "gossip: no states");
  const std::size_t dim = states.begin()->second.dim();
  for (const auto& [id, v] : states) {
    if (v.dim() != dim) {
      raise(ErrorCode::kShape, "gossip: dimension mismatch at " + id);
    }
    if (!topology.adjacency.count(id)) {
      raise(ErrorCode::kTopology, "gossip: no adjacency entry for " + id);
    }
  }
  if (fanout < 1) raise(ErrorCode::kConfig, "gossip: fanout must be >= 1");
  if (segments < 1 || static_cast<std::size_t>(segments) > std::max<std::size_t>(1, dim)) {
    raise(ErrorCode::kConfig, "gossip: segments must be in [1, dim]");
  }

  std::vector<std::string> ids;
  ids.reserve(states.size());
  for (const auto& [id, _] : states) ids.push_back(id);

  if (mode == GossipMode::kRotatingLeader) {
    // Seeded round-robin leadership; the leader collects everything and
    // broadcasts the plain mean.
    std::vector<std::size_t> order(ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng lr = Rng::substream(seed, "gossip-leader");
    lr.shuffle(order);
    const std::string& leader =
        ids[order[static_cast<std::size_t>(round) % order.size()]];

    std::vector<double> mean(dim, 0.0);
    for (const std::string& id : ids) {
      for (std::size_t f = 0; f < dim; ++f) mean[f] += states[id].values[f];
    }
    for (auto& v : mean) v /= static_cast<double>(ids.size());
    for (const std::string& id : ids) states[id].values = mean;
    if (traffic) {
      traffic->leader = leader;
      traffic->exchanges = static_cast<int>(ids.size()) - 1;
      traffic->bytes_exchanged =
          2 * (ids.size() - 1) * dim * sizeof(double);  // collect + broadcast
    }
    return states;
  }

  Rng rng = Rng::substream(seed, "gossip", static_cast<std::uint64_t>(round));
  for (const std::string& id : ids) {
    std::vector<std::string> pool = topology.adjacency.at(id);
    const std::size_t picks =
        std::min<std::size_t>(static_cast<std::size_t>(fanout), pool.size());
    for (std::size_t p = 0; p < picks; ++p) {
      // Partial Fisher-Yates: position p gets a uniform pick of the rest.
      const std::size_t j = p + rng.uniform_int(pool.size() - p);
      std::swap(pool[p], pool[j]);
      const std::string& peer = pool[p];
      const int s = static_cast<int>(rng.uniform_int(
          static_cast<std::uint64_t>(segments)));
      const auto [start, len] = segment_range(dim, segments, s);
      auto& mine = states[id].values;
      auto& theirs = states[peer].values;
      for (std::size_t f = start; f < start + len; ++f) {
        const double m = 0.5 * (mine[f] + theirs[f]);
        mine[f] = m;
        theirs[f] = m;
      }
      if (traffic) {
        ++traffic->exchanges;
        traffic->bytes_exchanged += 2 * len * sizeof(double);
      }
    }
  }
  return states;
}

}  // namespace fedsim
