#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

// Undirected peer graph. Adjacency lists must be symmetric, free of
// self-loops, and name only known clients.
struct GossipTopology {
  std::map<std::string, std::vector<std::string>> adjacency;
};

GossipTopology complete_topology(const std::vector<std::string>& ids);
GossipTopology ring_topology(const std::vector<std::string>& ids);

void validate_topology(const GossipTopology& topology);  // kTopology on fault
bool topology_connected(const GossipTopology& topology);

enum class GossipMode { kSymmetric, kRotatingLeader };

const char* gossip_mode_name(GossipMode mode);
GossipMode gossip_mode_from_name(const std::string& name);

struct GossipTraffic {
  std::uint64_t bytes_exchanged = 0;  // both directions, all exchanges
  int exchanges = 0;
  std::string leader;  // rotating-leader mode only
};

// One serverless averaging round. Symmetric mode: clients take turns in
// id order; each picks `fanout` distinct random neighbours and one of
// `segments` contiguous parameter blocks (equal sizes, first blocks one
// longer), and both ends replace that block with its pairwise mean.
// Rotating-leader mode: a seeded round-robin leader collects every
// state and broadcasts the plain mean. Either way the mean over all
// clients is conserved up to rounding.
std::map<std::string, ParamVector> gossip_round(
    std::map<std::string, ParamVector> states, const GossipTopology& topology,
    int fanout, int segments, std::uint64_t seed, int round,
    GossipMode mode = GossipMode::kSymmetric, GossipTraffic* traffic = nullptr);

}  // namespace fedsim
