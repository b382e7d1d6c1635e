#pragma once

#include <string>
#include <vector>

#include "grainrisk/connectedness.hpp"

namespace grainrisk {

enum class NodeRole { transmitter, receiver };

/// Weighted directed graph of net pairwise spillovers. Each unordered pair
/// contributes at most one edge, oriented along the positive NPDC direction.
struct SpilloverNetwork {
  struct Node {
    std::string id;
    double out_strength = 0;  // sum of positive outgoing NPDC
    double net = 0;
    NodeRole role = NodeRole::receiver;
  };
  struct Edge {
    int source = 0, target = 0;  // node indices
    double weight = 0;           // positive NPDC
  };
  std::vector<Node> nodes;
  std::vector<Edge> edges;
};

/// NPDC[i][j] > threshold adds the edge j -> i with that weight.
SpilloverNetwork build_network(const ConnectednessTable& table,
                               double edge_threshold = 0.0);

/// DOT with color="pink"|"lightblue" by role and penwidth 1 + 4*(w/maxw).
std::string to_dot(const SpilloverNetwork& network);

std::string to_json(const SpilloverNetwork& network);
SpilloverNetwork from_json(const std::string& json_text);

/// CSV edge list: source,target,weight.
std::string to_csv(const SpilloverNetwork& network);

}  // namespace grainrisk
