#include "grainrisk/network.hpp"

#include <json.hpp>
#include <sstream>

#include "grainrisk/csv.hpp"

namespace grainrisk {

SpilloverNetwork build_network(const ConnectednessTable& table, double edge_threshold) {
  const int k = static_cast<int>(table.names.size());
  SpilloverNetwork net;
  net.nodes.resize(k);
  for (int i = 0; i < k; ++i) {
    net.nodes[i].id = table.names[i];
    net.nodes[i].net = table.net(i);
    net.nodes[i].role = table.net(i) > 0.0 ? NodeRole::transmitter : NodeRole::receiver;
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      const double w = table.npdc(i, j);  // spillover from j to i, net
      if (w > edge_threshold) {
        net.edges.push_back({j, i, w});
        net.nodes[j].out_strength += w;
      }
    }
  }
  return net;
}

std::string to_dot(const SpilloverNetwork& network) {
  double max_w = 0.0;
  for (const auto& e : network.edges) max_w = std::max(max_w, e.weight);
  std::ostringstream os;
  os << "digraph spillover {\n";
  for (const auto& n : network.nodes) {
    os << "  \"" << n.id << "\" [color=\""
       << (n.role == NodeRole::transmitter ? "pink" : "lightblue")
       << "\", style=filled, out_strength=" << csv::format_number(n.out_strength)
       << "];\n";
  }
  for (const auto& e : network.edges) {
    const double penwidth = 1.0 + 4.0 * (max_w > 0.0 ? e.weight / max_w : 0.0);
    os << "  \"" << network.nodes[e.source].id << "\" -> \""
       << network.nodes[e.target].id << "\" [weight=" << csv::format_number(e.weight)
       << ", penwidth=" << csv::format_number(penwidth) << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_json(const SpilloverNetwork& network) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : network.nodes)
    j["nodes"].push_back({{"id", n.id},
                          {"out_strength", n.out_strength},
                          {"net", n.net},
                          {"role", n.role == NodeRole::transmitter ? "transmitter"
                                                                   : "receiver"}});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : network.edges)
    j["edges"].push_back({{"source", network.nodes[e.source].id},
                          {"target", network.nodes[e.target].id},
                          {"weight", e.weight}});
  return j.dump(2);
}

SpilloverNetwork from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SpilloverNetwork net;
  for (const auto& n : j.at("nodes")) {
    SpilloverNetwork::Node node;
    node.id = n.at("id").get<std::string>();
    node.out_strength = n.at("out_strength").get<double>();
    node.net = n.at("net").get<double>();
    node.role = n.at("role").get<std::string>() == "transmitter"
                    ? NodeRole::transmitter
                    : NodeRole::receiver;
    net.nodes.push_back(std::move(node));
  }
  auto index_of = [&](const std::string& id) {
    for (std::size_t i = 0; i < net.nodes.size(); ++i)
      if (net.nodes[i].id == id) return static_cast<int>(i);
    throw std::runtime_error("network json: unknown node id " + id);
  };
  for (const auto& e : j.at("edges"))
    net.edges.push_back({index_of(e.at("source").get<std::string>()),
                         index_of(e.at("target").get<std::string>()),
                         e.at("weight").get<double>()});
  return net;
}

std::string to_csv(const SpilloverNetwork& network) {
  std::ostringstream os;
  os << "source,target,weight\n";
  for (const auto& e : network.edges)
    os << network.nodes[e.source].id << ',' << network.nodes[e.target].id << ','
       << csv::format_number(e.weight) << '\n';
  return os.str();
}

}  // namespace grainrisk
