#pragma once

#include <fmt/format.h>
#include <string>
#include <vector>

#include "cmrl/error.hpp"
#include "cmrl/nn.hpp"
#include "cmrl/routing.hpp"
#include "cmrl/topology.hpp"

namespace cmrl {

/// PerSwitch: one actor per SDN node seeing its adjacent links.
/// Single: one actor seeing every link and emitting all switches' ratios.
enum class AgentLayout { PerSwitch, Single };

struct AgentShape {
  int input = 0;
  int output = 0;
  std::vector<int> blocks;  // softmax blocks; one per switch it drives
};

inline std::vector<AgentShape> agent_shapes(const Topology& topo, AgentLayout layout,
                                            ObservationScope scope) {
  std::vector<AgentShape> shapes;
  if (layout == AgentLayout::PerSwitch) {
    for (NodeId h : topo.sdn_nodes()) {
      const int out = static_cast<int>(topo.out_ports(h).size());
      shapes.push_back({observation_width(topo, h, scope), out, {out}});
    }
  } else {
    AgentShape s;
    s.input = topo.link_count();
    for (NodeId h : topo.sdn_nodes()) {
      const int out = static_cast<int>(topo.out_ports(h).size());
      s.blocks.push_back(out);
      s.output += out;
    }
    shapes.push_back(std::move(s));
  }
  return shapes;
}

/// Per-agent input rows for the given network state.
inline std::vector<nn::Vector> agent_observations(const Topology& topo,
                                                  const UtilizationState& state,
                                                  AgentLayout layout,
                                                  ObservationScope scope) {
  std::vector<nn::Vector> obs;
  if (layout == AgentLayout::PerSwitch) {
    for (NodeId h : topo.sdn_nodes()) {
      const auto o = observe(state, topo, h, scope);
      obs.emplace_back(Eigen::Map<const nn::Vector>(o.data(), static_cast<Eigen::Index>(o.size())));
    }
  } else {
    obs.emplace_back(Eigen::Map<const nn::Vector>(state.util.data(),
                                                  static_cast<Eigen::Index>(state.util.size())));
  }
  return obs;
}

/// Joint action from per-agent output vectors (concatenated in switch order
/// for the single layout).
inline JointAction to_joint_action(const Topology& topo, const std::vector<nn::Vector>& outputs) {
  JointAction u;
  std::vector<double> flat;
  for (const auto& o : outputs) flat.insert(flat.end(), o.data(), o.data() + o.size());
  std::size_t pos = 0;
  for (NodeId h : topo.sdn_nodes()) {
    const auto d = topo.out_ports(h).size();
    if (pos + d > flat.size()) throw Error("agent outputs do not cover every SDN switch");
    u.push_back({h, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                                        flat.begin() + static_cast<std::ptrdiff_t>(pos + d))});
    pos += d;
  }
  if (pos != flat.size()) throw Error("agent outputs wider than the SDN switches' ports");
  return u;
}

/// Flattened joint action in switch order, as the critic consumes it.
inline nn::Vector flatten(const JointAction& u) {
  std::size_t n = 0;
  for (const auto& a : u) n += a.ratios.size();
  nn::Vector v(static_cast<Eigen::Index>(n));
  Eigen::Index i = 0;
  for (const auto& a : u)
    for (double r : a.ratios) v[i++] = r;
  return v;
}

/// The trained (or untrained) actors that drive the SDN switches.
struct ActorSet {
  AgentLayout layout = AgentLayout::PerSwitch;
  ObservationScope scope = ObservationScope::Incident;
  std::vector<nn::MlpParams> actors;

  void check_shapes(const Topology& topo) const {
    const auto shapes = agent_shapes(topo, layout, scope);
    if (shapes.size() != actors.size())
      throw Error(fmt::format("expected {} actors for this topology, got {}", shapes.size(),
                              actors.size()));
    for (std::size_t i = 0; i < shapes.size(); ++i)
      if (actors[i].spec.input != shapes[i].input || actors[i].spec.output != shapes[i].output)
        throw Error(fmt::format("actor {} has shape {}x{}, topology needs {}x{}", i,
                                actors[i].spec.input, actors[i].spec.output, shapes[i].input,
                                shapes[i].output));
  }

  /// Noiseless eval-phase outputs, one vector per agent.
  std::vector<nn::Vector> outputs(const std::vector<nn::Vector>& obs) const {
    std::vector<nn::Vector> out;
    out.reserve(actors.size());
    for (std::size_t i = 0; i < actors.size(); ++i) {
      const auto r = nn::forward(actors[i], obs[i].transpose(), nn::Phase::Eval);
      out.emplace_back(r.output.row(0).transpose());
    }
    return out;
  }
};

}  // namespace cmrl
