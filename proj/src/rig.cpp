#include "sepm/rig.hpp"

namespace sepm::rig {

using pneumatics::FlowEdge;
using pneumatics::NodeKind;
using pneumatics::PressureNode;
using pneumatics::volume_capacitance;
using routing::NodeRole;

namespace {

NodeKind terminal_kind(routing::TopologyKind kind) {
    return kind == routing::TopologyKind::dual_tree_mixer || kind == routing::TopologyKind::mix_decoder
               ? NodeKind::well
               : NodeKind::vent_terminal;
}

}  // namespace

pneumatics::Network build_network(const routing::Topology& topology, const profile::Profile& profile,
                                  const RigOptions& options) {
    const auto& rig = profile.rig;
    pneumatics::Network net;

    for (const auto& [id, state] : options.initial_states) {
        (void)topology.valve_index(id);
    }
    for (const auto& id : options.capped_outputs) {
        if (topology.node(id).role != NodeRole::output) {
            throw Error(ErrorCode::invalid_argument, "capped node '" + id + "' is not an output");
        }
    }

    for (const auto& node : topology.nodes) {
        switch (node.role) {
            case NodeRole::input:
                net.add_node(PressureNode{supply_node(node.id), NodeKind::supply, rig.supply_pressure, 0.0});
                net.add_node(PressureNode{node.id, NodeKind::internal, 0.0, volume_capacitance(rig.inlet_volume)});
                break;
            case NodeRole::output:
                net.add_node(PressureNode{node.id, NodeKind::internal, 0.0, volume_capacitance(rig.outlet_volume)});
                if (!options.capped_outputs.contains(node.id)) {
                    net.add_node(PressureNode{"T_" + node.id, terminal_kind(topology.kind), 0.0, 0.0});
                }
                break;
            case NodeRole::junction:
                net.add_node(
                    PressureNode{node.id, NodeKind::internal, 0.0, volume_capacitance(rig.junction_volume)});
                break;
            case NodeRole::recycle:
                net.add_node(PressureNode{node.id, NodeKind::vent_terminal, 0.0, 0.0});
                break;
        }
    }

    for (const auto& id : topology.valves) {
        const auto it = options.initial_states.find(id);
        net.add_valve(profile::make_valve(profile, id, it == options.initial_states.end() ? Polarity::negative
                                                                                          : it->second));
    }

    for (const auto& node : topology.nodes) {
        if (node.role == NodeRole::input) {
            net.add_edge(FlowEdge{"line_" + node.id, supply_node(node.id), node.id, rig.line_conductance,
                                  rig.line_inertance, std::nullopt});
        } else if (node.role == NodeRole::output && !options.capped_outputs.contains(node.id)) {
            net.add_edge(FlowEdge{"vent_" + node.id, node.id, "T_" + node.id, rig.vent_conductance, 0.0,
                                  std::nullopt});
        }
    }
    for (const auto& e : topology.edges) {
        if (e.valve) {
            const auto& vid = topology.valves[*e.valve];
            net.add_edge(FlowEdge{vid + "." + std::string(valve::to_string(e.tube)), e.from, e.to, 0.0, 0.0,
                                  pneumatics::ValveTubeRef{vid, e.tube}});
        } else {
            net.add_edge(FlowEdge{"ch_" + e.from + "_" + e.to, e.from, e.to, profile.tube.open_conductance, 0.0,
                                  std::nullopt});
        }
    }
    return net;
}

pneumatics::Network build_fig3_rig(const profile::Profile& profile, Polarity initial, bool dual_outlet) {
    RigOptions options;
    options.initial_states["V1"] = initial;
    if (!dual_outlet) options.capped_outputs.insert("Y1");
    return build_network(routing::build_binary_unit(), profile, options);
}

}  // namespace sepm::rig
