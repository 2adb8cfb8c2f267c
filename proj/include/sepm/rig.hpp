#pragma once

// Pneumatic network for a routing topology on the bench rig.
//
// Naming: each input X gets a regulated supply "S_X" feeding node X through an
// inertive supply line "line_X". Valve tubes become edges "V<n>.upper" and
// "V<n>.lower"; fixed channels are "ch_<from>_<to>". Each output Y vents
// through "vent_Y" into terminal "T_Y" unless it is capped. Recycle nodes are
// vent terminals.

#include "sepm/pneumatics.hpp"
#include "sepm/profile.hpp"
#include "sepm/routing.hpp"

#include <map>
#include <set>
#include <string>

namespace sepm::rig {

struct RigOptions {
    std::set<std::string> capped_outputs;
    /// Initial logical states; valves not listed start at -1.
    std::map<std::string, Polarity> initial_states;
};

[[nodiscard]] pneumatics::Network build_network(const routing::Topology& topology, const profile::Profile& profile,
                                                const RigOptions& options = {});

/// Supply node id for an input port.
[[nodiscard]] inline std::string supply_node(const std::string& input) { return "S_" + input; }

/// Single binary valve between an upstream sensor node "I0" and the outlet
/// "Y0"; the second outlet "Y1" is capped unless `dual_outlet`.
[[nodiscard]] pneumatics::Network build_fig3_rig(const profile::Profile& profile, Polarity initial,
                                                 bool dual_outlet);

}  // namespace sepm::rig
