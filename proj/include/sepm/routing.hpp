#pragma once

// =============================================================================
// Valve-edge routing graphs for the four network architectures (plus the
// mix-decoder), address/mode synthesis and reachability.
//
// Tube convention shared with the valve model: logical +1 seals the upper
// tube so the lower tube conducts; -1 seals the lower tube so the upper tube
// conducts. In every tree node the upper tube feeds the even-index branch and
// the lower tube the odd-index branch, so an address bit of 1 maps to +1.
// =============================================================================

#include "sepm/errors.hpp"
#include "sepm/types.hpp"
#include "sepm/valve.hpp"

#include <compare>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sepm::routing {

enum class TopologyKind { binary_unit, tree_decoder, six_port_ring, dual_tree_mixer, mix_decoder };

[[nodiscard]] std::string_view to_string(TopologyKind kind) noexcept;

enum class NodeRole { input, output, junction, recycle };

struct GraphNode {
    std::string id;
    NodeRole role = NodeRole::junction;
    std::string medium;  // label carried by input nodes
};

/// Directed channel. `valve` indexes Topology::valves; absent for fixed plumbing.
struct GraphEdge {
    std::string from;
    std::string to;
    std::optional<std::size_t> valve;
    valve::Tube tube = valve::Tube::upper;
};

struct Topology {
    TopologyKind kind = TopologyKind::binary_unit;
    int depth = 0;  // decoder depth for tree/binary/mix kinds
    std::vector<std::string> valves;
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;

    [[nodiscard]] std::size_t valve_count() const noexcept { return valves.size(); }
    [[nodiscard]] std::vector<std::string> inputs() const;
    [[nodiscard]] std::vector<std::string> outputs() const;
    [[nodiscard]] const GraphNode& node(const std::string& id) const;
    [[nodiscard]] std::size_t valve_index(const std::string& id) const;
    /// First decoder valve (1 for the mix-decoder, whose V1 selects the medium).
    [[nodiscard]] std::size_t decoder_offset() const noexcept;
};

using Entry = std::optional<Polarity>;

struct StateVector {
    std::vector<Entry> entries;

    StateVector() = default;
    explicit StateVector(std::size_t n) : entries(n) {}
    explicit StateVector(std::vector<Entry> e) : entries(std::move(e)) {}

    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
    [[nodiscard]] bool concrete() const noexcept;
    [[nodiscard]] std::size_t dont_care_count() const noexcept;
    /// Compact form, one character per valve: '+', '-' or 'x'.
    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] static StateVector parse(std::string_view text);

    friend bool operator==(const StateVector&, const StateVector&) = default;
};

struct RoutePair {
    std::string input;
    std::string output;

    friend auto operator<=>(const RoutePair&, const RoutePair&) = default;
};

struct RoutePattern {
    std::set<RoutePair> pairs;
    /// Media labels arriving at each reached output or recycle node.
    std::map<std::string, std::set<std::string>> media;

    [[nodiscard]] std::set<std::string> reached_outputs() const;
    /// "P1->P2 P3->P4" style summary.
    [[nodiscard]] std::string pairs_string() const;

    friend bool operator==(const RoutePattern&, const RoutePattern&) = default;
};

[[nodiscard]] Topology build_binary_unit();
[[nodiscard]] Topology build_tree_decoder(int depth);
[[nodiscard]] Topology build_six_port_ring();
[[nodiscard]] Topology build_dual_tree_mixer();
/// Media-select valve V1 (upper tube: liquid, lower tube: gas) feeding a
/// tree decoder of `depth` on valves V2...
[[nodiscard]] Topology build_mix_decoder(int depth = 3);

/// Edges reversed and inputs/outputs swapped: the decoder read as a multiplexer.
[[nodiscard]] Topology reversed(const Topology& topology);

class AddressOutOfRange : public Error {
public:
    explicit AddressOutOfRange(const std::string& m) : Error(ErrorCode::address_out_of_range, m) {}
};

class InvalidPort : public Error {
public:
    explicit InvalidPort(const std::string& m) : Error(ErrorCode::invalid_port, m) {}
};

class DontCarePresent : public Error {
public:
    explicit DontCarePresent(const std::string& m) : Error(ErrorCode::dont_care_present, m) {}
};

/// Path valves set, off-path valves (and the media valve) left don't-care.
[[nodiscard]] StateVector decode_address(const Topology& topology, long address);

enum class RingRouting { parallel, crossed };

struct SixPortMode {
    RingRouting routing = RingRouting::parallel;
    bool all_closed = false;
    std::set<int> closed_outputs;  // ring positions 2, 4, 6

    [[nodiscard]] static SixPortMode parallel() { return {}; }
    [[nodiscard]] static SixPortMode crossed() { return {RingRouting::crossed, false, {}}; }
    [[nodiscard]] static SixPortMode closed() { return {RingRouting::parallel, true, {}}; }
    [[nodiscard]] static SixPortMode isolate(int output, RingRouting base = RingRouting::parallel) {
        return {base, false, {output}};
    }
    [[nodiscard]] static SixPortMode isolate_two(int a, int b, RingRouting base = RingRouting::parallel) {
        return {base, false, {a, b}};
    }

    /// "parallel", "crossed", "all-closed", "isolate(4)", "isolate-two(2,6)";
    /// isolate forms accept a "crossed/" prefix.
    [[nodiscard]] static SixPortMode parse(std::string_view text);
    [[nodiscard]] std::string name() const;

    friend bool operator==(const SixPortMode&, const SixPortMode&) = default;
};

/// Throws InvalidPort for output ids outside {2, 4, 6}.
[[nodiscard]] StateVector six_port_mode(const SixPortMode& mode);

enum class DontCarePolicy { reject, intersect };

/// Breadth-first reachability over open tubes and fixed channels. With
/// `intersect`, don't-cares are expanded and only what holds under every
/// concretization is returned.
[[nodiscard]] RoutePattern active_paths(const Topology& topology, const StateVector& state,
                                        DontCarePolicy policy = DontCarePolicy::reject);

/// Every concrete vector obtained by fixing the don't-cares.
[[nodiscard]] std::vector<StateVector> concretizations(const StateVector& state);

/// Media per well of the dual-tree mixer for a 6-entry vector.
[[nodiscard]] RoutePattern dual_tree_pattern(const StateVector& state);

struct TruthTableRow {
    std::string label;
    StateVector state;
    std::string outcome;
};

struct TruthTable {
    std::string row_header;
    std::vector<std::string> valve_ids;
    std::string outcome_header;
    std::vector<TruthTableRow> rows;
};

/// Rows are addresses (trees), modes (six-port), address x medium
/// (mix-decoder) or module addresses (dual tree); outcomes come from
/// `active_paths`.
[[nodiscard]] TruthTable truth_table(const Topology& topology);

void print_truth_table(const TruthTable& table, std::ostream& out);
void write_truth_table_csv(const TruthTable& table, std::ostream& out);

/// Parse "binary", "tree:<k>", "six-port", "dual-tree", "mix-decoder[:<k>]".
[[nodiscard]] Topology build_topology(std::string_view spec);
/// Inverse of build_topology for the kinds it produces.
[[nodiscard]] std::string topology_spec(const Topology& topology);

}  // namespace sepm::routing
