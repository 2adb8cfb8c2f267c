#include "sepm/routing.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace sepm::routing {

namespace {

using valve::Tube;

constexpr std::size_t kMaxExpandedDontCares = 20;

std::string valve_name(std::size_t index) { return "V" + std::to_string(index + 1); }

/// The tube that conducts in logical state `s`.
constexpr Tube open_tube(Polarity s) noexcept {
    return s == Polarity::positive ? Tube::lower : Tube::upper;
}

void add_node(Topology& t, std::string id, NodeRole role, std::string medium = {}) {
    t.nodes.push_back(GraphNode{std::move(id), role, std::move(medium)});
}

void add_fixed(Topology& t, std::string from, std::string to) {
    t.edges.push_back(GraphEdge{std::move(from), std::move(to), std::nullopt, Tube::upper});
}

void add_tube(Topology& t, std::size_t valve, Tube tube, std::string from, std::string to) {
    t.edges.push_back(GraphEdge{std::move(from), std::move(to), valve, tube});
}

/// Heap-ordered binary tree on valves [offset, offset + 2^depth - 1).
/// Junction nodes are named prefix + "N" + valve number, leaves leaf_prefix + index.
void add_tree(Topology& t, int depth, std::size_t offset, const std::string& root_inlet,
              const std::string& prefix, const std::string& leaf_prefix, NodeRole leaf_role) {
    const std::size_t count = (std::size_t{1} << depth) - 1;
    for (std::size_t h = 0; h < count; ++h) {
        t.valves.push_back(valve_name(offset + h));
    }
    auto inlet = [&](std::size_t h) {
        return h == 0 ? root_inlet : prefix + "N" + std::to_string(offset + h + 1);
    };
    auto child = [&](std::size_t c) {
        return c < count ? inlet(c) : leaf_prefix + std::to_string(c - count);
    };
    for (std::size_t h = 1; h < count; ++h) {
        add_node(t, inlet(h), NodeRole::junction);
    }
    for (std::size_t leaf = 0; leaf <= count; ++leaf) {
        add_node(t, leaf_prefix + std::to_string(leaf), leaf_role);
    }
    for (std::size_t h = 0; h < count; ++h) {
        add_tube(t, offset + h, Tube::upper, inlet(h), child(2 * h + 1));
        add_tube(t, offset + h, Tube::lower, inlet(h), child(2 * h + 2));
    }
}

bool is_tree_kind(TopologyKind kind) {
    return kind == TopologyKind::binary_unit || kind == TopologyKind::tree_decoder ||
           kind == TopologyKind::mix_decoder;
}

struct Reachability {
    std::set<RoutePair> pairs;
    std::map<std::string, std::set<std::string>> media;
};

Reachability reach(const Topology& topology, const StateVector& state) {
    std::map<std::string, std::vector<std::string>> adjacency;
    for (const auto& e : topology.edges) {
        if (e.valve) {
            const auto entry = state.entries[*e.valve];
            if (!entry || open_tube(*entry) != e.tube) {
                continue;
            }
        }
        adjacency[e.from].push_back(e.to);
    }

    Reachability result;
    for (const auto& source : topology.nodes) {
        if (source.role != NodeRole::input) {
            continue;
        }
        std::set<std::string> seen{source.id};
        std::deque<std::string> queue{source.id};
        while (!queue.empty()) {
            const auto current = queue.front();
            queue.pop_front();
            const auto it = adjacency.find(current);
            if (it == adjacency.end()) {
                continue;
            }
            for (const auto& next : it->second) {
                if (seen.insert(next).second) {
                    queue.push_back(next);
                }
            }
        }
        for (const auto& id : seen) {
            const auto& n = topology.node(id);
            if (n.role == NodeRole::output) {
                result.pairs.insert(RoutePair{source.id, id});
                result.media[id].insert(source.medium);
            } else if (n.role == NodeRole::recycle) {
                result.media[id].insert(source.medium);
            }
        }
    }
    return result;
}

int parse_int(std::string_view text, const char* what) {
    int value = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), value);
    if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
        throw Error(ErrorCode::invalid_argument, std::string("malformed ") + what + ": '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

std::string_view to_string(TopologyKind kind) noexcept {
    switch (kind) {
        case TopologyKind::binary_unit: return "binary-unit";
        case TopologyKind::tree_decoder: return "tree-decoder";
        case TopologyKind::six_port_ring: return "six-port-ring";
        case TopologyKind::dual_tree_mixer: return "dual-tree-mixer";
        case TopologyKind::mix_decoder: return "mix-decoder";
    }
    return "binary-unit";
}

// -----------------------------------------------------------------------------
// Topology
// -----------------------------------------------------------------------------

std::vector<std::string> Topology::inputs() const {
    std::vector<std::string> out;
    for (const auto& n : nodes) {
        if (n.role == NodeRole::input) out.push_back(n.id);
    }
    return out;
}

std::vector<std::string> Topology::outputs() const {
    std::vector<std::string> out;
    for (const auto& n : nodes) {
        if (n.role == NodeRole::output) out.push_back(n.id);
    }
    return out;
}

const GraphNode& Topology::node(const std::string& id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return n;
    }
    throw Error(ErrorCode::unknown_node, "topology has no node '" + id + "'");
}

std::size_t Topology::valve_index(const std::string& id) const {
    const auto it = std::find(valves.begin(), valves.end(), id);
    if (it == valves.end()) {
        throw Error(ErrorCode::unknown_node, "topology has no valve '" + id + "'");
    }
    return static_cast<std::size_t>(it - valves.begin());
}

std::size_t Topology::decoder_offset() const noexcept {
    return kind == TopologyKind::mix_decoder ? 1 : 0;
}

// -----------------------------------------------------------------------------
// StateVector / RoutePattern
// -----------------------------------------------------------------------------

bool StateVector::concrete() const noexcept {
    return std::all_of(entries.begin(), entries.end(), [](const Entry& e) { return e.has_value(); });
}

std::size_t StateVector::dont_care_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const Entry& e) { return !e.has_value(); }));
}

std::string StateVector::to_string() const {
    std::string out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        out.push_back(!e ? 'x' : (*e == Polarity::positive ? '+' : '-'));
    }
    return out;
}

StateVector StateVector::parse(std::string_view text) {
    StateVector v;
    for (const char c : text) {
        switch (c) {
            case '+': v.entries.emplace_back(Polarity::positive); break;
            case '-': v.entries.emplace_back(Polarity::negative); break;
            case 'x':
            case 'X':
            case '*': v.entries.emplace_back(std::nullopt); break;
            default:
                throw Error(ErrorCode::invalid_argument,
                            "state vector characters must be '+', '-' or 'x', got '" + std::string(text) + "'");
        }
    }
    return v;
}

std::set<std::string> RoutePattern::reached_outputs() const {
    std::set<std::string> out;
    for (const auto& p : pairs) out.insert(p.output);
    return out;
}

std::string RoutePattern::pairs_string() const {
    std::string out;
    for (const auto& p : pairs) {
        if (!out.empty()) out += ' ';
        out += p.input + "->" + p.output;
    }
    return out.empty() ? "-" : out;
}

// -----------------------------------------------------------------------------
// Builders
// -----------------------------------------------------------------------------

Topology build_binary_unit() {
    Topology t = build_tree_decoder(1);
    t.kind = TopologyKind::binary_unit;
    return t;
}

Topology build_tree_decoder(int depth) {
    if (depth < 1 || depth > 8) {
        throw Error(ErrorCode::invalid_argument, "tree decoder depth must be in [1, 8]");
    }
    Topology t;
    t.kind = TopologyKind::tree_decoder;
    t.depth = depth;
    add_node(t, "I0", NodeRole::input, "I0");
    add_tree(t, depth, 0, "I0", "", "Y", NodeRole::output);
    return t;
}

Topology build_mix_decoder(int depth) {
    if (depth < 1 || depth > 8) {
        throw Error(ErrorCode::invalid_argument, "mix decoder depth must be in [1, 8]");
    }
    Topology t;
    t.kind = TopologyKind::mix_decoder;
    t.depth = depth;
    add_node(t, "LIQ", NodeRole::input, "liquid");
    add_node(t, "GAS", NodeRole::input, "gas");
    add_node(t, "I0", NodeRole::junction);
    t.valves.push_back(valve_name(0));
    add_tube(t, 0, Tube::upper, "LIQ", "I0");
    add_tube(t, 0, Tube::lower, "GAS", "I0");
    add_tree(t, depth, 1, "I0", "", "Y", NodeRole::output);
    return t;
}

Topology build_six_port_ring() {
    Topology t;
    t.kind = TopologyKind::six_port_ring;
    for (int p = 1; p <= 6; ++p) {
        t.valves.push_back(valve_name(static_cast<std::size_t>(p - 1)));
        const bool input = p % 2 == 1;
        add_node(t, "P" + std::to_string(p), input ? NodeRole::input : NodeRole::output,
                 input ? "R" + std::to_string(p) : std::string{});
    }
    auto channel = [](int a) {
        const int b = a % 6 + 1;
        return "C" + std::to_string(a) + std::to_string(b);
    };
    for (int a = 1; a <= 6; ++a) add_node(t, channel(a), NodeRole::junction);
    for (int p = 2; p <= 6; p += 2) add_node(t, "O" + std::to_string(p), NodeRole::junction);
    add_node(t, "W", NodeRole::recycle);

    for (int p = 1; p <= 6; ++p) {
        const auto v = static_cast<std::size_t>(p - 1);
        const std::string port = "P" + std::to_string(p);
        if (p % 2 == 1) {
            const int previous = (p + 4) % 6 + 1;
            add_tube(t, v, Tube::lower, port, channel(p));         // toward p + 1
            add_tube(t, v, Tube::upper, port, channel(previous));  // toward p - 1
        } else {
            const std::string merge = "O" + std::to_string(p);
            add_fixed(t, channel(p - 1), merge);
            add_fixed(t, channel(p), merge);
            add_tube(t, v, Tube::lower, merge, port);
            add_tube(t, v, Tube::upper, merge, "W");
        }
    }
    return t;
}

Topology build_dual_tree_mixer() {
    Topology t;
    t.kind = TopologyKind::dual_tree_mixer;
    t.depth = 2;
    add_node(t, "IA", NodeRole::input, "A");
    add_node(t, "IB", NodeRole::input, "B");
    add_tree(t, 2, 0, "IA", "", "YA", NodeRole::junction);
    add_tree(t, 2, 3, "IB", "", "YB", NodeRole::junction);
    for (const char* well : {"A1", "A2", "B1", "B2", "C1", "C2"}) {
        add_node(t, well, NodeRole::output);
    }
    add_node(t, "MX_top", NodeRole::junction);
    add_node(t, "MX_bot", NodeRole::junction);
    add_node(t, "R", NodeRole::recycle);

    // Distribution layer; module A sits on column 1, module B mirrors it on column 2.
    for (const auto& [module, column] : {std::pair{"A", "1"}, std::pair{"B", "2"}}) {
        const std::string y = std::string("Y") + module;
        const std::string col = column;
        add_fixed(t, y + "0", "MX_bot");
        add_fixed(t, y + "0", "B" + col);
        add_fixed(t, y + "1", "A" + col);
        add_fixed(t, y + "1", "B" + col);
        add_fixed(t, y + "1", "C" + col);
        add_fixed(t, y + "2", "R");
        add_fixed(t, y + "3", "MX_top");
        add_fixed(t, y + "3", "B" + col);
    }
    // Mixing layer with overflow to recycle.
    for (const auto& [chamber, row] : {std::pair{"MX_top", "A"}, std::pair{"MX_bot", "C"}}) {
        add_fixed(t, chamber, std::string(row) + "1");
        add_fixed(t, chamber, std::string(row) + "2");
        add_fixed(t, chamber, "R");
    }
    return t;
}

Topology reversed(const Topology& topology) {
    Topology r = topology;
    for (auto& e : r.edges) std::swap(e.from, e.to);
    for (auto& n : r.nodes) {
        if (n.role == NodeRole::input) {
            n.role = NodeRole::output;
            n.medium.clear();
        } else if (n.role == NodeRole::output) {
            n.role = NodeRole::input;
            n.medium = n.id;
        }
    }
    return r;
}

Topology build_topology(std::string_view spec) {
    const auto colon = spec.find(':');
    const auto head = spec.substr(0, colon);
    const auto arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    if (head == "binary" || head == "binary-unit") return build_binary_unit();
    if (head == "tree" || head == "tree-decoder") {
        if (arg.empty()) throw Error(ErrorCode::invalid_argument, "tree topology needs a depth, e.g. tree:3");
        return build_tree_decoder(parse_int(arg, "tree depth"));
    }
    if (head == "six-port" || head == "six-port-ring") return build_six_port_ring();
    if (head == "dual-tree" || head == "dual-tree-mixer") return build_dual_tree_mixer();
    if (head == "mix-decoder") return build_mix_decoder(arg.empty() ? 3 : parse_int(arg, "decoder depth"));
    throw Error(ErrorCode::invalid_argument, "unknown topology '" + std::string(spec) + "'");
}

std::string topology_spec(const Topology& topology) {
    switch (topology.kind) {
        case TopologyKind::binary_unit: return "binary";
        case TopologyKind::tree_decoder: return "tree:" + std::to_string(topology.depth);
        case TopologyKind::six_port_ring: return "six-port";
        case TopologyKind::dual_tree_mixer: return "dual-tree";
        case TopologyKind::mix_decoder: return "mix-decoder:" + std::to_string(topology.depth);
    }
    return "binary";
}

// -----------------------------------------------------------------------------
// Synthesis
// -----------------------------------------------------------------------------

StateVector decode_address(const Topology& topology, long address) {
    if (!is_tree_kind(topology.kind)) {
        throw Error(ErrorCode::invalid_argument,
                    "address decoding needs a tree topology, not " + std::string(to_string(topology.kind)));
    }
    const int depth = topology.depth;
    const long outputs = 1L << depth;
    if (address < 0 || address >= outputs) {
        throw AddressOutOfRange("address " + std::to_string(address) + " outside [0, " + std::to_string(outputs) +
                                ")");
    }
    StateVector v(topology.valve_count());
    const std::size_t offset = topology.decoder_offset();
    std::size_t h = 0;
    for (int level = 0; level < depth; ++level) {
        const long bit = (address >> (depth - 1 - level)) & 1L;
        v.entries[offset + h] = bit != 0 ? Polarity::positive : Polarity::negative;
        h = 2 * h + 1 + static_cast<std::size_t>(bit);
    }
    return v;
}

SixPortMode SixPortMode::parse(std::string_view text) {
    SixPortMode mode;
    std::string_view rest = text;
    if (rest.rfind("crossed/", 0) == 0) {
        mode.routing = RingRouting::crossed;
        rest.remove_prefix(8);
    }
    if (rest == "parallel" && mode.routing == RingRouting::parallel) return SixPortMode::parallel();
    if (rest == "crossed" && mode.routing == RingRouting::parallel) return SixPortMode::crossed();
    if (rest == "all-closed" && mode.routing == RingRouting::parallel) return SixPortMode::closed();

    auto arguments = [&](std::string_view prefix) -> std::optional<std::vector<int>> {
        if (rest.rfind(prefix, 0) != 0 || rest.back() != ')') return std::nullopt;
        auto inner = rest.substr(prefix.size(), rest.size() - prefix.size() - 1);
        std::vector<int> ids;
        while (!inner.empty()) {
            const auto comma = inner.find(',');
            ids.push_back(parse_int(inner.substr(0, comma), "port id"));
            inner = comma == std::string_view::npos ? std::string_view{} : inner.substr(comma + 1);
        }
        return ids;
    };
    if (auto ids = arguments("isolate("); ids && ids->size() == 1) {
        mode.closed_outputs = {(*ids)[0]};
        return mode;
    }
    if (auto ids = arguments("isolate-two("); ids && ids->size() == 2) {
        if ((*ids)[0] == (*ids)[1]) throw InvalidPort("isolate-two needs two distinct outputs");
        mode.closed_outputs = {(*ids)[0], (*ids)[1]};
        return mode;
    }
    throw Error(ErrorCode::invalid_argument, "unknown six-port mode '" + std::string(text) + "'");
}

std::string SixPortMode::name() const {
    if (all_closed) return "all-closed";
    const std::string base = routing == RingRouting::crossed ? "crossed" : "parallel";
    if (closed_outputs.empty()) return base;
    std::string ids;
    for (const int id : closed_outputs) {
        if (!ids.empty()) ids += ',';
        ids += std::to_string(id);
    }
    const std::string prefix = routing == RingRouting::crossed ? "crossed/" : "";
    return prefix + (closed_outputs.size() == 1 ? "isolate(" : "isolate-two(") + ids + ")";
}

StateVector six_port_mode(const SixPortMode& mode) {
    for (const int id : mode.closed_outputs) {
        if (id != 2 && id != 4 && id != 6) {
            throw InvalidPort("port " + std::to_string(id) + " is not an output of the six-port ring");
        }
    }
    StateVector v(6);
    for (int p = 2; p <= 6; p += 2) {
        const bool closed = mode.all_closed || mode.closed_outputs.contains(p);
        v.entries[static_cast<std::size_t>(p - 1)] = closed ? Polarity::negative : Polarity::positive;
    }
    if (!mode.all_closed) {
        // +1 conducts the lower tube, toward the clockwise neighbour.
        const Polarity inputs = mode.routing == RingRouting::parallel ? Polarity::positive : Polarity::negative;
        for (int p = 1; p <= 5; p += 2) {
            v.entries[static_cast<std::size_t>(p - 1)] = inputs;
        }
    }
    return v;
}

// -----------------------------------------------------------------------------
// Reachability
// -----------------------------------------------------------------------------

std::vector<StateVector> concretizations(const StateVector& state) {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (!state.entries[i]) free.push_back(i);
    }
    if (free.size() > kMaxExpandedDontCares) {
        throw Error(ErrorCode::invalid_argument, "too many don't-cares to expand");
    }
    std::vector<StateVector> out;
    const std::size_t count = std::size_t{1} << free.size();
    out.reserve(count);
    for (std::size_t mask = 0; mask < count; ++mask) {
        StateVector v = state;
        for (std::size_t k = 0; k < free.size(); ++k) {
            v.entries[free[k]] = ((mask >> k) & 1U) != 0U ? Polarity::positive : Polarity::negative;
        }
        out.push_back(std::move(v));
    }
    return out;
}

RoutePattern active_paths(const Topology& topology, const StateVector& state, DontCarePolicy policy) {
    if (state.size() != topology.valve_count()) {
        throw Error(ErrorCode::invalid_argument, "state vector has " + std::to_string(state.size()) +
                                                     " entries, topology has " +
                                                     std::to_string(topology.valve_count()) + " valves");
    }
    if (state.concrete()) {
        auto r = reach(topology, state);
        return RoutePattern{std::move(r.pairs), std::move(r.media)};
    }
    if (policy == DontCarePolicy::reject) {
        throw DontCarePresent("state vector " + state.to_string() + " has don't-care entries");
    }

    std::optional<Reachability> common;
    for (const auto& concrete : concretizations(state)) {
        auto r = reach(topology, concrete);
        if (!common) {
            common = std::move(r);
            continue;
        }
        std::set<RoutePair> pairs;
        std::set_intersection(common->pairs.begin(), common->pairs.end(), r.pairs.begin(), r.pairs.end(),
                              std::inserter(pairs, pairs.begin()));
        common->pairs = std::move(pairs);
        std::map<std::string, std::set<std::string>> media;
        for (const auto& [node, labels] : common->media) {
            const auto it = r.media.find(node);
            if (it == r.media.end()) continue;
            std::set<std::string> both;
            std::set_intersection(labels.begin(), labels.end(), it->second.begin(), it->second.end(),
                                  std::inserter(both, both.begin()));
            if (!both.empty()) media.emplace(node, std::move(both));
        }
        common->media = std::move(media);
    }
    return RoutePattern{std::move(common->pairs), std::move(common->media)};
}

RoutePattern dual_tree_pattern(const StateVector& state) {
    if (state.size() != 6) {
        throw Error(ErrorCode::invalid_argument, "dual-tree state vector needs 6 entries");
    }
    static const Topology mixer = build_dual_tree_mixer();
    return active_paths(mixer, state, DontCarePolicy::intersect);
}

// -----------------------------------------------------------------------------
// Truth tables
// -----------------------------------------------------------------------------

namespace {

std::string media_summary(const RoutePattern& pattern, const Topology& topology) {
    std::string out;
    for (const auto& id : topology.outputs()) {
        const auto it = pattern.media.find(id);
        if (it == pattern.media.end()) continue;
        if (!out.empty()) out += ' ';
        out += id + "=";
        bool first = true;
        for (const auto& m : it->second) {
            if (!first) out += '+';
            out += m;
            first = false;
        }
    }
    return out.empty() ? "-" : out;
}

std::string outputs_summary(const RoutePattern& pattern) {
    std::string out;
    for (const auto& id : pattern.reached_outputs()) {
        if (!out.empty()) out += ' ';
        out += id;
    }
    return out.empty() ? "-" : out;
}

}  // namespace

TruthTable truth_table(const Topology& topology) {
    TruthTable table;
    table.valve_ids = topology.valves;
    switch (topology.kind) {
        case TopologyKind::binary_unit:
        case TopologyKind::tree_decoder: {
            table.row_header = "address";
            table.outcome_header = "output";
            for (long a = 0; a < (1L << topology.depth); ++a) {
                auto v = decode_address(topology, a);
                const auto pattern = active_paths(topology, v, DontCarePolicy::intersect);
                table.rows.push_back({std::to_string(a), std::move(v), outputs_summary(pattern)});
            }
            break;
        }
        case TopologyKind::mix_decoder: {
            table.row_header = "address/medium";
            table.outcome_header = "delivery";
            for (long a = 0; a < (1L << topology.depth); ++a) {
                for (const Polarity medium : {Polarity::negative, Polarity::positive}) {
                    auto v = decode_address(topology, a);
                    v.entries[0] = medium;
                    const auto pattern = active_paths(topology, v, DontCarePolicy::intersect);
                    const std::string label =
                        std::to_string(a) + "/" + (medium == Polarity::negative ? "liquid" : "gas");
                    table.rows.push_back({label, std::move(v), media_summary(pattern, topology)});
                }
            }
            break;
        }
        case TopologyKind::six_port_ring: {
            table.row_header = "mode";
            table.outcome_header = "routes";
            const std::vector<SixPortMode> modes = {
                SixPortMode::parallel(),          SixPortMode::crossed(),          SixPortMode::closed(),
                SixPortMode::isolate(2),          SixPortMode::isolate(4),         SixPortMode::isolate(6),
                SixPortMode::isolate_two(2, 4),   SixPortMode::isolate_two(2, 6),  SixPortMode::isolate_two(4, 6),
            };
            for (const auto& mode : modes) {
                auto v = six_port_mode(mode);
                const auto pattern = active_paths(topology, v, DontCarePolicy::intersect);
                table.rows.push_back({mode.name(), std::move(v), pattern.pairs_string()});
            }
            break;
        }
        case TopologyKind::dual_tree_mixer: {
            table.row_header = "A/B";
            table.outcome_header = "wells";
            const Topology module = build_tree_decoder(2);
            for (long a = 0; a < 4; ++a) {
                for (long b = 0; b < 4; ++b) {
                    const auto va = decode_address(module, a);
                    const auto vb = decode_address(module, b);
                    StateVector v(6);
                    std::copy(va.entries.begin(), va.entries.end(), v.entries.begin());
                    std::copy(vb.entries.begin(), vb.entries.end(), v.entries.begin() + 3);
                    const auto pattern = active_paths(topology, v, DontCarePolicy::intersect);
                    table.rows.push_back({std::to_string(a) + "/" + std::to_string(b), std::move(v),
                                          media_summary(pattern, topology)});
                }
            }
            break;
        }
    }
    return table;
}

void print_truth_table(const TruthTable& table, std::ostream& out) {
    std::size_t label_width = table.row_header.size();
    for (const auto& row : table.rows) label_width = std::max(label_width, row.label.size());
    std::size_t cell = 2;
    for (const auto& id : table.valve_ids) cell = std::max(cell, id.size());

    auto entry_text = [](const Entry& e) -> std::string { return !e ? "x" : std::string(to_string(*e)); };

    out << std::left << std::setw(static_cast<int>(label_width)) << table.row_header;
    for (const auto& id : table.valve_ids) out << "  " << std::setw(static_cast<int>(cell)) << id;
    out << "  " << table.outcome_header << '\n';
    for (const auto& row : table.rows) {
        out << std::left << std::setw(static_cast<int>(label_width)) << row.label;
        for (const auto& e : row.state.entries) out << "  " << std::setw(static_cast<int>(cell)) << entry_text(e);
        out << "  " << row.outcome << '\n';
    }
}

void write_truth_table_csv(const TruthTable& table, std::ostream& out) {
    out << table.row_header;
    for (const auto& id : table.valve_ids) out << ',' << id;
    out << ',' << table.outcome_header << '\n';
    for (const auto& row : table.rows) {
        out << row.label;
        for (const auto& e : row.state.entries) out << ',' << (!e ? "x" : std::string(to_string(*e)));
        out << ',' << row.outcome << '\n';
    }
}

}  // namespace sepm::routing
