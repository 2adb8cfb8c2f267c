#include "sepm/pneumatics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sepm::pneumatics {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::string format_double(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

}  // namespace

std::string_view to_string(NodeKind kind) noexcept {
    switch (kind) {
        case NodeKind::supply: return "supply";
        case NodeKind::internal: return "internal";
        case NodeKind::vent_terminal: return "vent-terminal";
        case NodeKind::well: return "well";
    }
    return "internal";
}

std::optional<NodeKind> parse_node_kind(std::string_view text) noexcept {
    if (text == "supply") return NodeKind::supply;
    if (text == "internal") return NodeKind::internal;
    if (text == "vent-terminal") return NodeKind::vent_terminal;
    if (text == "well") return NodeKind::well;
    return std::nullopt;
}

// -----------------------------------------------------------------------------
// Trace
// -----------------------------------------------------------------------------

const std::vector<double>& Trace::pressure_of(const std::string& node) const {
    const auto it = std::find(node_ids.begin(), node_ids.end(), node);
    if (it == node_ids.end()) {
        throw Error(ErrorCode::unknown_node, "trace has no node '" + node + "'");
    }
    return pressure[static_cast<std::size_t>(it - node_ids.begin())];
}

const std::vector<double>& Trace::flow_of(const std::string& edge) const {
    const auto it = std::find(edge_ids.begin(), edge_ids.end(), edge);
    if (it == edge_ids.end()) {
        throw Error(ErrorCode::unknown_node, "trace has no edge '" + edge + "'");
    }
    return flow[static_cast<std::size_t>(it - edge_ids.begin())];
}

std::size_t Trace::index_at(double t) const {
    const double slack = 1.0e-9 * std::max(1.0, std::abs(t));
    const auto it = std::lower_bound(time.begin(), time.end(), t - slack);
    return static_cast<std::size_t>(it - time.begin());
}

// -----------------------------------------------------------------------------
// Network construction
// -----------------------------------------------------------------------------

void Network::add_node(PressureNode node) {
    if (node.id.empty()) {
        throw Error(ErrorCode::invalid_argument, "node id must not be empty");
    }
    if (node_lookup_.contains(node.id)) {
        throw Error(ErrorCode::invalid_argument, "duplicate node id '" + node.id + "'");
    }
    if (node.kind == NodeKind::internal && !(node.capacitance > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "internal node '" + node.id + "' needs capacitance > 0");
    }
    node_lookup_.emplace(node.id, nodes_.size());
    nodes_.push_back(std::move(node));
}

void Network::add_edge(FlowEdge edge) {
    if (!(edge.conductance >= 0.0) || !(edge.inertance >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "edge '" + edge.id + "' needs conductance, inertance >= 0");
    }
    for (const auto& e : edges_) {
        if (e.id == edge.id) {
            throw Error(ErrorCode::invalid_argument, "duplicate edge id '" + edge.id + "'");
        }
    }
    edge_from_.push_back(node_index(edge.from));
    edge_to_.push_back(node_index(edge.to));
    if (edge.valve_tube) {
        edge_valve_.push_back(valve_index(edge.valve_tube->valve_id));
    } else {
        edge_valve_.push_back(std::nullopt);
    }
    edges_.push_back(std::move(edge));
    flows_.push_back(0.0);
}

void Network::add_valve(valve::Valve v) {
    if (valve_lookup_.contains(v.id())) {
        throw Error(ErrorCode::invalid_argument, "duplicate valve id '" + v.id() + "'");
    }
    valve_lookup_.emplace(v.id(), valves_.size());
    applied_.push_back(actuation_of(v));
    valves_.push_back(std::move(v));
}

bool Network::has_node(const std::string& id) const noexcept { return node_lookup_.contains(id); }

bool Network::has_valve(const std::string& id) const noexcept { return valve_lookup_.contains(id); }

std::size_t Network::node_index(const std::string& id) const {
    const auto it = node_lookup_.find(id);
    if (it == node_lookup_.end()) {
        throw Error(ErrorCode::unknown_node, "unknown node '" + id + "'");
    }
    return it->second;
}

std::size_t Network::valve_index(const std::string& id) const {
    const auto it = valve_lookup_.find(id);
    if (it == valve_lookup_.end()) {
        throw Error(ErrorCode::unknown_node, "unknown valve '" + id + "'");
    }
    return it->second;
}

const PressureNode& Network::node(const std::string& id) const { return nodes_[node_index(id)]; }

const valve::Valve& Network::valve(const std::string& id) const { return valves_[valve_index(id)]; }

void Network::set_pressure(const std::string& id, double pressure) {
    if (!std::isfinite(pressure)) {
        throw Error(ErrorCode::invalid_argument, "pressure must be finite");
    }
    nodes_[node_index(id)].pressure = pressure;
}

Network::Actuation Network::actuation_of(const valve::Valve& v) const {
    Actuation a;
    a.conductance = v.tube_conductances();
    a.sealed = v.occluded();
    a.hold_limit = a.sealed ? v.hold_pressure_limit() : 0.0;
    return a;
}

// -----------------------------------------------------------------------------
// Integration
// -----------------------------------------------------------------------------

double Network::edge_conductance(std::size_t e) const {
    const auto& edge = edges_[e];
    if (!edge_valve_[e]) {
        return edge.conductance;
    }
    const auto& act = applied_[*edge_valve_[e]];
    const auto tube = edge.valve_tube->tube;
    const double g = tube == valve::Tube::upper ? act.conductance.upper : act.conductance.lower;
    if (act.sealed == tube) {
        // A sealed tube yields once the differential exceeds the holding limit.
        const double dp = std::abs(nodes_[edge_from_[e]].pressure - nodes_[edge_to_[e]].pressure);
        if (dp > act.hold_limit) {
            return valves_[*edge_valve_[e]].tube(tube).open_conductance;
        }
    }
    return g;
}

double Network::stability_bound() const {
    std::vector<double> conductance_sum(nodes_.size(), 0.0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (edges_[e].inertance > 0.0) {
            continue;
        }
        double g = edges_[e].conductance;
        if (edge_valve_[e]) {
            // worst case over the valve's reachable states
            g = valves_[*edge_valve_[e]].tube(edges_[e].valve_tube->tube).open_conductance;
        }
        conductance_sum[edge_from_[e]] += g;
        conductance_sum[edge_to_[e]] += g;
    }
    double bound = kInfinity;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].fixed() && conductance_sum[i] > 0.0) {
            bound = std::min(bound, nodes_[i].capacitance / conductance_sum[i]);
        }
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const double inertance = edges_[e].inertance;
        if (inertance <= 0.0) {
            continue;
        }
        for (const std::size_t end : {edge_from_[e], edge_to_[e]}) {
            if (!nodes_[end].fixed()) {
                bound = std::min(bound, std::sqrt(inertance * nodes_[end].capacitance));
            }
        }
    }
    return bound;
}

void Network::single_step(double h) {
    inflow_.assign(nodes_.size(), 0.0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const double g = edge_conductance(e);
        const double dp = nodes_[edge_from_[e]].pressure - nodes_[edge_to_[e]].pressure;
        const double inertance = edges_[e].inertance;
        double q;
        if (inertance > 0.0) {
            // implicit in the resistive drag, explicit in the driving pressure
            q = (inertance * flows_[e] + h * dp) * g / (inertance * g + h);
        } else {
            q = g * dp;
        }
        flows_[e] = q;
        inflow_[edge_from_[e]] -= q;
        inflow_[edge_to_[e]] += q;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].fixed()) {
            nodes_[i].pressure += h * inflow_[i] / nodes_[i].capacitance;
        }
    }
}

void Network::integrate(double span, double dt_max) {
    if (span <= 0.0) {
        return;
    }
    const double h_max = std::min(dt_max, 0.5 * stability_bound());
    const auto count = std::max(1L, static_cast<long>(std::ceil(span / h_max)));
    const double h = span / static_cast<double>(count);
    for (long n = 0; n < count; ++n) {
        single_step(h);
    }
}

void Network::step(double dt) {
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "step dt must be > 0");
    }
    const double bound = stability_bound();
    if (!(dt < bound)) {
        std::ostringstream msg;
        msg << "dt = " << dt << " s violates the explicit stability bound " << bound << " s";
        throw UnstableStep(msg.str(), bound);
    }
    apply_due_actuations();
    single_step(dt);
    time_ += dt;
}

double Network::stored_volume() const noexcept {
    double total = 0.0;
    for (const auto& n : nodes_) {
        if (!n.fixed()) {
            total += n.capacitance * n.pressure;
        }
    }
    return total;
}

std::optional<double> Network::next_actuation() const noexcept {
    if (pending_.empty()) {
        return std::nullopt;
    }
    return pending_.front().time;
}

void Network::apply_due_actuations() {
    while (!pending_.empty() && pending_.front().time <= time_) {
        applied_[pending_.front().valve_index] = pending_.front().actuation;
        pending_.erase(pending_.begin());
    }
}

valve::SwitchResult Network::command_pulse(const std::string& valve_id, Polarity polarity, std::mt19937_64* rng) {
    const std::size_t idx = valve_index(valve_id);
    auto& v = valves_[idx];
    const auto target = valve::occluded_tube(polarity);

    double line_pressure = 0.0;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (edge_valve_[e] == idx && edges_[e].valve_tube->tube == target) {
            line_pressure = std::max({line_pressure, nodes_[edge_from_[e]].pressure, nodes_[edge_to_[e]].pressure});
        }
    }

    auto schedule = [&] {
        Pending p{time_ + v.config().dead_time, idx, actuation_of(v)};
        const auto pos = std::upper_bound(pending_.begin(), pending_.end(), p.time,
                                          [](double t, const Pending& q) { return t < q.time; });
        pending_.insert(pos, std::move(p));
        apply_due_actuations();
    };

    try {
        const auto result = v.switch_to(polarity, line_pressure, rng);
        schedule();
        return result;
    } catch (const valve::OcclusionFailed&) {
        schedule();
        throw;
    }
}

void Network::restore_valve(const std::string& valve_id, Polarity state, long pulse_count) {
    const std::size_t idx = valve_index(valve_id);
    const auto& old = valves_[idx];
    valve::Valve restored(old.id(), state, old.actuator(), old.upper_tube(), old.lower_tube(), old.config());
    restored.set_pulse_count(pulse_count);
    valves_[idx] = std::move(restored);
    applied_[idx] = actuation_of(valves_[idx]);
    std::erase_if(pending_, [idx](const Pending& p) { return p.valve_index == idx; });
}

void Network::advance_to(double t_end, const IntegrationOptions& options, TraceRecorder* recorder) {
    if (t_end < time_) {
        throw Error(ErrorCode::invalid_argument, "cannot advance backwards in time");
    }
    if (!(options.dt > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "integration dt must be > 0");
    }
    while (true) {
        apply_due_actuations();
        if (recorder != nullptr && recorder->next_sample_time() <= time_) {
            recorder->record(*this);
        }
        if (time_ >= t_end) {
            break;
        }
        double target = t_end;
        if (recorder != nullptr) {
            target = std::min(target, recorder->next_sample_time());
        }
        if (!pending_.empty()) {
            target = std::min(target, pending_.front().time);
        }
        integrate(target - time_, options.dt);
        time_ = target;
    }
}

// -----------------------------------------------------------------------------
// Recording
// -----------------------------------------------------------------------------

TraceRecorder::TraceRecorder(const Network& network, double sample_interval) {
    if (!(sample_interval > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "sample_interval must be > 0");
    }
    trace_.sample_interval = sample_interval;
    const auto& nodes = network.nodes();
    const auto& edges = network.edges();
    node_order_.resize(nodes.size());
    std::iota(node_order_.begin(), node_order_.end(), 0);
    std::sort(node_order_.begin(), node_order_.end(),
              [&](std::size_t a, std::size_t b) { return nodes[a].id < nodes[b].id; });
    edge_order_.resize(edges.size());
    std::iota(edge_order_.begin(), edge_order_.end(), 0);
    std::sort(edge_order_.begin(), edge_order_.end(),
              [&](std::size_t a, std::size_t b) { return edges[a].id < edges[b].id; });
    for (auto i : node_order_) trace_.node_ids.push_back(nodes[i].id);
    for (auto e : edge_order_) trace_.edge_ids.push_back(edges[e].id);
    trace_.pressure.resize(nodes.size());
    trace_.flow.resize(edges.size());
    // Sample grid anchored at the start time.
    start_time_ = network.time();
}

double TraceRecorder::next_sample_time() const noexcept {
    return start_time_ + static_cast<double>(next_index_) * trace_.sample_interval;
}

void TraceRecorder::record(const Network& network) {
    const auto& nodes = network.nodes();
    const auto& edges = network.edges();
    trace_.time.push_back(next_sample_time());
    for (std::size_t k = 0; k < node_order_.size(); ++k) {
        trace_.pressure[k].push_back(nodes[node_order_[k]].pressure);
    }
    for (std::size_t k = 0; k < edge_order_.size(); ++k) {
        const std::size_t e = edge_order_[k];
        double q = network.edge_flows()[e];
        if (edges[e].inertance == 0.0) {
            q = network.edge_conductance(e) *
                (network.node(edges[e].from).pressure - network.node(edges[e].to).pressure);
        }
        trace_.flow[k].push_back(q);
    }
    ++next_index_;
}

void TraceRecorder::mark(double time, std::string label) {
    trace_.markers.push_back(Marker{time, std::move(label)});
}

Trace TraceRecorder::finish() && { return std::move(trace_); }

// -----------------------------------------------------------------------------
// Free functions
// -----------------------------------------------------------------------------

Network step(Network network, double dt) {
    network.step(dt);
    return network;
}

Trace run(Network& network, double duration, const std::vector<Event>& events,
          const IntegrationOptions& options, std::mt19937_64* rng) {
    if (!(duration >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "duration must be >= 0");
    }
    if (!std::is_sorted(events.begin(), events.end(),
                        [](const Event& a, const Event& b) { return a.time < b.time; })) {
        throw Error(ErrorCode::invalid_argument, "events must be sorted by time");
    }
    const double start = network.time();
    TraceRecorder recorder(network, options.sample_interval);
    for (const auto& event : events) {
        if (event.time < 0.0 || event.time > duration) {
            continue;
        }
        const double t = start + event.time;
        network.advance_to(t, options, &recorder);
        if (const auto* pulse = std::get_if<PulseCommand>(&event.action)) {
            recorder.mark(t, "pulse " + pulse->valve_id + " " + std::string(to_string(pulse->polarity)));
            try {
                (void)network.command_pulse(pulse->valve_id, pulse->polarity, rng);
            } catch (const valve::OcclusionFailed& failure) {
                std::ostringstream msg;
                msg << "t = " << format_double(t) << " s: " << failure.what();
                throw valve::OcclusionFailed(msg.str(), failure.result());
            }
        } else {
            const auto& change = std::get<SupplyChange>(event.action);
            if (network.node(change.node_id).kind != NodeKind::supply) {
                throw Error(ErrorCode::invalid_argument, "node '" + change.node_id + "' is not a supply");
            }
            recorder.mark(t, "supply " + change.node_id + " " + format_double(change.pressure));
            network.set_pressure(change.node_id, change.pressure);
        }
    }
    network.advance_to(start + duration, options, &recorder);
    return std::move(recorder).finish();
}

double measure_settle(const Trace& trace, const std::string& node, const SettleBand& band, double event_time) {
    const auto& series = trace.pressure_of(node);
    const std::size_t first = trace.index_at(event_time);
    if (first >= series.size()) {
        throw NeverSettles("trace ends before t = " + format_double(event_time));
    }
    auto inside = [&](double p) { return std::abs(p - band.target) <= band.half_width; };
    std::size_t settle = series.size();
    for (std::size_t i = series.size(); i-- > first;) {
        if (!inside(series[i])) {
            break;
        }
        settle = i;
    }
    if (settle == series.size()) {
        throw NeverSettles("node '" + node + "' never enters the band around " + format_double(band.target) +
                           " Pa");
    }
    return std::max(0.0, trace.time[settle] - event_time);
}

double measure_settle(const Trace& trace, const std::string& node, double fraction, double target,
                      double event_time) {
    if (!(fraction >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "settle fraction must be >= 0");
    }
    const auto& series = trace.pressure_of(node);
    const std::size_t first = trace.index_at(event_time);
    if (first >= series.size()) {
        throw NeverSettles("trace ends before t = " + format_double(event_time));
    }
    const double step = std::abs(series[first] - target);
    return measure_settle(trace, node, SettleBand{target, fraction * step}, event_time);
}

Trace slice(const Trace& trace, double t0, double t1) {
    Trace out;
    out.sample_interval = trace.sample_interval;
    out.node_ids = trace.node_ids;
    out.edge_ids = trace.edge_ids;
    const std::size_t first = trace.index_at(t0);
    std::size_t last = first;
    const double slack = 1.0e-9 * std::max(1.0, std::abs(t1));
    while (last < trace.time.size() && trace.time[last] <= t1 + slack) ++last;
    out.time.assign(trace.time.begin() + static_cast<std::ptrdiff_t>(first),
                    trace.time.begin() + static_cast<std::ptrdiff_t>(last));
    auto cut = [&](const std::vector<std::vector<double>>& series) {
        std::vector<std::vector<double>> result;
        for (const auto& s : series) {
            result.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(first),
                                s.begin() + static_cast<std::ptrdiff_t>(last));
        }
        return result;
    };
    out.pressure = cut(trace.pressure);
    out.flow = cut(trace.flow);
    for (const auto& m : trace.markers) {
        if (m.time >= t0 && m.time <= t1) out.markers.push_back(m);
    }
    return out;
}

void write_csv(const Trace& trace, std::ostream& out) {
    out << "time_s";
    for (const auto& id : trace.node_ids) out << ",P_" << id;
    for (const auto& id : trace.edge_ids) out << ",Q_" << id;
    out << '\n';
    for (std::size_t i = 0; i < trace.time.size(); ++i) {
        out << format_double(trace.time[i]);
        for (const auto& series : trace.pressure) out << ',' << format_double(series[i]);
        for (const auto& series : trace.flow) out << ',' << format_double(series[i]);
        out << '\n';
    }
}

Trace read_csv(std::istream& in, const std::string& source) {
    Trace trace;
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "empty trace file");
    }
    std::vector<bool> is_pressure;
    {
        std::istringstream header(line);
        std::string cell;
        std::getline(header, cell, ',');
        if (cell != "time_s") {
            throw ParseError(source, 1, "first column must be time_s");
        }
        while (std::getline(header, cell, ',')) {
            if (cell.rfind("P_", 0) == 0) {
                trace.node_ids.push_back(cell.substr(2));
                is_pressure.push_back(true);
            } else if (cell.rfind("Q_", 0) == 0) {
                trace.edge_ids.push_back(cell.substr(2));
                is_pressure.push_back(false);
            } else {
                throw ParseError(source, 1, "unrecognised column '" + cell + "'");
            }
        }
    }
    trace.pressure.resize(trace.node_ids.size());
    trace.flow.resize(trace.edge_ids.size());
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<double> values;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = std::min(line.find(',', pos), line.size());
            double value = 0.0;
            const auto result = std::from_chars(line.data() + pos, line.data() + comma, value);
            if (result.ec != std::errc{} || result.ptr != line.data() + comma) {
                throw ParseError(source, line_no, "malformed number");
            }
            values.push_back(value);
            pos = comma + 1;
        }
        if (values.size() != is_pressure.size() + 1) {
            throw ParseError(source, line_no, "wrong number of columns");
        }
        trace.time.push_back(values[0]);
        std::size_t p = 0;
        std::size_t q = 0;
        for (std::size_t c = 0; c < is_pressure.size(); ++c) {
            if (is_pressure[c]) {
                trace.pressure[p++].push_back(values[c + 1]);
            } else {
                trace.flow[q++].push_back(values[c + 1]);
            }
        }
    }
    if (trace.time.size() >= 2) {
        trace.sample_interval = trace.time[1] - trace.time[0];
    }
    return trace;
}

}  // namespace sepm::pneumatics
