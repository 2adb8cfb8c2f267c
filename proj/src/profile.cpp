#include "sepm/profile.hpp"

#include "yaml_util.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sepm::profile {

using detail::Reader;

namespace {

valve::OcclusionMode parse_mode(const Reader& r, const std::string& key) {
    const auto text = r.get_string(key, "deterministic");
    if (text == "deterministic") return valve::OcclusionMode::deterministic;
    if (text == "stochastic") return valve::OcclusionMode::stochastic;
    r.fail(key, "mode must be 'deterministic' or 'stochastic'");
}

Interval read_interval(const Reader& parent, const std::string& key, Interval fallback) {
    if (!parent.has(key)) return fallback;
    const auto seq = parent.sequence(key);
    if (seq.size() != 2) parent.fail(key, "expected [lo, hi]");
    Interval out{seq.number(0), seq.number(1)};
    if (!(out.lo <= out.hi)) parent.fail(key, "interval needs lo <= hi");
    return out;
}

}  // namespace

void RigParams::validate() const {
    if (!(supply_pressure >= 0.0)) throw Error(ErrorCode::invalid_argument, "rig supply_pressure must be >= 0");
    if (!(line_conductance > 0.0 && vent_conductance >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "rig needs line_conductance > 0, vent_conductance >= 0");
    }
    if (!(line_inertance >= 0.0)) throw Error(ErrorCode::invalid_argument, "rig line_inertance must be >= 0");
    if (!(inlet_volume > 0.0 && outlet_volume > 0.0 && junction_volume > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "rig volumes must be > 0");
    }
}

void Profile::validate() const {
    actuator.geometry.validate();
    actuator.magnet.validate();
    tube.validate();
    valve.validate();
    rig.validate();
    if (!(integration.dt > 0.0 && integration.sample_interval > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "integration dt and sample_interval must be > 0");
    }
    if (calibration.max_iterations < 0) {
        throw Error(ErrorCode::invalid_argument, "calibration max_iterations must be >= 0");
    }
}

bool operator==(const Profile& a, const Profile& b) {
    return serialize_profile(a) == serialize_profile(b);
}

std::string format_number(double value) { return detail::format_number(value); }

Profile parse_profile(const std::string& text, const std::string& source) {
    const Reader root = Reader::parse(text, source);
    root.allow_keys({"name", "magnetics", "valve", "rig", "integration", "calibration"});
    Profile p;
    p.name = root.get_string("name", p.name);

    if (root.has("magnetics")) {
        const auto m = root.child("magnetics");
        m.allow_keys({"geometry", "magnet", "solver"});
        if (m.has("geometry")) {
            const auto g = m.child("geometry");
            auto& geo = p.actuator.geometry;
            g.allow_keys({"rod_diameter", "rod_count", "pole_width", "pole_thickness", "gap", "path_length",
                          "leakage_permeance"});
            geo.rod_diameter = g.get_number("rod_diameter", geo.rod_diameter);
            geo.rod_count = g.get_int("rod_count", geo.rod_count);
            geo.pole_width = g.get_number("pole_width", geo.pole_width);
            geo.pole_thickness = g.get_number("pole_thickness", geo.pole_thickness);
            geo.gap = g.get_number("gap", geo.gap);
            geo.path_length = g.get_number("path_length", geo.path_length);
            geo.leakage_permeance = g.get_number("leakage_permeance", geo.leakage_permeance);
        }
        if (m.has("magnet")) {
            const auto s = m.child("magnet");
            auto& mag = p.actuator.magnet;
            s.allow_keys({"ndfeb_remanence", "alnico_remanence", "alnico_coercivity", "alnico_field_scale",
                          "coil_turns", "coil_resistance", "coil_inductance"});
            mag.ndfeb_remanence = s.get_number("ndfeb_remanence", mag.ndfeb_remanence);
            mag.alnico_remanence = s.get_number("alnico_remanence", mag.alnico_remanence);
            mag.alnico_coercivity = s.get_number("alnico_coercivity", mag.alnico_coercivity);
            mag.alnico_field_scale = s.get_number("alnico_field_scale", mag.alnico_field_scale);
            mag.coil_turns = s.get_int("coil_turns", mag.coil_turns);
            mag.coil_resistance = s.get_number("coil_resistance", mag.coil_resistance);
            mag.coil_inductance = s.get_number("coil_inductance", mag.coil_inductance);
        }
        if (m.has("solver")) {
            const auto s = m.child("solver");
            s.allow_keys({"max_iterations", "residual_tolerance"});
            p.actuator.solver.max_iterations = s.get_int("max_iterations", p.actuator.solver.max_iterations);
            p.actuator.solver.residual_tolerance =
                s.get_number("residual_tolerance", p.actuator.solver.residual_tolerance);
        }
    }

    if (root.has("valve")) {
        const auto v = root.child("valve");
        v.allow_keys({"pulse", "tube", "collapse_force", "retry_collapse_factor", "max_retry", "dead_time", "mode",
                      "stochastic_ramp"});
        if (v.has("pulse")) {
            const auto pulse = v.child("pulse");
            pulse.allow_keys({"voltage", "duration"});
            p.valve.pulse.voltage = pulse.get_number("voltage", p.valve.pulse.voltage);
            p.valve.pulse.duration = pulse.get_number("duration", p.valve.pulse.duration);
        }
        if (v.has("tube")) {
            const auto t = v.child("tube");
            t.allow_keys({"outer_diameter", "inner_diameter", "contact_length", "open_conductance",
                          "closed_leak_conductance"});
            p.tube.outer_diameter = t.get_number("outer_diameter", p.tube.outer_diameter);
            p.tube.inner_diameter = t.get_number("inner_diameter", p.tube.inner_diameter);
            p.tube.contact_length = t.get_number("contact_length", p.tube.contact_length);
            p.tube.open_conductance = t.get_number("open_conductance", p.tube.open_conductance);
            p.tube.closed_leak_conductance = t.get_number("closed_leak_conductance", p.tube.closed_leak_conductance);
        }
        p.valve.collapse_force = v.get_number("collapse_force", p.valve.collapse_force);
        p.valve.retry_collapse_factor = v.get_number("retry_collapse_factor", p.valve.retry_collapse_factor);
        p.valve.max_retry = v.get_int("max_retry", p.valve.max_retry);
        p.valve.dead_time = v.get_number("dead_time", p.valve.dead_time);
        p.valve.mode = parse_mode(v, "mode");
        p.valve.stochastic_ramp = v.get_number("stochastic_ramp", p.valve.stochastic_ramp);
    }

    if (root.has("rig")) {
        const auto r = root.child("rig");
        r.allow_keys({"supply_pressure", "line_conductance", "line_inertance", "inlet_volume", "outlet_volume",
                      "junction_volume", "vent_conductance"});
        p.rig.supply_pressure = r.get_number("supply_pressure", p.rig.supply_pressure);
        p.rig.line_conductance = r.get_number("line_conductance", p.rig.line_conductance);
        p.rig.line_inertance = r.get_number("line_inertance", p.rig.line_inertance);
        p.rig.inlet_volume = r.get_number("inlet_volume", p.rig.inlet_volume);
        p.rig.outlet_volume = r.get_number("outlet_volume", p.rig.outlet_volume);
        p.rig.junction_volume = r.get_number("junction_volume", p.rig.junction_volume);
        p.rig.vent_conductance = r.get_number("vent_conductance", p.rig.vent_conductance);
    }

    if (root.has("integration")) {
        const auto i = root.child("integration");
        i.allow_keys({"dt", "sample_interval"});
        p.integration.dt = i.get_number("dt", p.integration.dt);
        p.integration.sample_interval = i.get_number("sample_interval", p.integration.sample_interval);
    }

    if (root.has("calibration")) {
        const auto c = root.child("calibration");
        auto& cal = p.calibration;
        c.allow_keys({"targets", "tolerances", "bounds", "max_iterations"});
        if (c.has("targets")) {
            const auto t = c.child("targets");
            t.allow_keys({"pulse_energy", "dynamic_threshold", "static_limit", "closure_time", "closure_fraction"});
            cal.pulse_energy = t.get_number("pulse_energy", cal.pulse_energy);
            cal.dynamic_threshold = t.get_number("dynamic_threshold", cal.dynamic_threshold);
            cal.static_limit = t.get_number("static_limit", cal.static_limit);
            cal.closure_time = t.get_number("closure_time", cal.closure_time);
            cal.closure_fraction = t.get_number("closure_fraction", cal.closure_fraction);
        }
        if (c.has("tolerances")) {
            const auto t = c.child("tolerances");
            t.allow_keys({"pulse_energy", "static_limit", "closure_time"});
            cal.pulse_energy_tolerance = t.get_number("pulse_energy", cal.pulse_energy_tolerance);
            cal.static_limit_tolerance = t.get_number("static_limit", cal.static_limit_tolerance);
            cal.closure_time_tolerance = t.get_number("closure_time", cal.closure_time_tolerance);
        }
        if (c.has("bounds")) {
            const auto b = c.child("bounds");
            b.allow_keys({"coil_inductance", "contact_length", "collapse_force", "vent_conductance"});
            cal.coil_inductance = read_interval(b, "coil_inductance", cal.coil_inductance);
            cal.contact_length = read_interval(b, "contact_length", cal.contact_length);
            cal.collapse_force = read_interval(b, "collapse_force", cal.collapse_force);
            cal.vent_conductance = read_interval(b, "vent_conductance", cal.vent_conductance);
        }
        cal.max_iterations = c.get_int("max_iterations", cal.max_iterations);
    }

    try {
        p.validate();
    } catch (const Error& e) {
        throw ParseError(source, 1, e.what());
    }
    return p;
}

std::string serialize_profile(const Profile& p) {
    detail::Writer w;
    w.scalar("name", p.name);
    w.open("magnetics");
    {
        const auto& g = p.actuator.geometry;
        w.open("geometry");
        w.number("rod_diameter", g.rod_diameter);
        w.integer("rod_count", g.rod_count);
        w.number("pole_width", g.pole_width);
        w.number("pole_thickness", g.pole_thickness);
        w.number("gap", g.gap);
        w.number("path_length", g.path_length);
        w.number("leakage_permeance", g.leakage_permeance);
        w.close();
        const auto& m = p.actuator.magnet;
        w.open("magnet");
        w.number("ndfeb_remanence", m.ndfeb_remanence);
        w.number("alnico_remanence", m.alnico_remanence);
        w.number("alnico_coercivity", m.alnico_coercivity);
        w.number("alnico_field_scale", m.alnico_field_scale);
        w.integer("coil_turns", m.coil_turns);
        w.number("coil_resistance", m.coil_resistance);
        w.number("coil_inductance", m.coil_inductance);
        w.close();
        w.open("solver");
        w.integer("max_iterations", p.actuator.solver.max_iterations);
        w.number("residual_tolerance", p.actuator.solver.residual_tolerance);
        w.close();
    }
    w.close();
    w.open("valve");
    {
        w.open("pulse");
        w.number("voltage", p.valve.pulse.voltage);
        w.number("duration", p.valve.pulse.duration);
        w.close();
        w.open("tube");
        w.number("outer_diameter", p.tube.outer_diameter);
        w.number("inner_diameter", p.tube.inner_diameter);
        w.number("contact_length", p.tube.contact_length);
        w.number("open_conductance", p.tube.open_conductance);
        w.number("closed_leak_conductance", p.tube.closed_leak_conductance);
        w.close();
        w.number("collapse_force", p.valve.collapse_force);
        w.number("retry_collapse_factor", p.valve.retry_collapse_factor);
        w.integer("max_retry", p.valve.max_retry);
        w.number("dead_time", p.valve.dead_time);
        w.scalar("mode", p.valve.mode == valve::OcclusionMode::stochastic ? "stochastic" : "deterministic");
        w.number("stochastic_ramp", p.valve.stochastic_ramp);
    }
    w.close();
    w.open("rig");
    w.number("supply_pressure", p.rig.supply_pressure);
    w.number("line_conductance", p.rig.line_conductance);
    w.number("line_inertance", p.rig.line_inertance);
    w.number("inlet_volume", p.rig.inlet_volume);
    w.number("outlet_volume", p.rig.outlet_volume);
    w.number("junction_volume", p.rig.junction_volume);
    w.number("vent_conductance", p.rig.vent_conductance);
    w.close();
    w.open("integration");
    w.number("dt", p.integration.dt);
    w.number("sample_interval", p.integration.sample_interval);
    w.close();
    w.open("calibration");
    {
        const auto& c = p.calibration;
        w.open("targets");
        w.number("pulse_energy", c.pulse_energy);
        w.number("dynamic_threshold", c.dynamic_threshold);
        w.number("static_limit", c.static_limit);
        w.number("closure_time", c.closure_time);
        w.number("closure_fraction", c.closure_fraction);
        w.close();
        w.open("tolerances");
        w.number("pulse_energy", c.pulse_energy_tolerance);
        w.number("static_limit", c.static_limit_tolerance);
        w.number("closure_time", c.closure_time_tolerance);
        w.close();
        w.open("bounds");
        w.pair("coil_inductance", c.coil_inductance.lo, c.coil_inductance.hi);
        w.pair("contact_length", c.contact_length.lo, c.contact_length.hi);
        w.pair("collapse_force", c.collapse_force.lo, c.collapse_force.hi);
        w.pair("vent_conductance", c.vent_conductance.lo, c.vent_conductance.hi);
        w.close();
        w.integer("max_iterations", c.max_iterations);
    }
    w.close();
    return w.str();
}

Profile load_profile(const std::filesystem::path& path) {
    return parse_profile(detail::read_file(path), path.string());
}

void save_profile(const Profile& profile, const std::filesystem::path& path) {
    detail::write_file(path, serialize_profile(profile));
}

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("SEPM_DATA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return SEPM_DEFAULT_DATA_DIR;
}

std::filesystem::path default_profile_path() {
    if (const char* env = std::getenv("SEPM_PROFILE"); env != nullptr && *env != '\0') {
        return env;
    }
    return data_dir() / "profiles" / "calibrated_default.yaml";
}

std::filesystem::path resolve_profile(const std::string& reference, const std::filesystem::path& base) {
    const bool is_path = reference.find('/') != std::string::npos ||
                         (reference.size() > 5 && reference.ends_with(".yaml"));
    if (!is_path) {
        return data_dir() / "profiles" / (reference + ".yaml");
    }
    const std::filesystem::path p(reference);
    return p.is_absolute() ? p : base / p;
}

valve::Valve make_valve(const Profile& profile, const std::string& id, Polarity state) {
    return valve::Valve(id, state, profile.actuator, profile.tube, profile.tube, profile.valve);
}

}  // namespace sepm::profile
