#include "consim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

namespace consim {

namespace {

constexpr double pi = 3.14159265358979323846;

using nlohmann::json;

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed, bool strict,
                std::vector<std::string>* warnings) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (allowed.count(key)) continue;
        const std::string where = path.empty() ? key : path + "." + key;
        if (strict) throw ScenarioError(where, "unknown field");
        if (warnings) warnings->push_back(where + ": unknown field (ignored)");
    }
}

const json* find(const json& obj, const std::string& key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

// Numbers may be JSON numbers or decimal strings (full-precision friendly).
double as_number(const json& value, const std::string& path) {
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        const std::string& text = value.get_ref<const std::string&>();
        char* end = nullptr;
        const double parsed = std::strtod(text.c_str(), &end);
        if (end == text.c_str() + text.size() && !text.empty()) return parsed;
        throw ScenarioError(path, "cannot parse '" + text + "' as a number");
    }
    throw ScenarioError(path, "expected a number");
}

double number_field(const json& obj, const std::string& key, const std::string& path,
                    double fallback) {
    const json* v = find(obj, key);
    return v ? as_number(*v, path + "." + key) : fallback;
}

int int_field(const json& obj, const std::string& key, const std::string& path, int fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    const double d = as_number(*v, path + "." + key);
    if (d != std::floor(d)) throw ScenarioError(path + "." + key, "expected an integer");
    return static_cast<int>(d);
}

std::vector<double> number_array(const json& value, const std::string& path) {
    if (!value.is_array()) throw ScenarioError(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(value.size());
    for (size_t i = 0; i < value.size(); ++i)
        out.push_back(as_number(value[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

NetworkModel parse_explicit_topology(const json& topo, bool strict,
                                     std::vector<std::string>* warnings) {
    const json* nodes = find(topo, "nodes");
    const json* channels = find(topo, "channels");
    if (!nodes || !channels)
        throw ScenarioError("topology", "explicit topology needs both 'nodes' and 'channels'");
    const int n = int_field(topo, "nodes", "topology", 0);
    if (!channels->is_array()) throw ScenarioError("topology.channels", "expected an array");

    std::vector<MultipathChannel> parsed;
    for (size_t ci = 0; ci < channels->size(); ++ci) {
        const std::string cpath = "topology.channels[" + std::to_string(ci) + "]";
        const json& ch = (*channels)[ci];
        if (!ch.is_object()) throw ScenarioError(cpath, "expected an object");
        check_keys(ch, cpath, {"receiver", "transmitter", "paths"}, strict, warnings);
        const int receiver = int_field(ch, "receiver", cpath, -1);
        const int transmitter = int_field(ch, "transmitter", cpath, -1);
        const json* paths = find(ch, "paths");
        if (!paths || !paths->is_array() || paths->empty())
            throw ScenarioError(cpath + ".paths", "expected a non-empty array");
        std::vector<Path> ps;
        for (size_t pi = 0; pi < paths->size(); ++pi) {
            const std::string ppath = cpath + ".paths[" + std::to_string(pi) + "]";
            const json& p = (*paths)[pi];
            if (!p.is_object()) throw ScenarioError(ppath, "expected an object");
            check_keys(p, ppath, {"amplitude", "delay"}, strict, warnings);
            ps.push_back({number_field(p, "amplitude", ppath, 0.0),
                          number_field(p, "delay", ppath, 0.0)});
        }
        try {
            parsed.push_back(make_channel(receiver, transmitter, std::move(ps)));
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(cpath, e.what());
        }
    }
    try {
        return make_network(n, std::move(parsed));
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("topology", e.what());
    }
}

GeneratedTopologySpec parse_generated_topology(const json& topo, double sample_time, bool strict,
                                               std::vector<std::string>* warnings) {
    GeneratedTopologySpec spec;

    const json* positions = find(topo, "positions");
    if (!positions || !positions->is_array() || positions->empty())
        throw ScenarioError("topology.positions", "expected a non-empty array of [x, y] pairs");
    for (size_t i = 0; i < positions->size(); ++i) {
        const std::string ppath = "topology.positions[" + std::to_string(i) + "]";
        const std::vector<double> xy = number_array((*positions)[i], ppath);
        if (xy.size() != 2) throw ScenarioError(ppath, "expected exactly [x, y]");
        spec.positions.push_back({xy[0], xy[1]});
    }

    const json* connectivity = find(topo, "connectivity");
    if (!connectivity || !connectivity->is_array())
        throw ScenarioError("topology.connectivity",
                            "expected an array of [receiver, transmitter] pairs");
    for (size_t i = 0; i < connectivity->size(); ++i) {
        const std::string epath = "topology.connectivity[" + std::to_string(i) + "]";
        const std::vector<double> rq = number_array((*connectivity)[i], epath);
        if (rq.size() != 2 || rq[0] != std::floor(rq[0]) || rq[1] != std::floor(rq[1]))
            throw ScenarioError(epath, "expected an integer pair [receiver, transmitter]");
        spec.connectivity.push_back({static_cast<int>(rq[0]), static_cast<int>(rq[1])});
    }

    const json* model = find(topo, "channel_model");
    if (!model || !model->is_object())
        throw ScenarioError("topology.channel_model", "expected an object");
    const std::string mpath = "topology.channel_model";
    check_keys(*model, mpath,
               {"mean_amplitude", "fading_sigma", "delay_spread", "paths", "propagation_speed",
                "seed"},
               strict, warnings);
    spec.params.mean_amplitude = number_field(*model, "mean_amplitude", mpath, 1.0);
    spec.params.fading_sigma = number_field(*model, "fading_sigma", mpath, 0.5);
    spec.params.delay_spread = number_field(*model, "delay_spread", mpath, 5.0 * sample_time);
    spec.params.path_count = int_field(*model, "paths", mpath, 5);
    spec.params.propagation_speed = number_field(*model, "propagation_speed", mpath, 3.0e8);
    const json* seed = find(*model, "seed");
    if (seed) {
        if (!seed->is_number_unsigned() && !seed->is_number_integer())
            throw ScenarioError(mpath + ".seed", "expected an unsigned integer");
        spec.params.seed = seed->get<std::uint64_t>();
    }
    // The generator shares the simulator's sampling time; duplicating it in
    // the file would only invite inconsistency.
    spec.params.sample_time = sample_time;

    if (spec.params.path_count < 1) throw ScenarioError(mpath + ".paths", "must be >= 1");
    if (spec.params.delay_spread <= 0.0) throw ScenarioError(mpath + ".delay_spread", "must be > 0");
    if (spec.params.propagation_speed <= 0.0)
        throw ScenarioError(mpath + ".propagation_speed", "must be > 0");
    if (spec.params.fading_sigma < 0.0) throw ScenarioError(mpath + ".fading_sigma", "must be >= 0");
    return spec;
}

} // namespace

std::string experiment_name(Experiment e) {
    switch (e) {
        case Experiment::Check: return "check";
        case Experiment::Simulate: return "simulate";
        case Experiment::Rate: return "rate";
        case Experiment::Compensate: return "compensate";
        case Experiment::EstimateGamma: return "estimate-gamma";
        case Experiment::Pipeline: return "pipeline";
        case Experiment::Batch: return "batch";
    }
    return "simulate";
}

std::optional<Experiment> experiment_from_name(const std::string& name) {
    for (Experiment e : {Experiment::Check, Experiment::Simulate, Experiment::Rate,
                         Experiment::Compensate, Experiment::EstimateGamma, Experiment::Pipeline,
                         Experiment::Batch})
        if (experiment_name(e) == name) return e;
    return std::nullopt;
}

int Scenario::node_count() const {
    if (explicit_network) return explicit_network->node_count;
    return static_cast<int>(generated->positions.size());
}

NetworkModel Scenario::realize_network(std::optional<std::uint64_t> seed_override) const {
    if (explicit_network) return *explicit_network;
    ChannelModelParams params = generated->params;
    if (seed_override) params.seed = *seed_override;
    return generate_network(generated->positions, generated->connectivity, params);
}

Scenario scenario_from_json(const json& doc, bool strict, std::vector<std::string>* warnings) {
    if (!doc.is_object()) throw ScenarioError("", "scenario document must be a JSON object");
    check_keys(doc, "",
               {"name", "experiment", "topology", "sim", "inputs", "check", "postmap", "seeds",
                "output"},
               strict, warnings);

    Scenario s;
    if (const json* name = find(doc, "name")) {
        if (!name->is_string()) throw ScenarioError("name", "expected a string");
        s.name = name->get<std::string>();
    }

    if (const json* experiment = find(doc, "experiment")) {
        if (!experiment->is_string()) throw ScenarioError("experiment", "expected a string");
        const auto parsed = experiment_from_name(experiment->get<std::string>());
        if (!parsed)
            throw ScenarioError("experiment",
                                "unknown experiment '" + experiment->get<std::string>() +
                                    "' (one of check, simulate, rate, compensate, estimate-gamma, "
                                    "pipeline, batch)");
        s.experiment = *parsed;
        s.experiment_pinned = true;
    }

    // sim block first: the generated-topology parser needs the sampling time.
    const json* sim = find(doc, "sim");
    const json sim_default = json::object();
    if (!sim) sim = &sim_default;
    if (!sim->is_object()) throw ScenarioError("sim", "expected an object");
    check_keys(*sim, "sim",
               {"K", "T", "horizon", "window", "epsilon_consensus", "epsilon_settle",
                "stability_margin", "divergence_limit", "history"},
               strict, warnings);
    s.sim.coupling_gain = number_field(*sim, "K", "sim", 1.0);
    s.sim.sample_time = number_field(*sim, "T", "sim", 0.01);
    s.sim.horizon = int_field(*sim, "horizon", "sim", 10000);
    s.sim.window = int_field(*sim, "window", "sim", 50);
    s.sim.epsilon_consensus = number_field(*sim, "epsilon_consensus", "sim", 1e-9);
    s.sim.epsilon_settle = number_field(*sim, "epsilon_settle", "sim", 1e-9);
    s.sim.stability_margin = number_field(*sim, "stability_margin", "sim", 0.5);
    s.sim.divergence_limit = number_field(*sim, "divergence_limit", "sim", 1e12);

    const json* topo = find(doc, "topology");
    if (!topo || !topo->is_object()) throw ScenarioError("topology", "expected an object");
    const bool looks_explicit = find(*topo, "channels") || find(*topo, "nodes");
    const bool looks_generated =
        find(*topo, "positions") || find(*topo, "connectivity") || find(*topo, "channel_model");
    if (looks_explicit == looks_generated)
        throw ScenarioError("topology", "give exactly one topology source: either "
                                        "nodes+channels or positions+connectivity+channel_model");
    if (looks_explicit) {
        check_keys(*topo, "topology", {"nodes", "channels"}, strict, warnings);
        s.explicit_network = parse_explicit_topology(*topo, strict, warnings);
    } else {
        check_keys(*topo, "topology", {"positions", "connectivity", "channel_model"}, strict,
                   warnings);
        s.generated = parse_generated_topology(*topo, s.sim.sample_time, strict, warnings);
    }
    const int n = s.node_count();

    const json* inputs = find(doc, "inputs");
    if (!inputs || !inputs->is_object())
        throw ScenarioError("inputs", "expected an object with 'u' and 'c'");
    check_keys(*inputs, "inputs", {"u", "c"}, strict, warnings);
    if (const json* u = find(*inputs, "u")) s.sim.u = number_array(*u, "inputs.u");
    if (const json* c = find(*inputs, "c"))
        s.sim.c = number_array(*c, "inputs.c");
    else
        s.sim.c.assign(static_cast<size_t>(n), 1.0);
    if (s.sim.u.empty()) throw ScenarioError("inputs.u", "required");

    if (const json* history = find(*sim, "history")) {
        if (!history->is_array()) throw ScenarioError("sim.history", "expected an array");
        for (size_t i = 0; i < history->size(); ++i) {
            const std::string hpath = "sim.history[" + std::to_string(i) + "]";
            const json& h = (*history)[i];
            if (h.is_object()) {
                check_keys(h, hpath, {"value", "slope"}, strict, warnings);
                s.sim.history.push_back({number_field(h, "value", hpath, 0.0),
                                         number_field(h, "slope", hpath, 0.0)});
            } else {
                s.sim.history.push_back({as_number(h, hpath), 0.0});
            }
        }
    }

    const json* check = find(doc, "check");
    if (check) {
        if (!check->is_object()) throw ScenarioError("check", "expected an object");
        check_keys(*check, "check", {"omega_max", "omega_steps"}, strict, warnings);
        s.omega_max = number_field(*check, "omega_max", "check", 0.0);
        s.omega_steps = int_field(*check, "omega_steps", "check", 1024);
    }
    if (s.omega_max == 0.0) s.omega_max = pi / s.sim.sample_time; // Nyquist band default
    if (s.omega_max < 0.0) throw ScenarioError("check.omega_max", "must be >= 0");
    if (s.omega_steps < 2) throw ScenarioError("check.omega_steps", "must be >= 2");

    if (const json* postmap = find(doc, "postmap")) {
        if (!postmap->is_string()) throw ScenarioError("postmap", "expected a string");
        s.postmap = postmap->get<std::string>();
        if (s.postmap != "identity" && s.postmap != "square" && s.postmap != "abs")
            throw ScenarioError("postmap", "unknown postmap '" + s.postmap +
                                               "' (one of identity, square, abs)");
    }

    if (const json* seeds = find(doc, "seeds")) {
        if (!seeds->is_array()) throw ScenarioError("seeds", "expected an array");
        for (size_t i = 0; i < seeds->size(); ++i) {
            const json& v = (*seeds)[i];
            if (!v.is_number_unsigned() && !v.is_number_integer())
                throw ScenarioError("seeds[" + std::to_string(i) + "]",
                                    "expected an unsigned integer");
            s.seeds.push_back(v.get<std::uint64_t>());
        }
        std::set<std::uint64_t> unique(s.seeds.begin(), s.seeds.end());
        if (unique.size() != s.seeds.size()) throw ScenarioError("seeds", "must be distinct");
    }
    // When the file does not pin the experiment the subcommand decides later;
    // run_experiment re-checks these constraints in that case.
    if (s.experiment_pinned) {
        if (s.experiment == Experiment::Batch) {
            if (!s.generated)
                throw ScenarioError("topology", "batch needs a generated topology (channels are "
                                                "redrawn per seed)");
            if (s.seeds.empty()) throw ScenarioError("seeds", "batch needs a non-empty seed list");
        } else if (!s.seeds.empty()) {
            throw ScenarioError("seeds", "only valid for the batch experiment");
        }
    }

    if (const json* output = find(doc, "output")) {
        if (!output->is_object()) throw ScenarioError("output", "expected an object");
        check_keys(*output, "output", {"downsample"}, strict, warnings);
        s.downsample = int_field(*output, "downsample", "output", 1);
    }
    if (s.downsample < 1) throw ScenarioError("output.downsample", "must be >= 1");

    try {
        s.sim.validate(n);
    } catch (const std::invalid_argument& e) {
        // validate() already prefixes the field path
        const std::string what = e.what();
        const size_t colon = what.find(':');
        throw ScenarioError(what.substr(0, colon), colon == std::string::npos
                                                       ? what
                                                       : what.substr(colon + 2));
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path, bool strict,
                       std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("", "cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError("", std::string("JSON parse error: ") + e.what());
    }
    return scenario_from_json(doc, strict, warnings);
}

nlohmann::json scenario_to_json(const Scenario& s) {
    json doc;
    if (!s.name.empty()) doc["name"] = s.name;
    doc["experiment"] = experiment_name(s.experiment);

    json topo;
    if (s.explicit_network) {
        topo["nodes"] = s.explicit_network->node_count;
        json channels = json::array();
        for (const MultipathChannel& ch : s.explicit_network->channels) {
            json paths = json::array();
            for (const Path& p : ch.paths)
                paths.push_back({{"amplitude", p.amplitude}, {"delay", p.delay}});
            channels.push_back({{"receiver", ch.receiver},
                                {"transmitter", ch.transmitter},
                                {"paths", std::move(paths)}});
        }
        topo["channels"] = std::move(channels);
    } else {
        json positions = json::array();
        for (const auto& p : s.generated->positions) positions.push_back({p[0], p[1]});
        topo["positions"] = std::move(positions);
        json connectivity = json::array();
        for (const auto& [r, q] : s.generated->connectivity) connectivity.push_back({r, q});
        topo["connectivity"] = std::move(connectivity);
        topo["channel_model"] = {{"mean_amplitude", s.generated->params.mean_amplitude},
                                 {"fading_sigma", s.generated->params.fading_sigma},
                                 {"delay_spread", s.generated->params.delay_spread},
                                 {"paths", s.generated->params.path_count},
                                 {"propagation_speed", s.generated->params.propagation_speed},
                                 {"seed", s.generated->params.seed}};
    }
    doc["topology"] = std::move(topo);

    json sim = {{"K", s.sim.coupling_gain},
                {"T", s.sim.sample_time},
                {"horizon", s.sim.horizon},
                {"window", s.sim.window},
                {"epsilon_consensus", s.sim.epsilon_consensus},
                {"epsilon_settle", s.sim.epsilon_settle},
                {"stability_margin", s.sim.stability_margin},
                {"divergence_limit", s.sim.divergence_limit}};
    if (!s.sim.history.empty()) {
        json history = json::array();
        for (const HistorySpec& h : s.sim.history)
            history.push_back({{"value", h.value}, {"slope", h.slope}});
        sim["history"] = std::move(history);
    }
    doc["sim"] = std::move(sim);

    doc["inputs"] = {{"u", s.sim.u}, {"c", s.sim.c}};
    doc["check"] = {{"omega_max", s.omega_max}, {"omega_steps", s.omega_steps}};
    doc["postmap"] = s.postmap;
    if (!s.seeds.empty()) doc["seeds"] = s.seeds;
    doc["output"] = {{"downsample", s.downsample}};
    return doc;
}

} // namespace consim
