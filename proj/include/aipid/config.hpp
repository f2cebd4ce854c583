#pragma once

// JSON scenario documents.
//
// Top-level sections: plant, sensor, disturbance, setpoints, controller, sim.
// Every section and field is optional; unknown keys are rejected. The
// normalised dump writes every effective value, so parse(dump(cfg)) == cfg.
// Parameter paths are dotted paths into that dump, with array indices as
// numbers: "plant.a_p", "controller.pi_w.0".

#include <aipid/errors.hpp>
#include <aipid/metrics.hpp>
#include <aipid/simloop.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace aipid {

using Json = nlohmann::json;

namespace detail {

/// Walks one JSON object, remembering which keys were read so leftovers can
/// be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const Json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ValidationError(path_.empty() ? "<root>" : path_, "must be an object");
        }
    }

    ~ObjectReader() = default;
    ObjectReader(const ObjectReader &) = delete;
    ObjectReader &operator=(const ObjectReader &) = delete;

    std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

    const Json *find(std::string_view key) {
        seen_.insert(std::string(key));
        auto it = obj_.find(std::string(key));
        return it == obj_.end() ? nullptr : &*it;
    }

    double number(std::string_view key, double fallback) {
        const Json *v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_number()) {
            throw ValidationError(field(key), "must be a number");
        }
        return v->get<double>();
    }

    std::optional<double> optional_number(std::string_view key, std::optional<double> fallback) {
        const Json *v = find(key);
        if (v == nullptr || v->is_null()) {
            return v == nullptr ? fallback : std::nullopt;
        }
        if (!v->is_number()) {
            throw ValidationError(field(key), "must be a number or null");
        }
        return v->get<double>();
    }

    std::uint64_t unsigned_integer(std::string_view key, std::uint64_t fallback) {
        const Json *v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (v->is_number_unsigned()) {
            return v->get<std::uint64_t>();
        }
        if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
            return static_cast<std::uint64_t>(v->get<std::int64_t>());
        }
        throw ValidationError(field(key), "must be a non-negative integer");
    }

    bool boolean(std::string_view key, bool fallback) {
        const Json *v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_boolean()) {
            throw ValidationError(field(key), "must be true or false");
        }
        return v->get<bool>();
    }

    std::string string(std::string_view key, std::string fallback) {
        const Json *v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_string()) {
            throw ValidationError(field(key), "must be a string");
        }
        return v->get<std::string>();
    }

    std::vector<double> numbers(std::string_view key, std::vector<double> fallback) {
        const Json *v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_array()) {
            throw ValidationError(field(key), "must be an array of numbers");
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number()) {
                throw ValidationError(field(key) + "." + std::to_string(i), "must be a number");
            }
            out.push_back((*v)[i].get<double>());
        }
        return out;
    }

    OrderVector orders(std::string_view key, const OrderVector &fallback, std::size_t expected) {
        const std::vector<double> values = numbers(key, std::vector<double>(fallback.begin(), fallback.end()));
        if (values.size() != expected) {
            throw ValidationError(field(key), "must have " + std::to_string(expected) + " entries");
        }
        return OrderVector(std::span<const double>(values));
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.contains(it.key())) {
                throw ValidationError(field(it.key()), "unknown key");
            }
        }
    }

private:
    const Json &obj_;
    std::string path_;
    std::set<std::string> seen_;
};

inline NoiseKind noise_kind_from(const std::string &s, const std::string &field) {
    if (s == "white") {
        return NoiseKind::white;
    }
    if (s == "coloured" || s == "colored") {
        return NoiseKind::coloured;
    }
    throw ValidationError(field, "must be \"white\" or \"coloured\"");
}

inline PlantKind plant_kind_from(const std::string &s, const std::string &field) {
    if (s == "first_order") {
        return PlantKind::first_order;
    }
    if (s == "second_order") {
        return PlantKind::second_order;
    }
    if (s == "nonlinear_first_order") {
        return PlantKind::nonlinear_first_order;
    }
    throw ValidationError(field, "must be first_order, second_order or nonlinear_first_order");
}

inline DisturbanceKind disturbance_kind_from(const std::string &s, const std::string &field) {
    if (s == "none") {
        return DisturbanceKind::none;
    }
    if (s == "step") {
        return DisturbanceKind::step;
    }
    if (s == "ramp") {
        return DisturbanceKind::ramp;
    }
    if (s == "polynomial") {
        return DisturbanceKind::polynomial;
    }
    throw ValidationError(field, "must be none, step, ramp or polynomial");
}

inline NoiseSpec read_noise(const Json *doc, const std::string &path) {
    NoiseSpec spec;
    if (doc == nullptr) {
        return spec;
    }
    ObjectReader r(*doc, path);
    spec.kind = noise_kind_from(r.string("kind", std::string(to_string(spec.kind))), r.field("kind"));
    spec.sigma = r.number("sigma", spec.sigma);
    spec.gamma = r.number("gamma", spec.gamma);
    spec.seed = r.unsigned_integer("seed", spec.seed);
    r.finish();
    return spec;
}

inline Json write_noise(const NoiseSpec &spec) {
    return Json{{"kind", to_string(spec.kind)}, {"sigma", spec.sigma}, {"gamma", spec.gamma}, {"seed", spec.seed}};
}

inline Json write_orders(const OrderVector &v) { return Json(std::vector<double>(v.begin(), v.end())); }

inline Json optional_to_json(const std::optional<double> &v) { return v ? Json(*v) : Json(nullptr); }

/// Default observation precisions: unit integral and proportional gains, no
/// derivative action or higher orders.
inline OrderVector default_pi_z(std::size_t p) {
    OrderVector v(p, 0.0);
    for (std::size_t i = 0; i < std::min<std::size_t>(p, 2); ++i) {
        v[i] = 1.0;
    }
    return v;
}

inline OrderVector default_dy_da(std::size_t p) {
    return OrderVector(p, 1.0);
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    // nlohmann reports the position one past the offending character.
    return {line, col > 1 ? col - 1 : col};
}

} // namespace detail

inline ScenarioConfig config_from_json(const Json &doc) {
    using detail::ObjectReader;
    ScenarioConfig cfg;
    ObjectReader root(doc, "");

    if (const Json *p = root.find("plant")) {
        ObjectReader r(*p, "plant");
        PlantSpec &s = cfg.plant;
        s.kind = detail::plant_kind_from(r.string("kind", std::string(to_string(s.kind))), r.field("kind"));
        s.a_p = r.number("a_p", s.a_p);
        s.b_p = r.number("b_p", s.b_p);
        s.c_p = r.number("c_p", s.c_p);
        s.omega = r.number("omega", s.omega);
        s.zeta = r.number("zeta", s.zeta);
        s.b_nl = r.number("b_nl", s.b_nl);
        s.x0 = r.number("x0", s.x0);
        s.v0 = r.number("v0", s.v0);
        s.process_noise = detail::read_noise(r.find("process_noise"), "plant.process_noise");
        r.finish();
    }

    if (const Json *p = root.find("sensor")) {
        ObjectReader r(*p, "sensor");
        cfg.sensor.meas_noise = detail::read_noise(r.find("noise"), "sensor.noise");
        if (const Json *vol = r.find("volatility"); vol != nullptr && !vol->is_null()) {
            ObjectReader rv(*vol, "sensor.volatility");
            VolatilityRamp ramp;
            ramp.start_sigma = rv.number("start_sigma", ramp.start_sigma);
            ramp.end_sigma = rv.number("end_sigma", ramp.end_sigma);
            ramp.t_start = rv.number("t_start", ramp.t_start);
            ramp.t_end = rv.number("t_end", ramp.t_end);
            rv.finish();
            cfg.sensor.volatility = ramp;
        }
        r.finish();
    }

    if (const Json *p = root.find("disturbance")) {
        ObjectReader r(*p, "disturbance");
        DisturbanceSpec &s = cfg.disturbance;
        s.kind = detail::disturbance_kind_from(r.string("kind", std::string(to_string(s.kind))), r.field("kind"));
        s.amplitude = r.number("amplitude", s.amplitude);
        s.onset = r.number("onset", s.onset);
        s.slope = r.number("slope", s.slope);
        s.coefficients = r.numbers("coefficients", s.coefficients);
        r.finish();
    }

    if (const Json *p = root.find("setpoints")) {
        if (!p->is_array()) {
            throw ValidationError("setpoints", "must be an array of {time, value} objects");
        }
        cfg.setpoints.clear();
        for (std::size_t i = 0; i < p->size(); ++i) {
            ObjectReader r((*p)[i], "setpoints." + std::to_string(i));
            SetpointChange sp;
            sp.time = r.number("time", 0.0);
            sp.value = r.number("value", 0.0);
            r.finish();
            cfg.setpoints.push_back(sp);
        }
    }

    if (const Json *p = root.find("controller")) {
        ObjectReader r(*p, "controller");
        ControllerSetup &c = cfg.controller;
        const std::uint64_t depth = r.unsigned_integer("p", c.depth);
        if (depth < 1 || depth > kMaxDepth) {
            throw ValidationError("controller.p", "must be in 1.." + std::to_string(kMaxDepth));
        }
        c.depth = static_cast<std::size_t>(depth);
        const std::size_t n = c.depth;
        c.alpha = r.number("alpha", c.alpha);
        c.obs_gain = r.number("obs_gain", c.obs_gain);
        ControllerConfig &k = c.config;
        k.kappa_x = r.number("kappa_x", k.kappa_x);
        k.kappa_a = r.number("kappa_a", k.kappa_a);
        k.kappa_pi = r.number("kappa_pi", k.kappa_x / 1000.0);
        k.tau_ema = r.number("tau_ema", k.tau_ema);
        k.dy_da = r.orders("dy_da", detail::default_dy_da(n), n);
        k.clamp_expectations = r.boolean("clamp_expectations", k.clamp_expectations);
        k.u_max = r.optional_number("u_max", k.u_max);
        k.learn_precisions = r.boolean("learn_precisions", k.learn_precisions);
        c.pi_z = r.orders("pi_z", detail::default_pi_z(n), n);
        c.pi_w = r.orders("pi_w", OrderVector(n - 1, 1.0), n - 1);
        c.hyper_weight_z = r.orders("hyper_weight_z", OrderVector(n, 0.0), n);
        c.hyper_weight_w = r.orders("hyper_weight_w", OrderVector(n - 1, 0.0), n - 1);
        c.hyper_target_z = r.orders("hyper_target_z", OrderVector(n, 1.0), n);
        c.hyper_target_w = r.orders("hyper_target_w", OrderVector(n - 1, 1.0), n - 1);
        c.initial_action = r.number("initial_action", c.initial_action);
        c.n_filt = r.number("n_filt", c.n_filt);
        r.finish();
    }

    if (const Json *p = root.find("sim")) {
        ObjectReader r(*p, "sim");
        SimSettings &s = cfg.sim;
        s.duration = r.number("duration", s.duration);
        s.dt = r.number("dt", s.dt);
        s.seed = r.unsigned_integer("seed", s.seed);
        s.record_stride = static_cast<std::size_t>(r.unsigned_integer("record_stride", s.record_stride));
        s.metrics_start = r.optional_number("metrics_start", std::nullopt);
        s.metrics_end = r.optional_number("metrics_end", std::nullopt);
        r.finish();
    }
    root.finish();

    validate(cfg);
    // Make the metric window explicit so the normalised dump carries it.
    const auto [window, reference] = default_metric_window(cfg);
    (void)reference;
    cfg.sim.metrics_start = window.t_start;
    cfg.sim.metrics_end = window.t_end;
    validate(cfg);
    return cfg;
}

/// Parses a scenario document. Syntax errors raise ParseError with the
/// 1-based line and column; constraint violations raise ValidationError.
inline ScenarioConfig parse_config(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error &e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        throw ParseError(line, col, e.what());
    }
    return config_from_json(doc);
}

inline Json config_to_json(const ScenarioConfig &cfg) {
    using detail::write_noise;
    using detail::write_orders;
    Json doc;
    doc["plant"] = Json{{"kind", to_string(cfg.plant.kind)},
                        {"a_p", cfg.plant.a_p},
                        {"b_p", cfg.plant.b_p},
                        {"c_p", cfg.plant.c_p},
                        {"omega", cfg.plant.omega},
                        {"zeta", cfg.plant.zeta},
                        {"b_nl", cfg.plant.b_nl},
                        {"x0", cfg.plant.x0},
                        {"v0", cfg.plant.v0},
                        {"process_noise", write_noise(cfg.plant.process_noise)}};

    Json sensor{{"noise", write_noise(cfg.sensor.meas_noise)}, {"volatility", nullptr}};
    if (cfg.sensor.volatility) {
        const VolatilityRamp &v = *cfg.sensor.volatility;
        sensor["volatility"] = Json{
            {"start_sigma", v.start_sigma}, {"end_sigma", v.end_sigma}, {"t_start", v.t_start}, {"t_end", v.t_end}};
    }
    doc["sensor"] = sensor;

    doc["disturbance"] = Json{{"kind", to_string(cfg.disturbance.kind)},
                              {"amplitude", cfg.disturbance.amplitude},
                              {"onset", cfg.disturbance.onset},
                              {"slope", cfg.disturbance.slope},
                              {"coefficients", cfg.disturbance.coefficients}};

    Json setpoints = Json::array();
    for (const SetpointChange &sp : cfg.setpoints) {
        setpoints.push_back(Json{{"time", sp.time}, {"value", sp.value}});
    }
    doc["setpoints"] = setpoints;

    const ControllerSetup &c = cfg.controller;
    doc["controller"] = Json{{"p", c.depth},
                             {"alpha", c.alpha},
                             {"obs_gain", c.obs_gain},
                             {"kappa_x", c.config.kappa_x},
                             {"kappa_a", c.config.kappa_a},
                             {"kappa_pi", c.config.kappa_pi},
                             {"tau_ema", c.config.tau_ema},
                             {"dy_da", write_orders(c.config.dy_da)},
                             {"clamp_expectations", c.config.clamp_expectations},
                             {"u_max", detail::optional_to_json(c.config.u_max)},
                             {"learn_precisions", c.config.learn_precisions},
                             {"pi_z", write_orders(c.pi_z)},
                             {"pi_w", write_orders(c.pi_w)},
                             {"hyper_weight_z", write_orders(c.hyper_weight_z)},
                             {"hyper_weight_w", write_orders(c.hyper_weight_w)},
                             {"hyper_target_z", write_orders(c.hyper_target_z)},
                             {"hyper_target_w", write_orders(c.hyper_target_w)},
                             {"initial_action", c.initial_action},
                             {"n_filt", c.n_filt}};

    doc["sim"] = Json{{"duration", cfg.sim.duration},
                      {"dt", cfg.sim.dt},
                      {"seed", cfg.sim.seed},
                      {"record_stride", cfg.sim.record_stride},
                      {"metrics_start", detail::optional_to_json(cfg.sim.metrics_start)},
                      {"metrics_end", detail::optional_to_json(cfg.sim.metrics_end)}};
    return doc;
}

/// Normalised configuration text. nlohmann writes the shortest decimal form
/// that round-trips, so the dump re-parses to bit-identical values.
inline std::string dump_config(const ScenarioConfig &cfg) { return config_to_json(cfg).dump(2) + "\n"; }

namespace detail {

/// Locates the leaf a dotted path names; nullptr if any segment is missing.
inline Json *resolve_path(Json &doc, std::string_view path) {
    Json *node = &doc;
    while (!path.empty()) {
        const std::size_t dot = path.find('.');
        const std::string_view seg = path.substr(0, dot);
        path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
        if (seg.empty()) {
            return nullptr;
        }
        if (node->is_object()) {
            auto it = node->find(std::string(seg));
            if (it == node->end()) {
                return nullptr;
            }
            node = &*it;
        } else if (node->is_array()) {
            std::size_t idx = 0;
            const auto [ptr, ec] = std::from_chars(seg.data(), seg.data() + seg.size(), idx);
            if (ec != std::errc{} || ptr != seg.data() + seg.size() || idx >= node->size()) {
                return nullptr;
            }
            node = &(*node)[idx];
        } else {
            return nullptr;
        }
    }
    return node;
}

} // namespace detail

/// Replaces the scalar at `path` in a normalised document.
inline void set_param(Json &doc, std::string_view path, const Json &value) {
    Json *leaf = detail::resolve_path(doc, path);
    if (leaf == nullptr || leaf->is_object() || leaf->is_array()) {
        throw UnknownParamPath(std::string(path));
    }
    *leaf = value;
}

/// Applies one scalar override to a scenario and re-validates it.
inline ScenarioConfig with_param(const ScenarioConfig &cfg, std::string_view path, const Json &value) {
    Json doc = config_to_json(cfg);
    set_param(doc, path, value);
    return config_from_json(doc);
}

/// "path=value" overrides; the value is read as JSON, falling back to a
/// plain string (so plant.kind=second_order works without quotes).
inline ScenarioConfig apply_overrides(const ScenarioConfig &cfg, const std::vector<std::string> &overrides) {
    Json doc = config_to_json(cfg);
    for (const std::string &ov : overrides) {
        const std::size_t eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ValidationError("--set", "expected path=value, got '" + ov + "'");
        }
        const std::string path = ov.substr(0, eq);
        const std::string text = ov.substr(eq + 1);
        Json value = Json::parse(text, nullptr, false);
        if (value.is_discarded()) {
            value = text;
        }
        set_param(doc, path, value);
    }
    return config_from_json(doc);
}

} // namespace aipid
