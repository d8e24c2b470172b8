#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mlc/error.hpp"
#include "mlc/geometry.hpp"
#include "mlc/removal.hpp"
#include "mlc/walk.hpp"

namespace mlc {

using Json = nlohmann::ordered_json;

struct TransversalSpec {
    double angle_deg = 60.0;
    double pivot = 0.0;
};

struct WalkerSpec {
    WalkerConfig config;
    std::uint32_t plane = 0;
    std::variant<Complex, RandomInBox> start = RandomInBox{};
};

struct PlaneHoleSpec {
    std::uint32_t plane = 0;
    std::uint64_t interval = 0;
    double psi = 0.5;
};

struct IslandRequest {
    std::uint32_t plane = 0;
    Complex center;
    double radius = 1.0;
    std::optional<double> h;
};

struct TransportRequest {
    WalkerId from = 0;
    WalkerId to = 1;
    std::optional<std::pair<std::uint32_t, std::uint32_t>> line;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::uint64_t horizon = 100;
    std::vector<double> parallel{0.0, 1.0};
    std::vector<TransversalSpec> transversal{TransversalSpec{}};
    WalkerSpec defaults;
    std::vector<WalkerSpec> walkers;  // resolved, one per walker
    bool removal_enabled = false;
    RemovalConfig removal;
    std::optional<PlaneHoleSpec> plane_hole;
    std::vector<IslandRequest> islands;
    std::vector<TransportRequest> transport;
    std::string output;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ConfigInvalid, path + ": " + what);
}

// Typed access to one JSON object; rejects unknown keys when finished.
class Reader {
  public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) config_fail(path_, "expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }
    const Json& at(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double real(const std::string& key, double dflt) {
        if (!has(key)) return dflt;
        const Json& v = at(key);
        if (!v.is_number()) config_fail(field(key), "expected a number");
        return v.get<double>();
    }
    std::uint64_t count(const std::string& key, std::uint64_t dflt) {
        if (!has(key)) return dflt;
        const Json& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) config_fail(field(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }
    bool flag(const std::string& key, bool dflt) {
        if (!has(key)) return dflt;
        const Json& v = at(key);
        if (!v.is_boolean()) config_fail(field(key), "expected true or false");
        return v.get<bool>();
    }
    std::string text(const std::string& key, const std::string& dflt) {
        if (!has(key)) return dflt;
        const Json& v = at(key);
        if (!v.is_string()) config_fail(field(key), "expected a string");
        return v.get<std::string>();
    }
    std::vector<double> reals(const std::string& key, std::size_t n) {
        const Json& v = at(key);
        if (!v.is_array() || (n != 0 && v.size() != n)) {
            config_fail(field(key), n ? "expected an array of " + std::to_string(n) + " numbers" : "expected an array");
        }
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) config_fail(field(key), "expected numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) config_fail(field(k), "unknown field");
        }
    }

  private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline RadiusDistribution parse_radius(const Json& j, const std::string& path, const RadiusDistribution& dflt) {
    Reader r(j, path);
    const std::string kind = r.text("kind", "constant");
    RadiusDistribution out;
    if (kind == "constant") {
        const double base = std::holds_alternative<ConstantRadius>(dflt) ? std::get<ConstantRadius>(dflt).r : 1.0;
        out = ConstantRadius{r.real("r", base)};
    } else if (kind == "uniform") {
        const UniformRadius base = std::holds_alternative<UniformRadius>(dflt) ? std::get<UniformRadius>(dflt) : UniformRadius{};
        out = UniformRadius{r.real("lo", base.lo), r.real("hi", base.hi)};
    } else if (kind == "lognormal") {
        const LogNormalRadius base =
            std::holds_alternative<LogNormalRadius>(dflt) ? std::get<LogNormalRadius>(dflt) : LogNormalRadius{};
        out = LogNormalRadius{r.real("mu", base.mu), r.real("sigma", base.sigma)};
    } else {
        config_fail(r.field("kind"), "unknown radius kind '" + kind + "'");
    }
    r.finish();
    try {
        validate(out);
    } catch (const Error& e) {
        config_fail(path, e.what());
    }
    return out;
}

inline std::variant<Complex, RandomInBox> parse_start(const Json& j, const std::string& path) {
    Reader r(j, path);
    std::variant<Complex, RandomInBox> out;
    if (r.has("point")) {
        const auto p = r.reals("point", 2);
        out = Complex{p[0], p[1]};
        if (r.has("box")) config_fail(path, "give either point or box");
    } else if (r.has("box")) {
        const auto b = r.reals("box", 4);
        if (!(b[0] < b[1] && b[2] < b[3])) config_fail(r.field("box"), "need xmin < xmax and ymin < ymax");
        out = RandomInBox{b[0], b[1], b[2], b[3]};
    } else {
        config_fail(path, "needs point or box");
    }
    r.finish();
    return out;
}

// Reads walker fields over `base`; `id_allowed` admits the override key "id".
inline WalkerSpec parse_walker(const Json& j, const std::string& path, const WalkerSpec& base, bool id_allowed) {
    Reader r(j, path);
    if (id_allowed) r.has("id");
    WalkerSpec w = base;
    WalkerConfig& c = w.config;
    w.plane = static_cast<std::uint32_t>(r.count("plane", base.plane));
    if (r.has("start")) w.start = parse_start(r.at("start"), r.field("start"));
    if (r.has("radius")) c.radius = parse_radius(r.at("radius"), r.field("radius"), base.config.radius);
    c.eps_dist = r.real("eps_dist", c.eps_dist);
    c.eps_int = r.real("eps_int", c.eps_int);
    c.p_switch = r.real("p_switch", c.p_switch);
    c.max_rejections = static_cast<std::uint32_t>(r.count("max_rejections", c.max_rejections));
    c.nested_mode = r.flag("nested", c.nested_mode);
    c.recurrent = r.flag("recurrent", c.recurrent);
    c.snap_to_lines = r.flag("snap_to_lines", c.snap_to_lines);
    r.finish();
    auto check = [&](bool ok, const char* key, const char* what) {
        if (!ok) config_fail(r.field(key), what);
    };
    check(c.eps_dist > 0.0, "eps_dist", "must be positive");
    check(c.eps_int > 0.0, "eps_int", "must be positive");
    check(c.p_switch >= 0.0 && c.p_switch <= 1.0, "p_switch", "must lie in [0,1]");
    check(c.max_rejections > 0, "max_rejections", "must be positive");
    return w;
}

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json radius_json(const RadiusDistribution& d) {
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantRadius>) return {{"kind", "constant"}, {"r", v.r}};
            if constexpr (std::is_same_v<T, UniformRadius>) return {{"kind", "uniform"}, {"lo", v.lo}, {"hi", v.hi}};
            if constexpr (std::is_same_v<T, LogNormalRadius>)
                return {{"kind", "lognormal"}, {"mu", v.mu}, {"sigma", v.sigma}};
        },
        d);
}

inline Json walker_json(const WalkerSpec& w) {
    Json j;
    j["plane"] = w.plane;
    if (const auto* z = std::get_if<Complex>(&w.start)) {
        j["start"] = {{"point", complex_json(*z)}};
    } else {
        const auto& b = std::get<RandomInBox>(w.start);
        j["start"] = {{"box", {b.xmin, b.xmax, b.ymin, b.ymax}}};
    }
    j["radius"] = radius_json(w.config.radius);
    j["eps_dist"] = w.config.eps_dist;
    j["eps_int"] = w.config.eps_int;
    j["p_switch"] = w.config.p_switch;
    j["max_rejections"] = w.config.max_rejections;
    j["nested"] = w.config.nested_mode;
    j["recurrent"] = w.config.recurrent;
    j["snap_to_lines"] = w.config.snap_to_lines;
    return j;
}

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
    using detail::config_fail;
    using detail::Reader;
    RunConfig cfg;
    Reader r(j, "");
    cfg.seed = r.count("seed", 0);
    cfg.horizon = r.count("horizon", cfg.horizon);
    cfg.output = r.text("output", "");

    if (r.has("bundle")) {
        Reader b(r.at("bundle"), "bundle");
        if (b.has("parallel")) cfg.parallel = b.reals("parallel", 0);
        if (b.has("transversal")) {
            const Json& t = b.at("transversal");
            if (!t.is_array()) config_fail("bundle.transversal", "expected an array");
            cfg.transversal.clear();
            for (std::size_t i = 0; i < t.size(); ++i) {
                Reader tr(t[i], "bundle.transversal[" + std::to_string(i) + "]");
                TransversalSpec s;
                s.angle_deg = tr.real("angle", s.angle_deg);
                s.pivot = tr.real("pivot", s.pivot);
                tr.finish();
                if (!(s.angle_deg > 0.0 && s.angle_deg < 180.0)) {
                    config_fail(tr.field("angle"), "must lie strictly between 0 and 180 degrees");
                }
                cfg.transversal.push_back(s);
            }
        }
        b.finish();
    }
    if (cfg.parallel.empty()) config_fail("bundle.parallel", "need at least one parallel plane");
    for (std::size_t i = 0; i < cfg.parallel.size(); ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            if (std::abs(cfg.parallel[i] - cfg.parallel[k]) <= kPlaneTolerance) {
                config_fail("bundle.parallel[" + std::to_string(i) + "]", "duplicate offset");
            }
        }
    }
    const std::size_t n_planes = cfg.parallel.size() + cfg.transversal.size();

    std::size_t count = 1;
    if (r.has("walkers")) {
        Reader w(r.at("walkers"), "walkers");
        count = w.count("count", 1);
        if (w.has("defaults")) cfg.defaults = detail::parse_walker(w.at("defaults"), "walkers.defaults", cfg.defaults, false);
        cfg.walkers.assign(count, cfg.defaults);
        if (w.has("overrides")) {
            const Json& o = w.at("overrides");
            if (!o.is_array()) config_fail("walkers.overrides", "expected an array");
            for (std::size_t i = 0; i < o.size(); ++i) {
                const std::string path = "walkers.overrides[" + std::to_string(i) + "]";
                if (!o[i].is_object() || !o[i].contains("id") || !o[i]["id"].is_number_integer()) {
                    config_fail(path + ".id", "expected a walker index");
                }
                const auto id = o[i]["id"].get<std::int64_t>();
                if (id < 0 || static_cast<std::size_t>(id) >= count) config_fail(path + ".id", "no such walker");
                cfg.walkers[static_cast<std::size_t>(id)] = detail::parse_walker(o[i], path, cfg.defaults, true);
            }
        }
        w.finish();
    } else {
        cfg.walkers.assign(count, cfg.defaults);
    }
    for (std::size_t i = 0; i < cfg.walkers.size(); ++i) {
        cfg.walkers[i].config.seed = cfg.seed;
        if (cfg.walkers[i].plane >= n_planes) {
            config_fail("walkers[" + std::to_string(i) + "].plane", "no such plane");
        }
    }

    if (r.has("removal")) {
        Reader m(r.at("removal"), "removal");
        cfg.removal_enabled = m.flag("enabled", true);
        cfg.removal.window = m.count("window", cfg.removal.window);
        cfg.removal.eps_share = m.real("eps_share", cfg.removal.eps_share);
        if (m.has("start")) {
            Reader s(m.at("start"), "removal.start");
            const std::string kind = s.text("kind", "fixed");
            if (kind == "fixed") {
                cfg.removal.start = FixedStart{s.count("interval", 1)};
            } else if (kind == "random") {
                cfg.removal.start = RandomStart{s.count("lo", 1), s.count("hi", 1)};
            } else {
                config_fail("removal.start.kind", "unknown start kind '" + kind + "'");
            }
            s.finish();
        }
        if (m.has("mode")) {
            Reader s(m.at("mode"), "removal.mode");
            const std::string kind = s.text("kind", "full_window");
            if (kind == "full_window") {
                cfg.removal.mode = FullWindow{};
            } else if (kind == "fraction") {
                cfg.removal.mode = Fraction{s.real("psi", 0.5)};
            } else {
                config_fail("removal.mode.kind", "unknown mode '" + kind + "'");
            }
            s.finish();
        }
        if (m.has("plane_hole")) {
            Reader s(m.at("plane_hole"), "removal.plane_hole");
            PlaneHoleSpec ph;
            ph.plane = static_cast<std::uint32_t>(s.count("plane", 0));
            ph.interval = s.count("interval", 0);
            ph.psi = s.real("psi", ph.psi);
            s.finish();
            if (ph.plane >= cfg.parallel.size()) config_fail("removal.plane_hole.plane", "must name a parallel plane");
            if (!(ph.psi > 0.0 && ph.psi <= 1.0)) config_fail("removal.plane_hole.psi", "must lie in (0,1]");
            cfg.plane_hole = ph;
        }
        m.finish();
        try {
            cfg.removal.validate();
        } catch (const Error& e) {
            config_fail("removal", e.what());
        }
        if (cfg.plane_hole && !cfg.removal_enabled) config_fail("removal.plane_hole", "requires removal.enabled");
    }

    if (r.has("islands")) {
        const Json& is = r.at("islands");
        if (!is.is_array()) config_fail("islands", "expected an array");
        for (std::size_t i = 0; i < is.size(); ++i) {
            Reader d(is[i], "islands[" + std::to_string(i) + "]");
            IslandRequest q;
            q.plane = static_cast<std::uint32_t>(d.count("plane", 0));
            const auto c = d.reals("center", 2);
            q.center = {c[0], c[1]};
            q.radius = d.real("radius", q.radius);
            if (d.has("h")) q.h = d.real("h", 0.0);
            d.finish();
            if (q.plane >= n_planes) config_fail(d.field("plane"), "no such plane");
            if (!(q.radius > 0.0)) config_fail(d.field("radius"), "must be positive");
            if (q.h && !(*q.h > 0.0 && *q.h < q.radius / 8.0)) config_fail(d.field("h"), "need 0 < h < radius / 8");
            cfg.islands.push_back(q);
        }
    }
    if (r.has("transport")) {
        const Json& ts = r.at("transport");
        if (!ts.is_array()) config_fail("transport", "expected an array");
        for (std::size_t i = 0; i < ts.size(); ++i) {
            Reader d(ts[i], "transport[" + std::to_string(i) + "]");
            TransportRequest q;
            q.from = static_cast<WalkerId>(d.count("from", 0));
            q.to = static_cast<WalkerId>(d.count("to", 1));
            if (d.has("line")) {
                const auto l = d.reals("line", 2);
                q.line = std::pair{static_cast<std::uint32_t>(l[0]), static_cast<std::uint32_t>(l[1])};
            }
            d.finish();
            if (q.from >= count || q.to >= count) config_fail(d.field("from"), "no such walker");
            cfg.transport.push_back(q);
        }
    }
    r.finish();
    return cfg;
}

// Every field written out, defaults filled in. Parsing it back yields the same run.
inline Json to_json(const RunConfig& cfg) {
    Json j;
    j["seed"] = cfg.seed;
    j["horizon"] = cfg.horizon;
    Json tv = Json::array();
    for (const auto& t : cfg.transversal) tv.push_back({{"angle", t.angle_deg}, {"pivot", t.pivot}});
    j["bundle"] = {{"parallel", cfg.parallel}, {"transversal", tv}};
    Json w;
    w["count"] = cfg.walkers.size();
    const Json base = detail::walker_json(cfg.defaults);
    w["defaults"] = base;
    Json over = Json::array();
    for (std::size_t i = 0; i < cfg.walkers.size(); ++i) {
        Json wj = detail::walker_json(cfg.walkers[i]);
        if (wj == base) continue;
        Json o{{"id", i}};
        for (auto& [k, v] : wj.items()) o[k] = v;
        over.push_back(o);
    }
    w["overrides"] = over;
    j["walkers"] = w;
    Json rm;
    rm["enabled"] = cfg.removal_enabled;
    rm["window"] = cfg.removal.window;
    rm["eps_share"] = cfg.removal.eps_share;
    if (const auto* s = std::get_if<FixedStart>(&cfg.removal.start)) {
        rm["start"] = {{"kind", "fixed"}, {"interval", s->interval}};
    } else {
        const auto& s2 = std::get<RandomStart>(cfg.removal.start);
        rm["start"] = {{"kind", "random"}, {"lo", s2.lo}, {"hi", s2.hi}};
    }
    if (const auto* f = std::get_if<Fraction>(&cfg.removal.mode)) {
        rm["mode"] = {{"kind", "fraction"}, {"psi", f->psi}};
    } else {
        rm["mode"] = {{"kind", "full_window"}};
    }
    if (cfg.plane_hole) {
        rm["plane_hole"] = {{"plane", cfg.plane_hole->plane}, {"interval", cfg.plane_hole->interval}, {"psi", cfg.plane_hole->psi}};
    } else {
        rm["plane_hole"] = nullptr;
    }
    j["removal"] = rm;
    Json is = Json::array();
    for (const auto& q : cfg.islands) {
        Json d{{"plane", q.plane}, {"center", detail::complex_json(q.center)}, {"radius", q.radius}};
        d["h"] = q.h ? Json(*q.h) : Json(nullptr);
        is.push_back(d);
    }
    j["islands"] = is;
    Json ts = Json::array();
    for (const auto& q : cfg.transport) {
        Json d{{"from", q.from}, {"to", q.to}};
        d["line"] = q.line ? Json::array({q.line->first, q.line->second}) : Json(nullptr);
        ts.push_back(d);
    }
    j["transport"] = ts;
    j["output"] = cfg.output;
    return j;
}

inline Bundle build_bundle(const RunConfig& cfg) {
    Bundle b;
    for (double o : cfg.parallel) b.add_parallel(o);
    for (const auto& t : cfg.transversal) b.add_transversal(t.angle_deg, t.pivot);
    return b;
}

}  // namespace mlc
