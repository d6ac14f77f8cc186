#include "gridco/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "gridco/error.hpp"
#include "gridco/format.hpp"

namespace gridco {

std::vector<double> NetworkCase::demands_at(std::size_t t) const {
    if (t >= profile.horizon()) {
        throw DimensionError("demand step " + std::to_string(t) + " outside horizon " +
                             std::to_string(profile.horizon()));
    }
    std::vector<double> d(buses.size());
    for (std::size_t n = 0; n < buses.size(); ++n) d[n] = buses[n].demand_base * profile.shape[t];
    return d;
}

double NetworkCase::total_demand_at(std::size_t t) const {
    auto d = demands_at(t);
    return std::accumulate(d.begin(), d.end(), 0.0);
}

double NetworkCase::peak_total_demand() const {
    double base = 0.0;
    for (const auto& b : buses) base += b.demand_base;
    double peak = 0.0;
    for (double s : profile.shape) peak = std::max(peak, s);
    return base * peak;
}

double NetworkCase::total_capacity() const {
    double cap = 0.0;
    for (const auto& g : generators) cap += g.p_max;
    return cap;
}

std::vector<std::size_t> NetworkCase::candidate_lines() const {
    std::vector<std::size_t> idx;
    for (std::size_t l = 0; l < lines.size(); ++l)
        if (lines[l].candidate) idx.push_back(l);
    return idx;
}

std::vector<std::size_t> NetworkCase::strategic_generators() const {
    std::vector<std::size_t> idx;
    for (std::size_t g = 0; g < generators.size(); ++g)
        if (generators[g].strategic) idx.push_back(g);
    return idx;
}

std::size_t NetworkCase::line_index(std::string_view key) const {
    for (std::size_t l = 0; l < lines.size(); ++l)
        if (lines[l].name == key) return l;
    throw ValidationError("no line named '" + std::string(key) + "'");
}

std::size_t NetworkCase::generator_index(std::string_view key) const {
    for (std::size_t g = 0; g < generators.size(); ++g)
        if (generators[g].name == key) return g;
    throw ValidationError("no generator named '" + std::string(key) + "'");
}

std::string to_string(const Diagnostic& d) {
    return std::string(d.is_error() ? "error" : "warning") + ": " + d.where + ": " + d.message;
}

namespace {

bool connected(const NetworkCase& net) {
    const std::size_t n = net.buses.size();
    if (n == 0) return true;
    std::vector<std::vector<BusId>> adj(n);
    for (const auto& ln : net.lines) {
        if (ln.from_bus >= n || ln.to_bus >= n) continue;
        adj[ln.from_bus].push_back(ln.to_bus);
        adj[ln.to_bus].push_back(ln.from_bus);
    }
    std::vector<bool> seen(n, false);
    std::vector<BusId> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
        BusId u = stack.back();
        stack.pop_back();
        for (BusId v : adj[u]) {
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == n;
}

}  // namespace

std::vector<Diagnostic> validate(const NetworkCase& net) {
    std::vector<Diagnostic> out;
    auto err = [&](std::string where, std::string msg) {
        out.push_back({Diagnostic::Severity::error, std::move(where), std::move(msg)});
    };
    const std::size_t nb = net.buses.size();
    if (nb == 0) err("buses", "case has no buses");

    for (std::size_t n = 0; n < nb; ++n) {
        const auto& b = net.buses[n];
        const std::string where = "buses[" + std::to_string(n) + "]";
        if (b.id != n) err(where + ".id", "bus ids must be dense 0..N-1 in order, got " + std::to_string(b.id));
        if (!(b.demand_base >= 0.0) || !std::isfinite(b.demand_base))
            err(where + ".demand_base", "must be finite and >= 0");
    }
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        const auto& ln = net.lines[l];
        std::string where = "lines[" + std::to_string(l) + "]";
        if (!ln.name.empty()) where += " (" + ln.name + ")";
        if (ln.from_bus >= nb) err(where + ".from_bus", "references nonexistent bus " + std::to_string(ln.from_bus));
        if (ln.to_bus >= nb) err(where + ".to_bus", "references nonexistent bus " + std::to_string(ln.to_bus));
        if (ln.from_bus == ln.to_bus) err(where, "from_bus equals to_bus");
        if (!(ln.susceptance > 0.0) || !std::isfinite(ln.susceptance)) err(where + ".susceptance", "must be > 0");
        if (!(ln.base_capacity >= 0.0) || !std::isfinite(ln.base_capacity))
            err(where + ".base_capacity", "must be >= 0");
        if (!(ln.expansion_cost >= 0.0) || !std::isfinite(ln.expansion_cost))
            err(where + ".expansion_cost", "must be >= 0");
    }
    if (net.generators.empty()) err("generators", "case has no generators");
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const auto& gen = net.generators[g];
        std::string where = "generators[" + std::to_string(g) + "]";
        if (!gen.name.empty()) where += " (" + gen.name + ")";
        if (gen.bus >= nb) err(where + ".bus", "references nonexistent bus " + std::to_string(gen.bus));
        if (!(gen.p_max > 0.0) || !std::isfinite(gen.p_max)) err(where + ".p_max", "must be > 0");
        if (!(gen.marginal_cost > 0.0) || !std::isfinite(gen.marginal_cost))
            err(where + ".marginal_cost", "must be > 0");
        if (!(gen.alpha > 0.0) || !std::isfinite(gen.alpha)) err(where + ".alpha", "must be > 0");
    }
    if (net.profile.shape.empty()) err("profile", "demand profile is empty");
    for (std::size_t t = 0; t < net.profile.shape.size(); ++t) {
        double s = net.profile.shape[t];
        if (!(s > 0.0) || !std::isfinite(s)) err("profile[" + std::to_string(t) + "]", "must be > 0");
    }
    if (nb > 0 && net.slack_bus >= nb) err("slack_bus", "references nonexistent bus " + std::to_string(net.slack_bus));
    if (!(net.base_mva > 0.0)) err("base_mva", "must be > 0");

    if (nb > 0 && !connected(net)) err("lines", "network not connected");

    if (!net.profile.shape.empty() && net.total_capacity() < net.peak_total_demand()) {
        out.push_back({Diagnostic::Severity::warning, "generators",
                       "total capacity " + fmt15(net.total_capacity()) + " MW below peak demand " +
                           fmt15(net.peak_total_demand()) + " MW"});
    }
    return out;
}

namespace {

template <typename T>
T required(const YAML::Node& node, const char* key, const std::string& where) {
    YAML::Node v = node[key];
    if (!v) throw ParseError(where + ": missing field '" + key + "'");
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ParseError(where + "." + key + ": wrong type");
    }
}

template <typename T>
T optional(const YAML::Node& node, const char* key, T fallback, const std::string& where) {
    YAML::Node v = node[key];
    if (!v) return fallback;
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ParseError(where + "." + key + ": wrong type");
    }
}

void reject_unknown(const YAML::Node& node, std::initializer_list<std::string_view> known,
                    const std::string& where) {
    for (const auto& kv : node) {
        auto key = kv.first.as<std::string>();
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ParseError(where + ": unknown field '" + key + "'");
    }
}

BusId bus_ref(const YAML::Node& node, const char* key, const std::string& where) {
    auto v = required<long long>(node, key, where);
    // Negative ids are mapped to an out-of-range sentinel and caught by validate().
    return v < 0 ? static_cast<BusId>(-1) : static_cast<BusId>(v);
}

}  // namespace

NetworkCase parse_case(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ParseError(std::string("case file: ") + e.what());
    }
    if (!root.IsMap()) throw ParseError("case file: top level must be a mapping");
    reject_unknown(root, {"name", "base_mva", "slack_bus", "buses", "lines", "generators", "profile"}, "case");

    NetworkCase net;
    net.name = optional<std::string>(root, "name", "", "case");
    net.base_mva = optional<double>(root, "base_mva", 100.0, "case");
    net.slack_bus = bus_ref(root, "slack_bus", "case");

    for (const char* section : {"buses", "lines", "generators", "profile"}) {
        if (!root[section] || !root[section].IsSequence())
            throw ParseError(std::string("case: section '") + section + "' missing or not a list");
    }

    std::size_t i = 0;
    for (const auto& b : root["buses"]) {
        const std::string where = "buses[" + std::to_string(i++) + "]";
        reject_unknown(b, {"id", "demand_base", "name"}, where);
        Bus bus;
        bus.id = bus_ref(b, "id", where);
        bus.demand_base = required<double>(b, "demand_base", where);
        bus.name = optional<std::string>(b, "name", std::to_string(bus.id), where);
        net.buses.push_back(std::move(bus));
    }
    i = 0;
    for (const auto& l : root["lines"]) {
        const std::string where = "lines[" + std::to_string(i++) + "]";
        reject_unknown(l, {"from_bus", "to_bus", "susceptance", "base_capacity", "expansion_cost", "candidate", "name"},
                       where);
        Line ln;
        ln.from_bus = bus_ref(l, "from_bus", where);
        ln.to_bus = bus_ref(l, "to_bus", where);
        ln.susceptance = required<double>(l, "susceptance", where);
        ln.base_capacity = required<double>(l, "base_capacity", where);
        ln.expansion_cost = optional<double>(l, "expansion_cost", 0.0, where);
        ln.candidate = optional<bool>(l, "candidate", false, where);
        ln.name = optional<std::string>(l, "name", std::to_string(ln.from_bus) + "-" + std::to_string(ln.to_bus), where);
        net.lines.push_back(std::move(ln));
    }
    i = 0;
    for (const auto& g : root["generators"]) {
        const std::string where = "generators[" + std::to_string(i) + "]";
        reject_unknown(g, {"bus", "p_max", "marginal_cost", "strategic", "alpha", "name"}, where);
        Generator gen;
        gen.bus = bus_ref(g, "bus", where);
        gen.p_max = required<double>(g, "p_max", where);
        gen.marginal_cost = required<double>(g, "marginal_cost", where);
        gen.strategic = optional<bool>(g, "strategic", false, where);
        gen.alpha = optional<double>(g, "alpha", 1.0, where);
        gen.name = optional<std::string>(g, "name", "G" + std::to_string(i), where);
        net.generators.push_back(std::move(gen));
        ++i;
    }
    for (const auto& s : root["profile"]) {
        try {
            net.profile.shape.push_back(s.as<double>());
        } catch (const YAML::Exception&) {
            throw ParseError("profile: entries must be numbers");
        }
    }

    auto diags = validate(net);
    std::string msg;
    for (const auto& d : diags)
        if (d.is_error()) msg += (msg.empty() ? "" : "; ") + d.where + ": " + d.message;
    if (!msg.empty()) throw ValidationError("invalid case: " + msg);
    return net;
}

NetworkCase load_case(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

NetworkCase restrict_candidates(const NetworkCase& net, const std::vector<std::string>& names) {
    if (names.empty()) return net;
    NetworkCase out = net;
    for (auto& l : out.lines) l.candidate = false;
    for (const auto& n : names) {
        const auto l = net.line_index(n);
        if (!net.lines[l].candidate) throw ValidationError("line " + n + " is not an expansion candidate");
        out.lines[l].candidate = true;
    }
    return out;
}

std::string serialize_case(const NetworkCase& net) {
    std::ostringstream os;
    os << "name: " << (net.name.empty() ? "\"\"" : net.name) << "\n";
    os << "base_mva: " << fmt15(net.base_mva) << "\n";
    os << "slack_bus: " << net.slack_bus << "\n";
    os << "buses:" << (net.buses.empty() ? " []" : "") << "\n";
    for (const auto& b : net.buses)
        os << "  - {id: " << b.id << ", name: \"" << b.name << "\", demand_base: " << fmt15(b.demand_base) << "}\n";
    os << "lines:" << (net.lines.empty() ? " []" : "") << "\n";
    for (const auto& l : net.lines) {
        os << "  - {name: \"" << l.name << "\", from_bus: " << l.from_bus << ", to_bus: " << l.to_bus
           << ", susceptance: " << fmt15(l.susceptance) << ", base_capacity: " << fmt15(l.base_capacity)
           << ", expansion_cost: " << fmt15(l.expansion_cost) << ", candidate: " << (l.candidate ? "true" : "false")
           << "}\n";
    }
    os << "generators:" << (net.generators.empty() ? " []" : "") << "\n";
    for (const auto& g : net.generators) {
        os << "  - {name: \"" << g.name << "\", bus: " << g.bus << ", p_max: " << fmt15(g.p_max)
           << ", marginal_cost: " << fmt15(g.marginal_cost) << ", strategic: " << (g.strategic ? "true" : "false")
           << ", alpha: " << fmt15(g.alpha) << "}\n";
    }
    os << "profile: [";
    for (std::size_t t = 0; t < net.profile.shape.size(); ++t)
        os << (t ? ", " : "") << fmt15(net.profile.shape[t]);
    os << "]\n";
    return os.str();
}

void save_case(const NetworkCase& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write case file " + path.string());
    out << serialize_case(net);
}

std::string_view to_string(DesignMode mode) {
    return mode == DesignMode::continuous ? "continuous" : "discrete";
}

double installed_increment(double design, DesignMode mode, double fixed_increment) {
    if (mode == DesignMode::continuous) {
        if (!(design >= 0.0)) throw ValidationError("continuous design value must be >= 0, got " + fmt15(design));
        return design;
    }
    if (design != 0.0 && design != 1.0)
        throw ValidationError("discrete design value must be 0 or 1, got " + fmt15(design));
    return design * fixed_increment;
}

double effective_capacity(const Line& line, double design, DesignMode mode, double fixed_increment) {
    return line.base_capacity + installed_increment(design, mode, fixed_increment);
}

std::vector<double> effective_capacities(const NetworkCase& net, const std::vector<std::size_t>& candidates,
                                         const std::vector<double>& design, DesignMode mode,
                                         double fixed_increment) {
    if (design.size() != candidates.size())
        throw DimensionError("design has " + std::to_string(design.size()) + " entries for " +
                             std::to_string(candidates.size()) + " candidate lines");
    std::vector<double> cap(net.lines.size());
    for (std::size_t l = 0; l < net.lines.size(); ++l) cap[l] = net.lines[l].base_capacity;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto l = candidates[k];
        cap[l] = effective_capacity(net.lines.at(l), design[k], mode, fixed_increment);
    }
    return cap;
}

}  // namespace gridco
