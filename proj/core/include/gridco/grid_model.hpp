#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gridco {

using BusId = std::size_t;

struct Bus {
    BusId id = 0;
    double demand_base = 0.0;  // MW
    std::string name;          // display label, e.g. the 1-based IEEE number
};

struct Line {
    BusId from_bus = 0;
    BusId to_bus = 0;
    double susceptance = 0.0;     // per unit on the case MVA base
    double base_capacity = 0.0;   // MW
    double expansion_cost = 0.0;  // $/MW/year
    bool candidate = false;
    std::string name;             // e.g. "4-12"
};

struct Generator {
    BusId bus = 0;
    double p_max = 0.0;          // MW
    double marginal_cost = 0.0;  // $/MWh
    bool strategic = false;
    double alpha = 1.0;          // bid cap scale: bids lie in [cost, cost * (1 + alpha)]
    std::string name;
};

// Per-unit multipliers applied to every bus's base demand, one per step.
struct DemandProfile {
    std::vector<double> shape;

    std::size_t horizon() const { return shape.size(); }
};

struct NetworkCase {
    std::string name;
    double base_mva = 100.0;
    BusId slack_bus = 0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    DemandProfile profile;

    std::size_t num_buses() const { return buses.size(); }
    std::size_t num_lines() const { return lines.size(); }
    std::size_t num_generators() const { return generators.size(); }

    // D_n(t) for every bus.
    std::vector<double> demands_at(std::size_t t) const;
    double total_demand_at(std::size_t t) const;
    double peak_total_demand() const;
    double total_capacity() const;

    std::vector<std::size_t> candidate_lines() const;
    std::vector<std::size_t> strategic_generators() const;

    // Index lookups by display name; throw ValidationError when absent.
    std::size_t line_index(std::string_view name) const;
    std::size_t generator_index(std::string_view name) const;
};

struct Diagnostic {
    enum class Severity { warning, error };
    Severity severity = Severity::error;
    std::string where;    // e.g. "lines[3].to_bus"
    std::string message;

    bool is_error() const { return severity == Severity::error; }
};

std::string to_string(const Diagnostic& d);

// Checks every type invariant and connectivity. Never throws; an
// adequacy shortfall is reported as a warning.
std::vector<Diagnostic> validate(const NetworkCase& net);

NetworkCase parse_case(std::string_view text);
NetworkCase load_case(const std::filesystem::path& path);
std::string serialize_case(const NetworkCase& net);
void save_case(const NetworkCase& net, const std::filesystem::path& path);

// Copy of `net` in which only the named lines remain expansion candidates.
// An empty list keeps the case's own candidates. Throws ValidationError
// for unknown names or lines that are not candidates in `net`.
NetworkCase restrict_candidates(const NetworkCase& net, const std::vector<std::string>& names);

enum class DesignMode { continuous, discrete };

std::string_view to_string(DesignMode mode);

// L_base + z * dL. In continuous mode the design value is the increment
// (z = 1); in discrete mode it is z and the increment is fixed.
double effective_capacity(const Line& line, double design, DesignMode mode,
                          double fixed_increment);

// Installed increment for one design entry: w itself for continuous
// designs, z * fixed_increment for discrete ones.
double installed_increment(double design, DesignMode mode, double fixed_increment);

// Effective capacities for every line of the case; `design` is indexed
// like `candidates`.
std::vector<double> effective_capacities(const NetworkCase& net,
                                         const std::vector<std::size_t>& candidates,
                                         const std::vector<double>& design,
                                         DesignMode mode, double fixed_increment);

}  // namespace gridco
