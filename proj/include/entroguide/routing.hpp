#pragma once

// Capacitated vehicle routing: instance model, route parsing from agent
// text, feasibility/distance evaluation and an exact optimum for small
// instances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "entroguide/text.hpp"
#include "entroguide/types.hpp"

namespace entroguide {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double euclidean(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Customer {
    Point position;
    double demand = 1.0;
};

struct RoutingInstance {
    Point depot;
    std::vector<Customer> customers;
    double vehicle_capacity = 1.0;
    std::optional<double> optimal_distance;

    void validate() const {
        auto finite = [](Point p) { return std::isfinite(p.x) && std::isfinite(p.y); };
        if (!finite(depot)) throw DataError("routing depot coordinates must be finite");
        if (!(vehicle_capacity > 0.0)) throw DataError("routing vehicle_capacity must be positive");
        for (std::size_t i = 0; i < customers.size(); ++i) {
            const auto& c = customers[i];
            if (!finite(c.position)) throw DataError("routing customer " + std::to_string(i + 1) + " has non-finite coordinates");
            if (!(c.demand > 0.0)) throw DataError("routing customer " + std::to_string(i + 1) + " demand must be positive");
            if (c.demand > vehicle_capacity) {
                throw DataError("routing customer " + std::to_string(i + 1) + " demand exceeds vehicle capacity");
            }
        }
        if (optimal_distance && !(*optimal_distance > 0.0) && !customers.empty()) {
            throw DataError("routing optimal_distance must be positive");
        }
    }
};

// A route is an ordered list of 1-based customer ids; depot legs are implicit.
using Route = std::vector<int>;

inline double route_length(const Route& route, const RoutingInstance& inst) {
    if (route.empty()) return 0.0;
    double d = 0.0;
    Point prev = inst.depot;
    for (int id : route) {
        const Point p = inst.customers.at(static_cast<std::size_t>(id - 1)).position;
        d += euclidean(prev, p);
        prev = p;
    }
    return d + euclidean(prev, inst.depot);
}

struct RouteEvaluation {
    bool feasible = false;
    double distance = 0.0;
    double accuracy_pct = 0.0;
    std::string diagnostic;
};

namespace detail {

inline std::optional<int> parse_stop(std::string_view raw) {
    std::string tok = to_lower(raw);
    tok.erase(std::remove_if(tok.begin(), tok.end(), [](unsigned char c) { return std::isspace(c) != 0; }), tok.end());
    if (tok.empty()) return std::nullopt;
    if (tok == "depot" || tok == "d" || tok == "0" || tok == "d0") return 0;
    std::size_t i = 0;
    for (std::string_view prefix : {"customer", "node", "c"}) {
        if (tok.rfind(prefix, 0) == 0) {
            i = prefix.size();
            break;
        }
    }
    if (i >= tok.size()) return std::nullopt;
    int value = 0;
    for (; i < tok.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return std::nullopt;
        value = value * 10 + (tok[i] - '0');
        if (value > 1'000'000) return std::nullopt;
    }
    return value;
}

}  // namespace detail

// Recovers routes from lines like "Route 1: depot -> c2 -> c1 -> depot" or
// bare sequences "0 -> 3 -> 1 -> 0". Id 0 and "depot" mark the depot.
inline std::vector<Route> parse_route(std::string_view response) {
    static const std::regex prefix_re(R"(^\s*[*\-]*\s*(route|vehicle|truck)\s*#?\s*[0-9]*\s*[:.)-]\s*)",
                                      std::regex::icase);
    std::vector<Route> routes;
    std::istringstream in{std::string(response)};
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        std::string body = line;
        bool labelled = false;
        if (std::regex_search(line, m, prefix_re)) {
            body = m.suffix().str();
            labelled = true;
        }
        // Normalize separators to '|'.
        std::string norm;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (body.compare(i, 2, "->") == 0) {
                norm.push_back('|');
                ++i;
            } else if (body.compare(i, 3, "\xE2\x86\x92") == 0) {  // U+2192
                norm.push_back('|');
                i += 2;
            } else if (body[i] == ',') {
                norm.push_back('|');
            } else {
                norm.push_back(body[i]);
            }
        }
        // Drop a trailing sentence period or annotation in parentheses.
        while (!norm.empty() && (norm.back() == '.' || std::isspace(static_cast<unsigned char>(norm.back())))) norm.pop_back();
        if (auto paren = norm.find('('); paren != std::string::npos) norm.erase(paren);
        if (norm.find('|') == std::string::npos && !labelled) continue;

        Route route;
        bool ok = true;
        std::size_t start = 0;
        while (start <= norm.size()) {
            auto bar = norm.find('|', start);
            auto piece = norm.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
            auto stop = detail::parse_stop(piece);
            if (!stop) {
                ok = false;
                break;
            }
            if (*stop != 0) route.push_back(*stop);
            if (bar == std::string::npos) break;
            start = bar + 1;
        }
        if (ok && !route.empty()) routes.push_back(std::move(route));
    }
    return routes;
}

// Exact minimum total distance: optimal TSP tour per customer subset
// (Held-Karp), then the best partition of all customers into capacity-
// feasible subsets. Practical up to ~12 customers.
inline double exact_optimal_distance(const RoutingInstance& inst) {
    const int n = static_cast<int>(inst.customers.size());
    if (n == 0) return 0.0;
    if (n > 16) throw DataError("exact CVRP optimum is limited to 16 customers");
    const std::uint32_t full = (1u << n) - 1u;
    const double inf = std::numeric_limits<double>::infinity();

    auto pos = [&](int i) { return inst.customers[static_cast<std::size_t>(i)].position; };
    // path[mask][j]: shortest depot -> ... -> j visiting exactly mask (j in mask).
    std::vector<std::vector<double>> path(full + 1, std::vector<double>(static_cast<std::size_t>(n), inf));
    for (int j = 0; j < n; ++j) path[1u << j][static_cast<std::size_t>(j)] = euclidean(inst.depot, pos(j));
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        for (int j = 0; j < n; ++j) {
            const double cur = path[mask][static_cast<std::size_t>(j)];
            if (!(mask & (1u << j)) || cur == inf) continue;
            for (int k = 0; k < n; ++k) {
                if (mask & (1u << k)) continue;
                auto& next = path[mask | (1u << k)][static_cast<std::size_t>(k)];
                next = std::min(next, cur + euclidean(pos(j), pos(k)));
            }
        }
    }
    std::vector<double> tour(full + 1, inf);
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        double demand = 0.0;
        for (int j = 0; j < n; ++j) {
            if (mask & (1u << j)) demand += inst.customers[static_cast<std::size_t>(j)].demand;
        }
        if (demand > inst.vehicle_capacity) continue;
        for (int j = 0; j < n; ++j) {
            if (mask & (1u << j)) {
                tour[mask] = std::min(tour[mask], path[mask][static_cast<std::size_t>(j)] + euclidean(pos(j), inst.depot));
            }
        }
    }
    std::vector<double> best(full + 1, inf);
    best[0] = 0.0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        const std::uint32_t low = mask & (~mask + 1u);
        // Enumerate submasks containing the lowest set bit.
        for (std::uint32_t sub = mask; sub; sub = (sub - 1) & mask) {
            if (!(sub & low) || tour[sub] == inf || best[mask ^ sub] == inf) continue;
            best[mask] = std::min(best[mask], tour[sub] + best[mask ^ sub]);
        }
    }
    return best[full];
}

inline constexpr std::size_t kAutoOptimumMaxCustomers = 8;

// Fills optimal_distance when absent; rejects large instances without one.
inline void resolve_optimum(RoutingInstance& inst) {
    if (inst.optimal_distance) return;
    if (inst.customers.size() > kAutoOptimumMaxCustomers) {
        throw DataError("routing instance with " + std::to_string(inst.customers.size()) +
                        " customers needs an explicit optimal_distance");
    }
    inst.optimal_distance = exact_optimal_distance(inst);
}

inline RouteEvaluation evaluate_route(const std::vector<Route>& routes, const RoutingInstance& inst) {
    RouteEvaluation ev;
    const int n = static_cast<int>(inst.customers.size());
    std::vector<int> visits(static_cast<std::size_t>(n) + 1, 0);
    bool feasible = true;
    std::ostringstream diag;
    for (std::size_t r = 0; r < routes.size(); ++r) {
        double load = 0.0;
        for (int id : routes[r]) {
            if (id < 1 || id > n) {
                ev.diagnostic = "route " + std::to_string(r + 1) + " references unknown customer " + std::to_string(id);
                ev.feasible = false;
                return ev;
            }
            ++visits[static_cast<std::size_t>(id)];
            load += inst.customers[static_cast<std::size_t>(id - 1)].demand;
        }
        if (load > inst.vehicle_capacity) {
            feasible = false;
            diag << "route " << r + 1 << " load " << load << " exceeds capacity " << inst.vehicle_capacity << "; ";
        }
        ev.distance += route_length(routes[r], inst);
    }
    for (int id = 1; id <= n; ++id) {
        if (visits[static_cast<std::size_t>(id)] != 1) {
            feasible = false;
            diag << "customer " << id << " visited " << visits[static_cast<std::size_t>(id)] << " times; ";
        }
    }
    ev.feasible = feasible;
    ev.diagnostic = diag.str();
    if (feasible) {
        std::optional<double> optimum = inst.optimal_distance;
        if (!optimum && inst.customers.size() <= kAutoOptimumMaxCustomers) optimum = exact_optimal_distance(inst);
        if (optimum) {
            // Summation order differs from the optimizer's, so treat a 1e-9 relative gap as optimal.
            const bool at_optimum = std::abs(ev.distance - *optimum) <= 1e-9 * std::max(1.0, *optimum);
            ev.accuracy_pct = (ev.distance <= 0.0 || at_optimum) ? 100.0 : 100.0 * std::min(1.0, *optimum / ev.distance);
        }
    }
    return ev;
}

// Uniform coordinates in [0,100]^2, integer demands in [1, capacity/2].
inline RoutingInstance generate_routing_instance(int customers, std::uint64_t seed, double capacity = 30.0) {
    if (customers < 1) throw ConfigError("gen-cvrp needs at least one customer");
    if (!(capacity >= 2.0)) throw ConfigError("gen-cvrp capacity must be >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, 100.0);
    std::uniform_int_distribution<int> demand(1, static_cast<int>(std::floor(capacity / 2.0)));
    RoutingInstance inst;
    inst.vehicle_capacity = capacity;
    inst.depot = {coord(rng), coord(rng)};
    for (int i = 0; i < customers; ++i) {
        Customer c;
        c.position = {coord(rng), coord(rng)};
        c.demand = demand(rng);
        inst.customers.push_back(c);
    }
    return inst;
}

inline std::string describe_routing_instance(const RoutingInstance& inst) {
    std::ostringstream os;
    os.precision(6);
    os << "Capacitated vehicle routing. Depot at (" << inst.depot.x << ", " << inst.depot.y
       << "). Vehicle capacity " << inst.vehicle_capacity << ". Customers (id: x, y, demand):\n";
    for (std::size_t i = 0; i < inst.customers.size(); ++i) {
        const auto& c = inst.customers[i];
        os << "c" << i + 1 << ": " << c.position.x << ", " << c.position.y << ", " << c.demand << "\n";
    }
    os << "Visit every customer exactly once with routes starting and ending at the depot, "
          "keeping each route's total demand within capacity and minimizing total distance. "
          "Answer with one line per route, e.g. \"Route 1: depot -> c2 -> c1 -> depot\".";
    return os.str();
}

}  // namespace entroguide
