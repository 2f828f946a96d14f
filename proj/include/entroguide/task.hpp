#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "entroguide/routing.hpp"
#include "entroguide/types.hpp"

namespace entroguide {

using Json = nlohmann::json;

struct MathReference {
    double answer = 0.0;
};

struct CodeReference {
    std::string entry_point;
    std::vector<std::string> tests;
};

struct RoutingReference {
    RoutingInstance instance;
};

using TaskReference = std::variant<MathReference, CodeReference, RoutingReference>;

// One benchmark problem. `reference` is absent for label-free problems,
// which the strong agent verifies instead of a deterministic checker.
struct TaskInstance {
    std::string id;
    TaskKind kind = TaskKind::Math;
    std::string problem;
    std::optional<Difficulty> difficulty;
    std::optional<TaskReference> reference;

    const RoutingInstance* routing() const {
        if (!reference) return nullptr;
        auto* r = std::get_if<RoutingReference>(&*reference);
        return r ? &r->instance : nullptr;
    }

    void validate() const {
        if (id.empty()) throw DataError("task id must be non-empty");
        if (!reference) return;
        const bool matches = (kind == TaskKind::Math && std::holds_alternative<MathReference>(*reference)) ||
                             (kind == TaskKind::Code && std::holds_alternative<CodeReference>(*reference)) ||
                             (kind == TaskKind::Routing && std::holds_alternative<RoutingReference>(*reference));
        if (!matches) throw DataError("task " + id + ": reference does not match kind");
        if (auto* r = routing()) r->validate();
    }
};

inline Json routing_to_json(const RoutingInstance& inst) {
    Json customers = Json::array();
    for (const auto& c : inst.customers) customers.push_back({{"x", c.position.x}, {"y", c.position.y}, {"demand", c.demand}});
    Json j = {{"depot", {inst.depot.x, inst.depot.y}}, {"customers", customers}, {"capacity", inst.vehicle_capacity}};
    if (inst.optimal_distance) j["optimal_distance"] = *inst.optimal_distance;
    return j;
}

inline RoutingInstance routing_from_json(const Json& j) {
    RoutingInstance inst;
    const auto& depot = j.at("depot");
    inst.depot = {depot.at(0).get<double>(), depot.at(1).get<double>()};
    for (const auto& c : j.at("customers")) {
        inst.customers.push_back({{c.at("x").get<double>(), c.at("y").get<double>()}, c.at("demand").get<double>()});
    }
    inst.vehicle_capacity = j.at("capacity").get<double>();
    if (j.contains("optimal_distance") && !j["optimal_distance"].is_null()) {
        inst.optimal_distance = j["optimal_distance"].get<double>();
    }
    return inst;
}

inline Json task_to_json(const TaskInstance& t) {
    Json j = {{"id", t.id}, {"kind", to_string(t.kind)}, {"problem", t.problem}};
    if (t.difficulty) j["difficulty"] = to_string(*t.difficulty);
    if (t.reference) {
        std::visit(
            [&](const auto& ref) {
                using R = std::decay_t<decltype(ref)>;
                if constexpr (std::is_same_v<R, MathReference>) {
                    j["answer"] = ref.answer;
                } else if constexpr (std::is_same_v<R, CodeReference>) {
                    j["entry_point"] = ref.entry_point;
                    j["tests"] = ref.tests;
                } else {
                    j["routing"] = routing_to_json(ref.instance);
                }
            },
            *t.reference);
    }
    return j;
}

// Parses one dataset record. Routing instances get their optimum resolved
// (computed for small instances, rejected otherwise).
inline TaskInstance task_from_json(const Json& j) {
    TaskInstance t;
    t.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    t.kind = parse_task_kind(j.at("kind").get<std::string>());
    t.problem = j.value("problem", std::string{});
    if (j.contains("difficulty") && !j["difficulty"].is_null()) {
        t.difficulty = parse_difficulty(j["difficulty"].get<std::string>());
    }
    switch (t.kind) {
        case TaskKind::Math:
            if (j.contains("answer") && !j["answer"].is_null()) {
                const auto& a = j["answer"];
                t.reference = MathReference{a.is_string() ? std::stod(a.get<std::string>()) : a.get<double>()};
            }
            break;
        case TaskKind::Code:
            if (j.contains("tests")) {
                t.reference = CodeReference{j.value("entry_point", std::string{}),
                                            j["tests"].get<std::vector<std::string>>()};
            }
            break;
        case TaskKind::Routing: {
            auto inst = routing_from_json(j.at("routing"));
            inst.validate();
            resolve_optimum(inst);
            if (t.problem.empty()) t.problem = describe_routing_instance(inst);
            t.reference = RoutingReference{std::move(inst)};
            break;
        }
    }
    if (t.problem.empty()) throw DataError("task " + t.id + ": problem text is empty");
    t.validate();
    return t;
}

inline std::vector<TaskInstance> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path);
    std::vector<TaskInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(task_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace entroguide
