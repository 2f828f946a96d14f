#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace entroguide {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration (unknown keys with wrong types, invalid constants, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed dataset, repository or script file.
class DataError : public Error {
public:
    using Error::Error;
};

enum class TaskKind { Math, Code, Routing };

enum class Difficulty { Easy, Medium, Hard };

inline constexpr TaskKind kAllTaskKinds[] = {TaskKind::Math, TaskKind::Code, TaskKind::Routing};

inline std::string_view to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::Math: return "math";
        case TaskKind::Code: return "code";
        case TaskKind::Routing: return "routing";
    }
    return "math";
}

inline TaskKind parse_task_kind(std::string_view text) {
    if (text == "math") return TaskKind::Math;
    if (text == "code") return TaskKind::Code;
    if (text == "routing" || text == "cvrp") return TaskKind::Routing;
    throw ConfigError("unknown task kind '" + std::string(text) + "'");
}

inline std::string_view to_string(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
    }
    return "easy";
}

inline Difficulty parse_difficulty(std::string_view text) {
    if (text == "easy") return Difficulty::Easy;
    if (text == "medium") return Difficulty::Medium;
    if (text == "hard") return Difficulty::Hard;
    throw DataError("unknown difficulty '" + std::string(text) + "'");
}

}  // namespace entroguide
