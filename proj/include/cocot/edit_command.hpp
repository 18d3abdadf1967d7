#pragma once

#include <string>
#include <variant>

namespace cocot {

/// Cascade invalidates every graph descendant of an edited step; Local
/// invalidates nothing beyond the edited step itself.
enum class Scope { Cascade, Local };

enum class ExportFormat { Markdown, Json };

namespace cmd {

struct Replace {
    int target = 0;
    std::string text;
    bool operator==(const Replace&) const = default;
};
struct Delete {
    int target = 0;
    bool operator==(const Delete&) const = default;
};
struct Merge {
    int first = 0;
    int second = 0;
    bool operator==(const Merge&) const = default;
};
/// target 0 inserts at the front of the chain.
struct Insert {
    int after = 0;
    std::string text;
    bool operator==(const Insert&) const = default;
};
struct Confirm {
    bool operator==(const Confirm&) const = default;
};
struct BiasCheck {
    int target = 0;
    bool operator==(const BiasCheck&) const = default;
};
struct Export {
    ExportFormat format = ExportFormat::Markdown;
    bool operator==(const Export&) const = default;
};
struct Freeform {
    std::string raw;
    bool operator==(const Freeform&) const = default;
};

}  // namespace cmd

struct EditCommand {
    std::variant<cmd::Replace, cmd::Delete, cmd::Merge, cmd::Insert, cmd::Confirm,
                 cmd::BiasCheck, cmd::Export, cmd::Freeform>
        kind;
    Scope scope = Scope::Cascade;

    bool operator==(const EditCommand&) const = default;

    [[nodiscard]] bool is_structural() const {
        return std::holds_alternative<cmd::Replace>(kind) ||
               std::holds_alternative<cmd::Delete>(kind) ||
               std::holds_alternative<cmd::Merge>(kind) ||
               std::holds_alternative<cmd::Insert>(kind);
    }
};

}  // namespace cocot
