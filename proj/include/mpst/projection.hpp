#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpst/ast.hpp"
#include "mpst/surface.hpp"

namespace mpst {

/// Raised when a merge or a projection is undefined. `code()` is
/// "MergeUndefined" or "ProjectionUndefined".
class ProjectionError : public Error {
public:
    using Error::Error;
};

/// Partial merge of two local types. Throws ProjectionError("MergeUndefined").
LocalType merge(const LocalType& a, const LocalType& b);
std::optional<LocalType> try_merge(const LocalType& a, const LocalType& b, std::string* why = nullptr);

/// Projection of a global type onto a role. Throws ProjectionError.
LocalType project(const GlobalType& g, Role r);
std::optional<LocalType> try_project(const GlobalType& g, Role r, std::string* why = nullptr);

struct Projectability {
    bool ok = true;
    std::map<Role, LocalType> projections;
    std::vector<Diagnostic> diagnostics;
};

Projectability projectable(const GlobalType& g);

} // namespace mpst
