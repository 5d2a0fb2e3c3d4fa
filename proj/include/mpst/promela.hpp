#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpst/ast.hpp"
#include "mpst/surface.hpp"

namespace mpst {

class UnsupportedConstruct : public Error {
public:
    explicit UnsupportedConstruct(const std::string& message) : Error("UnsupportedConstruct", message) {}
};

struct EmitConfig {
    std::vector<ParamDomain> params;
    std::vector<Ghost> ghosts;
    std::vector<LtlProperty> ltl;
    /// Fixed values of parameters without a domain.
    Valuation values;
    /// Overrides the `<base>_<session>_<role>` identifier of a vector variable.
    std::map<AnnotatedVar, std::string> rename;
};

EmitConfig emit_config(const Config& cfg);

struct PromelaText {
    struct Section {
        std::size_t begin = 0;
        std::size_t end = 0;
    };
    std::string source;
    /// "preamble", "ltl" and "body" as byte ranges of `source`.
    std::map<std::string, Section> sections;
};

std::string flat_name(const AnnotatedVar& v);

/// Throws UnsupportedConstruct.
PromelaText emit_program(const SgpSystem& sys, const EmitConfig& cfg = {});

} // namespace mpst
