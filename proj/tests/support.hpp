#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mpst/ast.hpp"
#include "mpst/surface.hpp"

namespace mpst::testing {

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string fixture_path(const std::string& name) { return std::string(MPST_FIXTURES) + "/" + name; }
inline std::string fixture_text(const std::string& name) { return read_file(fixture_path(name)); }

inline Process fixture_process(const std::string& stem) {
    std::string text = fixture_text(stem + ".proc");
    return value_or_throw(parse_process(text, declared_params(text)));
}

inline GlobalType fixture_type(const std::string& stem) {
    return value_or_throw(parse_global_type(fixture_text(stem + ".gt")));
}

inline Config fixture_config(const std::string& name) { return value_or_throw(parse_config(fixture_text(name))); }

inline std::vector<SessionBinding> fixture_sessions(const std::string& stem) { return {{fixture_type(stem), "s"}}; }

/// incB1 = incB2 = 1, maxB1 = maxB2 = 3.
inline Valuation desk_params() {
    return {{"incB1", std::int64_t{1}}, {"incB2", std::int64_t{1}}, {"maxB1", std::int64_t{3}}, {"maxB2", std::int64_t{3}}};
}

inline Sgp sgp(const std::string& text) { return value_or_throw(parse_sgp(text)); }
inline LocalType local(const std::string& text) { return value_or_throw(parse_local_type(text)); }
inline GlobalType global(const std::string& text) { return value_or_throw(parse_global_type(text)); }
inline Process process(const std::string& text) { return value_or_throw(parse_process(text, declared_params(text))); }

} // namespace mpst::testing
