#pragma once

#include <cstdint>
#include <map>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mpst::testing {

/// Runs straight-line Promela: integer declarations, `a = b;` and `a = b op c;` with
/// identifiers or literals, `skip`, d_step blocks and `goto LEnd`. Anything else throws.
inline std::map<std::string, std::int64_t> run_straight_line(const std::string& source) {
    std::map<std::string, std::int64_t> vars;
    auto value = [&](const std::string& tok) -> std::int64_t {
        if (std::regex_match(tok, std::regex("-?[0-9]+"))) return std::stoll(tok);
        auto it = vars.find(tok);
        if (it == vars.end()) throw std::runtime_error("unknown name " + tok);
        return it->second;
    };
    static const std::regex decl(R"(int ([A-Za-z_]\w*)( = (-?[0-9]+))?;)");
    static const std::regex assign(R"(([A-Za-z_]\w*) = ([A-Za-z_]\w*|-?[0-9]+)( ([-+*]) ([A-Za-z_]\w*|-?[0-9]+))?;)");
    std::istringstream in(source);
    std::string line;
    while (std::getline(in, line)) {
        auto b = line.find_first_not_of(' ');
        if (b == std::string::npos) continue;
        line = line.substr(b);
        std::smatch m;
        if (line == "active proctype Model() {" || line == "skip;" || line == "d_step {" || line == "};") continue;
        if (line == "goto LEnd;" || line == "LEnd: skip;" || line == "}") break;
        if (std::regex_match(line, m, decl)) {
            vars[m[1]] = m[3].matched ? std::stoll(m[3]) : 0;
        } else if (std::regex_match(line, m, assign)) {
            std::int64_t v = value(m[2]);
            if (m[3].matched) {
                std::int64_t r = value(m[5]);
                v = m[4] == "+" ? v + r : m[4] == "-" ? v - r : v * r;
            }
            vars[m[1]] = v;
        } else {
            throw std::runtime_error("unsupported line: " + line);
        }
    }
    return vars;
}

} // namespace mpst::testing
