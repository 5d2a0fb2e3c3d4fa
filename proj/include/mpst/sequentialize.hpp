#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpst/ast.hpp"
#include "mpst/surface.hpp"

namespace mpst {

/// `code()` is one of NotWellTyped, NonTermination, LoopsNotUnified, Undefined,
/// InitSortMismatch.
class SeqError : public Error {
public:
    SeqError(const std::string& code, const std::string& message, std::vector<Diagnostic> diags = {})
        : Error(code, message), diags_(std::move(diags)) {}
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

struct SeqOptions {
    /// Reject inputs that are not well-typed before mapping.
    bool check_typing = true;
    /// Upper bound on case applications over the whole computation.
    std::size_t max_applications = 2'000'000;
    /// Reject a loop whose body does not bring every process back to the state
    /// it had when the loop was entered.
    bool align_loops = false;
};

struct SeqResult {
    Sgp program;
    /// Sorts of the vector variables written or read by the program.
    std::map<AnnotatedVar, Sort> sorts;
    /// Number of applications per case label ("1a", "6", "7b", ...).
    std::map<std::string, std::size_t> cases;
};

/// Maps processes and their global types onto an SGP process. Throws SeqError.
SeqResult sequentialize(const std::vector<Process>& procs, const std::vector<SessionBinding>& sessions,
                        const SeqOptions& opts = {});

Sgp map_sgp(const std::vector<Process>& procs, const std::vector<SessionBinding>& sessions,
            const SeqOptions& opts = {});

/// The SGP system of a process: vector variables start at `init_vars`, then at
/// `init_values[base]`, then at 0 or false.
SgpSystem map_sgp_system(const Process& p, const std::vector<SessionBinding>& sessions,
                         const Vector* init_vars = nullptr, const Valuation* init_values = nullptr,
                         const SeqOptions& opts = {});

} // namespace mpst
