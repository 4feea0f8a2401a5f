#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace wcdp {

using numvec = std::vector<double>;
using indvec = std::vector<int>;

/// Per-project state indices of a joint state.
using JointState = std::vector<int>;
/// Per-project action indices of a joint action.
using JointAction = std::vector<int>;
/// Values indexed by a (joint or per-project) encoded state.
using ValueTable = std::vector<double>;

constexpr double inf = std::numeric_limits<double>::infinity();

/// Base of all library errors. The `code` maps onto the CLI exit status.
class Error : public std::runtime_error {
public:
    enum class Kind { config, model, guard, numerical };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

    /// Short machine-readable tag.
    const char* tag() const noexcept {
        switch (kind_) {
        case Kind::config: return "config-error";
        case Kind::model: return "model-error";
        case Kind::guard: return "guard-violation";
        case Kind::numerical: return "numerical-failure";
        }
        return "error";
    }

private:
    Kind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(Kind::config, w) {}
};

/// Invalid model data or an infeasible model (no feasible joint action).
struct ModelError : Error {
    explicit ModelError(const std::string& w) : Error(Kind::model, w) {}
};

/// An enumeration guard was exceeded (state space or constraint set too large).
struct GuardError : Error {
    explicit GuardError(const std::string& w) : Error(Kind::guard, w) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(Kind::numerical, w) {}
};

/// Largest joint state space the exact (enumerative) routines accept.
constexpr std::size_t max_joint_states = 1'000'000;

} // namespace wcdp
