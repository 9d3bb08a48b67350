#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smiledyn {

enum class ErrorKind {
    invalid_argument,
    file_not_found,
    malformed_input,
    too_few_samples,
    zero_variance,
    empty_intersection,
    degenerate,
    simulation,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition)
        throw Error(kind, message);
}

// Non-fatal conditions collected by operations that degrade gracefully.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
    bool empty() const noexcept { return warnings.empty(); }
};

inline void warn(Diagnostics* diag, std::string message) {
    if (diag)
        diag->warn(std::move(message));
}

} // namespace smiledyn
