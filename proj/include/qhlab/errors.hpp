#pragma once

#include <stdexcept>
#include <string>

namespace qhlab {

// Thrown when a scenario config fails to parse or validate.  CLI exit 2.
struct schema_error : std::runtime_error {
    explicit schema_error(const std::string& what) : std::runtime_error(what) {}
};

// Integration failure, solver breakdown, stalled convergence.  CLI exit 3.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Symbol support leaves the declared grid margin.  CLI exit 4.
struct margin_error : std::runtime_error {
    explicit margin_error(const std::string& what) : std::runtime_error(what) {}
};

// Grid cannot resolve the scaled symbol at the requested h.  CLI exit 4.
struct resolution_error : std::runtime_error {
    explicit resolution_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qhlab
