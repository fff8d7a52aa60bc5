#pragma once

#include <stdexcept>
#include <string>

namespace backflow {

// Input outside an operation's mathematical domain (pole, wrong sign, ...).
struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// Argument on (or straddling) a branch cut.
struct branch_error : std::runtime_error {
    explicit branch_error(const std::string& what) : std::runtime_error(what) {}
};

// Requested certified radius not reachable within the escalation ceiling.
struct precision_error : std::runtime_error {
    explicit precision_error(const std::string& what) : std::runtime_error(what) {}
};

// Persistent element store failed an integrity check.
struct cache_error : std::runtime_error {
    explicit cache_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace backflow
