#pragma once

#include <stdexcept>
#include <string>

namespace momdp {

/// Caller passed arguments outside an operation's domain (bad index, empty set, ...).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Declared dimensions and table shapes disagree, or a grid spec is inconsistent.
class StructuralError : public std::runtime_error {
public:
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

/// Belief filter asked to condition on an (s', z) pair of probability zero.
class ImpossibleEvent : public std::runtime_error {
public:
    explicit ImpossibleEvent(const std::string& what) : std::runtime_error(what) {}
};

/// Exact backup, oracle or exact policy evaluation would exceed its configured cap.
class IntractableError : public std::runtime_error {
public:
    explicit IntractableError(const std::string& what) : std::runtime_error(what) {}
};

/// A stage index past the horizon was requested from a policy.
class HorizonExhausted : public UsageError {
public:
    explicit HorizonExhausted(const std::string& what) : UsageError(what) {}
};

}  // namespace momdp
