#pragma once

#include <stdexcept>
#include <string>

namespace tn {

/// Base class for all library errors.
class TnError : public std::runtime_error {
public:
    explicit TnError(const std::string& what) : std::runtime_error(what) {}
};

/// Incompatible tensor shapes: contraction mismatches, invalid
/// matricization bipartitions, inconsistent network states.
class ShapeError : public TnError {
public:
    explicit ShapeError(const std::string& what) : TnError(what) {}
};

/// Malformed on-disk artifact (bad magic, version, truncation).
class FormatError : public TnError {
public:
    explicit FormatError(const std::string& what) : TnError(what) {}
};

/// The brute-force evaluation would exceed its loop-work cap.
class OracleCapError : public TnError {
public:
    explicit OracleCapError(const std::string& what) : TnError(what) {}
};

/// A restricted-slice optimization was asked to run on a state that was
/// not just produced by the matching edge increment.
class StaleStateError : public TnError {
public:
    explicit StaleStateError(const std::string& what) : TnError(what) {}
};

}  // namespace tn
