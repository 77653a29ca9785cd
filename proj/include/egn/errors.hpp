#ifndef EGN_ERRORS_HPP
#define EGN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace egn {

/// Shape or dimensionality of an argument does not match its counterpart.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// An index refers outside the valid range (node ids, edge endpoints).
class IndexError : public std::out_of_range {
public:
    explicit IndexError(const std::string& what) : std::out_of_range(what) {}
};

/// A value violates a documented precondition or type invariant.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Training aborted (non-finite loss or inconsistent model/data shapes).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace egn

#endif // EGN_ERRORS_HPP
