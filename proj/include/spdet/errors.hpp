#pragma once

#include <stdexcept>
#include <string>

namespace spdet {

/// Raised when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a rectangle or index falls outside its host image.
class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spdet
