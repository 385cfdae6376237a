#pragma once

#include <stdexcept>
#include <string>

namespace wmt {

/// Bad user-supplied data: malformed files, unknown ids, empty corpora.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Tensor shapes do not line up.
class DimensionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// NaN or Inf escaped a computation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace wmt
