#pragma once

#include <stdexcept>
#include <string>

namespace kvn {

/// Input rejected before any compute happened (bad grid, negative strength, ...).
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A requested problem size exceeds a configured cap.
class capacity_error : public std::runtime_error {
public:
    capacity_error(const std::string& what, std::size_t requested, std::size_t cap)
        : std::runtime_error(what), requested_(requested), cap_(cap) {}

    std::size_t requested() const noexcept { return requested_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t requested_;
    std::size_t cap_;
};

/// Runtime numerical failure (CFL violation, coarse auxiliary grid, ...).
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kvn
