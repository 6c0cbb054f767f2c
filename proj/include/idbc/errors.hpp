#pragma once

#include <stdexcept>
#include <string>

namespace idbc {

// Thrown when a requested computation would exceed an explicit state or
// memory budget. The sweep harness records these and keeps going; everything
// else treats them as hard errors.
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace idbc
