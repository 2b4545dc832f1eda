#pragma once

#include "romkit/core.hpp"

namespace romkit {

/// Solves a x = b (multiple right-hand sides as columns) by LU with partial
/// pivoting. Throws ConditioningError mentioning `context` when a pivot
/// collapses to the noise floor.
Matrix lu_solve(Matrix a, Matrix b, const std::string& context);

} // namespace romkit
