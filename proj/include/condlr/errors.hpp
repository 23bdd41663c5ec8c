#pragma once

#include <stdexcept>
#include <string>

namespace condlr {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/argument mismatches (CLI exit code 1 when raised from argument handling).
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Dataset / file-format problems (CLI exit code 2).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Numerical failures: non-convergence, singular solves, zero matrices (CLI exit code 3).
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Rank-deficient input to a factorization; carries the offending column.
struct RankDeficientError : NumericalError {
    int column;
    RankDeficientError(const std::string& msg, int col) : NumericalError(msg), column(col) {}
};

} // namespace condlr
