#ifndef RANDDE_ERRORS_HPP
#define RANDDE_ERRORS_HPP

#include <stdexcept>
#include <string>

/**
 * @file errors.hpp
 *
 * @brief Exception types thrown by the library.
 */

namespace randde {

/**
 * @brief Malformed input table (counts or group file).
 *
 * Messages include the 1-based line and column of the offending cell where applicable.
 */
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/**
 * @brief Invalid parameter combination (domain violations, incompatible sizes).
 */
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

/**
 * @brief Reference subset on which some sample has zero total count.
 *
 * Such a subset cannot yield positive scaling factors; the detector catches this
 * and redraws instead of patching the data.
 */
class DegenerateSubsetError : public std::runtime_error {
public:
    explicit DegenerateSubsetError(const std::string& msg) : std::runtime_error(msg) {}
};

/**
 * @brief Design without a usable operating point.
 *
 * Thrown when no detection count satisfies the separation inequality, or when the
 * data cannot support the requested design (e.g. all candidate reference subsets
 * are degenerate).
 */
class InfeasibleDesignError : public std::runtime_error {
public:
    explicit InfeasibleDesignError(const std::string& msg) : std::runtime_error(msg) {}
};

}

#endif
