#ifndef CASCADE_ERRORS_HPP
#define CASCADE_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace cascade
{

// Invalid user input: bad parameters, malformed or unknown config keys.
// `key` names the offending entry when one is known.
class ConfigError : public std::invalid_argument
{
public:
    explicit ConfigError(const std::string& what, std::string key = {})
        : std::invalid_argument(what), key_(std::move(key))
    {
    }
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// A grid that cannot represent the requested field (too narrow, too coarse).
class GridError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// A closed form was requested for a signal it cannot express.
class RegimeError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure: step selection, convergence, non-finite values.
class NumericError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Soft diagnostics that do not abort a computation.
using Warnings = std::vector<std::string>;

} // namespace cascade
#endif // CASCADE_ERRORS_HPP
