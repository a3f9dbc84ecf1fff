#ifndef LINKSIM_ERRORS_HPP
#define LINKSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace linksim {

// Configuration / usage problems. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A constraint cannot be met anywhere in the search space. Exit code 3.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace linksim

#endif
