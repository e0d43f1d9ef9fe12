#pragma once

#include <stdexcept>
#include <string>

namespace evolforge {

/// Base for all named pipeline errors.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    /// Stable machine-readable error kind, e.g. "taxonomy/duplicate-id".
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

struct TaxonomyError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct RenderError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

}  // namespace evolforge
