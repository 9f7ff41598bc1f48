#pragma once

#include <stdexcept>
#include <string>

namespace autograph {

// Base of every error this library throws. `category()` drives CLI exit codes
// and HTTP status mapping.
class Error : public std::runtime_error {
public:
    enum class Category { Config, Data, Upstream, Internal };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Category::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(Category::Data, what) {}
};

// No JSON array could be located in constructor/LLM output.
class ParseError : public DataError {
public:
    explicit ParseError(const std::string& what) : DataError(what) {}
};

class NormalizationError : public DataError {
public:
    explicit NormalizationError(const std::string& what) : DataError(what) {}
};

// A passage id or graph id referenced something that does not exist.
class ReferenceError : public DataError {
public:
    explicit ReferenceError(const std::string& what) : DataError(what) {}
};

class DimensionError : public DataError {
public:
    explicit DimensionError(const std::string& what) : DataError(what) {}
};

class TemplateError : public ConfigError {
public:
    explicit TemplateError(const std::string& what) : ConfigError(what) {}
};

class EmptySeedError : public DataError {
public:
    explicit EmptySeedError(const std::string& what) : DataError(what) {}
};

class ConflictError : public DataError {
public:
    explicit ConflictError(const std::string& what) : DataError(what) {}
};

// Remote provider failed after all retries.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(Category::Upstream, what + " (after " + std::to_string(attempts) + " attempts)"),
          attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

// Remote provider answered, but with something unusable.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what) : Error(Category::Upstream, what) {}
};

}  // namespace autograph
