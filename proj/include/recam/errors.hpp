#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace recam {

// Base class for every error the library raises on purpose. Anything else
// escaping a module is a bug and surfaces as exit code 2 in the CLI.
class RecamError : public std::runtime_error {
public:
    explicit RecamError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input line (bad JSON, bad field type). Message names the line.
class ParseError : public RecamError {
public:
    using RecamError::RecamError;
};

// Record is valid JSON but violates the expected schema (missing field, etc).
class SchemaError : public RecamError {
public:
    using RecamError::RecamError;
};

// Cross-record violation such as duplicate ids in one split.
class IntegrityError : public RecamError {
public:
    using RecamError::RecamError;
};

// Precondition violation on an operation argument.
class ValidationError : public RecamError {
public:
    using RecamError::RecamError;
};

// RunConfig value outside its allowed domain without the unsafe override.
class ConfigError : public RecamError {
public:
    using RecamError::RecamError;
};

// Caller violated a module contract (e.g. siamese scoring without Q-hat ids).
class ContractError : public RecamError {
public:
    using RecamError::RecamError;
};

// Question plus candidate alone exhaust the input length budget.
class InstanceTooLongError : public RecamError {
public:
    using RecamError::RecamError;
};

// Similarity requested over an empty token sequence.
class UndefinedSimilarityError : public RecamError {
public:
    using RecamError::RecamError;
};

// Translation backend failed; carries how many attempts were made.
class TranslateError : public RecamError {
public:
    TranslateError(const std::string& what, std::size_t attempts)
        : RecamError(what), attempts_(attempts) {}
    std::size_t attempts() const { return attempts_; }

private:
    std::size_t attempts_ = 0;
};

// Required backend assets (pretrained weights, vocab) are not on disk.
class AssetError : public RecamError {
public:
    using RecamError::RecamError;
};

// Training aborted (non-finite loss, resource exhaustion). Carries diagnostics.
class TrainError : public RecamError {
public:
    using RecamError::RecamError;
};

class IoError : public RecamError {
public:
    using RecamError::RecamError;
};

}  // namespace recam
