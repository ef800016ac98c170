#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace clinex {

enum class ErrorKind {
    MalformedRecord,
    DuplicateId,
    EmptyCorpus,
    UnknownColumn,
    MissingColumn,
    NonBooleanCell,
    EmptyIntersection,
    InvalidSchema,
    WrongLanguage,
    MissingExemplars,
    InvalidExemplars,
    InvalidConfig,
    LengthMismatch,
    EmptyInput,
    UnknownTranscript,
    SchemaMismatch,
    VariantMismatch,
    MissingInput,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for all recoverable domain failures; `kind()` lets
/// callers (and the CLI exit-code mapping) branch without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace clinex
