#include "clinex/error.hpp"

namespace clinex {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedRecord: return "MalformedRecord";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::UnknownColumn: return "UnknownColumn";
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::NonBooleanCell: return "NonBooleanCell";
        case ErrorKind::EmptyIntersection: return "EmptyIntersection";
        case ErrorKind::InvalidSchema: return "InvalidSchema";
        case ErrorKind::WrongLanguage: return "WrongLanguage";
        case ErrorKind::MissingExemplars: return "MissingExemplars";
        case ErrorKind::InvalidExemplars: return "InvalidExemplars";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::UnknownTranscript: return "UnknownTranscript";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::VariantMismatch: return "VariantMismatch";
        case ErrorKind::MissingInput: return "MissingInput";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace clinex
