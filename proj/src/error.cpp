#include "nudge/error.hpp"

namespace nudge {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::RangeViolation: return "RangeViolation";
        case ErrorKind::RelevanceViolation: return "RelevanceViolation";
        case ErrorKind::DegenerateConfounder: return "DegenerateConfounder";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::EmptyPanel: return "EmptyPanel";
        case ErrorKind::UndefinedTarget: return "UndefinedTarget";
        case ErrorKind::ZeroDenominator: return "ZeroDenominator";
        case ErrorKind::DegenerateFirstStage: return "DegenerateFirstStage";
        case ErrorKind::MissingArm: return "MissingArm";
        case ErrorKind::EmptyStratum: return "EmptyStratum";
        case ErrorKind::InvalidScale: return "InvalidScale";
        case ErrorKind::NoSignChange: return "NoSignChange";
        case ErrorKind::GridTooLarge: return "GridTooLarge";
        case ErrorKind::TooManyFailures: return "TooManyFailures";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Error";
}

}  // namespace nudge
