#ifndef NUDGE_ERROR_HPP
#define NUDGE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace nudge {

enum class ErrorKind {
    RangeViolation,
    RelevanceViolation,
    DegenerateConfounder,
    InvalidSpec,
    EmptyPanel,
    UndefinedTarget,
    ZeroDenominator,
    DegenerateFirstStage,
    MissingArm,
    EmptyStratum,
    InvalidScale,
    NoSignChange,
    GridTooLarge,
    TooManyFailures,
    InvalidConfig,
    ParseError,
    SchemaError,
    DomainError,
    IoError,
};

std::string_view to_string(ErrorKind kind);

// Every domain failure in the library is reported through this type. `path`
// names the offending JSON key, CSV line or stratum when one is known.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string path = {})
        : std::runtime_error(format(kind, message, path)), kind_(kind), path_(std::move(path)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& path() const noexcept { return path_; }

private:
    static std::string format(ErrorKind kind, const std::string& message, const std::string& path) {
        std::string out(to_string(kind));
        if (!path.empty()) out += " at " + path;
        out += ": " + message;
        return out;
    }

    ErrorKind kind_;
    std::string path_;
};

}  // namespace nudge

#endif  // NUDGE_ERROR_HPP
