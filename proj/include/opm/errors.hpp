#ifndef OPM_ERRORS_HPP
#define OPM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace opm {

// Error families map 1:1 onto the C API status codes (see opm/opm.h).
enum class ErrorCode {
    InvalidArgument,
    Config,
    Parse,
    Io,
    ZeroSignal,
    UnsupportedRatio,
    Diverged,
    NonFinite,
    OutOfGrid,
    EmptyPartition,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(const std::string& what) : Error(ErrorCode::InvalidArgument, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCode::Config, what) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorCode::Parse, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCode::Io, what) {}
};

class ZeroSignalError : public Error {
public:
    explicit ZeroSignalError(const std::string& what) : Error(ErrorCode::ZeroSignal, what) {}
};

class UnsupportedRatioError : public Error {
public:
    explicit UnsupportedRatioError(const std::string& what) : Error(ErrorCode::UnsupportedRatio, what) {}
};

class DivergedError : public Error {
public:
    explicit DivergedError(const std::string& what) : Error(ErrorCode::Diverged, what) {}
};

class NonFiniteError : public Error {
public:
    explicit NonFiniteError(const std::string& what) : Error(ErrorCode::NonFinite, what) {}
};

class OutOfGridError : public Error {
public:
    explicit OutOfGridError(const std::string& what) : Error(ErrorCode::OutOfGrid, what) {}
};

class EmptyPartitionError : public Error {
public:
    explicit EmptyPartitionError(const std::string& what) : Error(ErrorCode::EmptyPartition, what) {}
};

} // namespace opm

#endif
