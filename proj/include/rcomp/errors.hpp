#pragma once

#include <stdexcept>
#include <string>

namespace rcomp {

enum class ErrorKind {
    DimensionMismatch,
    InvalidArgument,
    IterationLimit,
    Singular,
    NotSymmetric,
    NotPSD,
    NotMonotone,
    InvalidGamma,
    ReparamDivergence,
    NotCoisometry,
    AllPairsDegenerate,
    KernelViolation,
    OracleAmbiguous,
    OracleUnresolved,
    BoundUnavailable,
    ParseError,
    ConfigInvalid,
    ExperimentFailed,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace rcomp
