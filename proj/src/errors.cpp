#include "rcomp/errors.hpp"

namespace rcomp {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::IterationLimit: return "IterationLimit";
        case ErrorKind::Singular: return "Singular";
        case ErrorKind::NotSymmetric: return "NotSymmetric";
        case ErrorKind::NotPSD: return "NotPSD";
        case ErrorKind::NotMonotone: return "NotMonotone";
        case ErrorKind::InvalidGamma: return "InvalidGamma";
        case ErrorKind::ReparamDivergence: return "ReparamDivergence";
        case ErrorKind::NotCoisometry: return "NotCoisometry";
        case ErrorKind::AllPairsDegenerate: return "AllPairsDegenerate";
        case ErrorKind::KernelViolation: return "KernelViolation";
        case ErrorKind::OracleAmbiguous: return "OracleAmbiguous";
        case ErrorKind::OracleUnresolved: return "OracleUnresolved";
        case ErrorKind::BoundUnavailable: return "BoundUnavailable";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::ExperimentFailed: return "ExperimentFailed";
    }
    return "Unknown";
}

}  // namespace rcomp
