#include "sepm/errors.hpp"

namespace sepm {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::usage: return "Usage";
        case ErrorCode::parse: return "ParseError";
        case ErrorCode::io: return "IoError";
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::check_failed: return "CheckFailed";
        case ErrorCode::no_convergence: return "NoConvergence";
        case ErrorCode::occlusion_failed: return "OcclusionFailed";
        case ErrorCode::not_occluded: return "NotOccluded";
        case ErrorCode::unstable_step: return "UnstableStep";
        case ErrorCode::never_settles: return "NeverSettles";
        case ErrorCode::address_out_of_range: return "AddressOutOfRange";
        case ErrorCode::invalid_port: return "InvalidPort";
        case ErrorCode::dont_care_present: return "DontCarePresent";
        case ErrorCode::intent_invalid: return "IntentInvalid";
        case ErrorCode::corrupt_registry: return "CorruptRegistry";
        case ErrorCode::calibration_infeasible: return "CalibrationInfeasible";
        case ErrorCode::unknown_node: return "UnknownNode";
    }
    return "Unknown";
}

}  // namespace sepm
