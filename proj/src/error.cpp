#include "logcog/error.hpp"

namespace logcog {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::EmptyLine: return "EmptyLine";
    case Errc::MissingContent: return "MissingContent";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::IoFailure: return "IoFailure";
    case Errc::AllLinesUnparseable: return "AllLinesUnparseable";
    case Errc::EmptyText: return "EmptyText";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonNormalRecord: return "NonNormalRecord";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::StoreSealed: return "StoreSealed";
    case Errc::EmptyStore: return "EmptyStore";
    case Errc::NotSealed: return "NotSealed";
    case Errc::CorruptStore: return "CorruptStore";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::InvalidRequest: return "InvalidRequest";
    case Errc::Timeout: return "Timeout";
    case Errc::TransportFailure: return "TransportFailure";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::ScriptExhausted: return "ScriptExhausted";
    case Errc::MissingContext: return "MissingContext";
    case Errc::UnknownTemplate: return "UnknownTemplate";
    case Errc::UnknownStrategy: return "UnknownStrategy";
    case Errc::BackendFailure: return "BackendFailure";
    case Errc::StoreMissing: return "StoreMissing";
    case Errc::EmptyEvaluationSet: return "EmptyEvaluationSet";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

} // namespace logcog
