#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace logcog {

enum class Errc {
    // log_ingest
    EmptyLine,
    MissingContent,
    MalformedLine,
    FileNotFound,
    IoFailure,
    AllLinesUnparseable,
    // embedding
    EmptyText,
    DimensionMismatch,
    // sampler
    EmptyInput,
    KTooLarge,
    LengthMismatch,
    NonNormalRecord,
    // vector_store
    DuplicateId,
    StoreSealed,
    EmptyStore,
    NotSealed,
    CorruptStore,
    VersionMismatch,
    // llm_backend
    InvalidRequest,
    Timeout,
    TransportFailure,
    ProtocolError,
    ScriptExhausted,
    // cognition
    MissingContext,
    UnknownTemplate,
    UnknownStrategy,
    BackendFailure,
    // evaluator / cli
    StoreMissing,
    EmptyEvaluationSet,
    EmptyMatrix,
    InvalidConfig,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library. `module()` names the component that
/// raised it so the CLI can report provenance.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string module, const std::string& message)
        : std::runtime_error(message), code_(code), module_(std::move(module)) {}

    Errc code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }

private:
    Errc code_;
    std::string module_;
};

} // namespace logcog
