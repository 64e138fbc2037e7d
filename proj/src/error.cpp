#include "changegpt/error.hpp"

namespace changegpt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::BadClass: return "BadClass";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadFilter: return "BadFilter";
    case ErrorCode::BadImage: return "BadImage";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::EmptyRegistry: return "EmptyRegistry";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::BadInput: return "BadInput";
    case ErrorCode::FixtureMissing: return "FixtureMissing";
    case ErrorCode::UnknownParent: return "UnknownParent";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::MalformedStep: return "MalformedStep";
    case ErrorCode::ScriptExhausted: return "ScriptExhausted";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyRequirement: return "EmptyRequirement";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::NoDiscordantPairs: return "NoDiscordantPairs";
    case ErrorCode::DatasetError: return "DatasetError";
    case ErrorCode::RemoteError: return "RemoteError";
  }
  return "Unknown";
}

}  // namespace changegpt
