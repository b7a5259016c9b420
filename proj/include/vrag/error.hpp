/*
 * Copyright 2026 The vrag Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vrag {

/// Every failure the engine reports carries one of these kinds. The CLI maps
/// them onto process exit codes via exit_code_for().
enum class ErrorKind {
    // ingest / storage
    MissingFile,
    SchemaViolation,
    DuplicateVideoId,
    IoFailure,
    NonFiniteValue,
    BadMagic,
    UnsupportedVersion,
    TruncatedFile,
    InvalidMatrix,
    // numerics
    ZeroVector,
    DimMismatch,
    EmptyInput,
    AlphaOutOfRange,
    TooFewFrames,
    LabelOutOfRange,
    EmptyDataset,
    // selection
    WrongMode,
    MissingQuery,
    UnsortedFrames,
    TooFewSubsets,
    SpaceTooLarge,
    // retrieval
    MissingTextEmbedding,
    EmptyIndex,
    MissingTruth,
    // generation / clients
    EmptyRetrieval,
    MissingTranscript,
    MissingFrame,
    TransportFailure,
    GeneratorError,
    EmptyAnswer,
    AsrError,
    ServiceError,
    ContractViolation,
    MalformedJson,
    WrongCount,
    UnparseableScore,
    ScoreOutOfRange,
    // configuration
    InvalidConfig,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingFile: return "MissingFile";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::DuplicateVideoId: return "DuplicateVideoId";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::NonFiniteValue: return "NonFiniteValue";
        case ErrorKind::BadMagic: return "BadMagic";
        case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorKind::TruncatedFile: return "TruncatedFile";
        case ErrorKind::InvalidMatrix: return "InvalidMatrix";
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
        case ErrorKind::TooFewFrames: return "TooFewFrames";
        case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::WrongMode: return "WrongMode";
        case ErrorKind::MissingQuery: return "MissingQuery";
        case ErrorKind::UnsortedFrames: return "UnsortedFrames";
        case ErrorKind::TooFewSubsets: return "TooFewSubsets";
        case ErrorKind::SpaceTooLarge: return "SpaceTooLarge";
        case ErrorKind::MissingTextEmbedding: return "MissingTextEmbedding";
        case ErrorKind::EmptyIndex: return "EmptyIndex";
        case ErrorKind::MissingTruth: return "MissingTruth";
        case ErrorKind::EmptyRetrieval: return "EmptyRetrieval";
        case ErrorKind::MissingTranscript: return "MissingTranscript";
        case ErrorKind::MissingFrame: return "MissingFrame";
        case ErrorKind::TransportFailure: return "TransportFailure";
        case ErrorKind::GeneratorError: return "GeneratorError";
        case ErrorKind::EmptyAnswer: return "EmptyAnswer";
        case ErrorKind::AsrError: return "AsrError";
        case ErrorKind::ServiceError: return "ServiceError";
        case ErrorKind::ContractViolation: return "ContractViolation";
        case ErrorKind::MalformedJson: return "MalformedJson";
        case ErrorKind::WrongCount: return "WrongCount";
        case ErrorKind::UnparseableScore: return "UnparseableScore";
        case ErrorKind::ScoreOutOfRange: return "ScoreOutOfRange";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

  private:
    ErrorKind kind_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) { throw Error(kind, detail); }

/// 0 success, 1 validation, 2 transport, 3 data corruption.
inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::TransportFailure:
        case ErrorKind::GeneratorError:
        case ErrorKind::AsrError:
        case ErrorKind::ServiceError:
            return 2;
        case ErrorKind::NonFiniteValue:
        case ErrorKind::BadMagic:
        case ErrorKind::UnsupportedVersion:
        case ErrorKind::TruncatedFile:
        case ErrorKind::InvalidMatrix:
        case ErrorKind::ContractViolation:
            return 3;
        default:
            return 1;
    }
}

}  // namespace vrag
