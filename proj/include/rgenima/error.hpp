#pragma once

#include <stdexcept>
#include <string>

namespace rgenima {

enum class Errc {
    BadMagic,
    BadVersion,
    TruncatedData,
    NonFiniteVoxel,
    DTypeMismatch,
    IoFailure,
    LabelOutOfRange,
    DimsMismatch,
    UnknownLabel,
    DegenerateBox,
    DuplicateRoi,
    EmptyColumn,
    AllMissing,
    NegativeCount,
    MissingGenotype,
    UnknownStage,
    InsufficientSubjects,
    MissingPatchSet,
    UnknownPlantTarget,
    UnknownToken,
    ShapeMismatch,
    NonFiniteActivation,
    AnchorMismatch,
    EmptyTarget,
    DivergedLoss,
    EmptyTrace,
    MissingSpan,
    EmptyGroup,
    EmptySample,
    TopKExceedsFeatures,
    InvalidTable,
    NotInUniverse,
    EmptyMatrix,
    Parse,
    Config,
    EmptyResult,
    MissingArtifact,
    UnknownRoiInFilter,
};

const char* errc_name(Errc c) noexcept;

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace rgenima
