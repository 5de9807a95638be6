#include "rgenima/error.hpp"

namespace rgenima {

const char* errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::BadMagic: return "BadMagic";
        case Errc::BadVersion: return "BadVersion";
        case Errc::TruncatedData: return "TruncatedData";
        case Errc::NonFiniteVoxel: return "NonFiniteVoxel";
        case Errc::DTypeMismatch: return "DTypeMismatch";
        case Errc::IoFailure: return "IoFailure";
        case Errc::LabelOutOfRange: return "LabelOutOfRange";
        case Errc::DimsMismatch: return "DimsMismatch";
        case Errc::UnknownLabel: return "UnknownLabel";
        case Errc::DegenerateBox: return "DegenerateBox";
        case Errc::DuplicateRoi: return "DuplicateRoi";
        case Errc::EmptyColumn: return "EmptyColumn";
        case Errc::AllMissing: return "AllMissing";
        case Errc::NegativeCount: return "NegativeCount";
        case Errc::MissingGenotype: return "MissingGenotype";
        case Errc::UnknownStage: return "UnknownStage";
        case Errc::InsufficientSubjects: return "InsufficientSubjects";
        case Errc::MissingPatchSet: return "MissingPatchSet";
        case Errc::UnknownPlantTarget: return "UnknownPlantTarget";
        case Errc::UnknownToken: return "UnknownToken";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::NonFiniteActivation: return "NonFiniteActivation";
        case Errc::AnchorMismatch: return "AnchorMismatch";
        case Errc::EmptyTarget: return "EmptyTarget";
        case Errc::DivergedLoss: return "DivergedLoss";
        case Errc::EmptyTrace: return "EmptyTrace";
        case Errc::MissingSpan: return "MissingSpan";
        case Errc::EmptyGroup: return "EmptyGroup";
        case Errc::EmptySample: return "EmptySample";
        case Errc::TopKExceedsFeatures: return "TopKExceedsFeatures";
        case Errc::InvalidTable: return "InvalidTable";
        case Errc::NotInUniverse: return "NotInUniverse";
        case Errc::EmptyMatrix: return "EmptyMatrix";
        case Errc::Parse: return "Parse";
        case Errc::Config: return "Config";
        case Errc::EmptyResult: return "EmptyResult";
        case Errc::MissingArtifact: return "MissingArtifact";
        case Errc::UnknownRoiInFilter: return "UnknownRoiInFilter";
    }
    return "Unknown";
}

}  // namespace rgenima
