#include "semfusion/error.h"

namespace semfusion {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kNonPositiveDepth: return "NonPositiveDepth";
    case Errc::kResolutionMismatch: return "ResolutionMismatch";
    case Errc::kClassCountMismatch: return "ClassCountMismatch";
    case Errc::kEmptyMap: return "EmptyMap";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kTooLarge: return "TooLarge";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kTruncatedFile: return "TruncatedFile";
    case Errc::kTrailingBytes: return "TrailingBytes";
    case Errc::kRowNotNormalised: return "RowNotNormalised";
    case Errc::kClassOutOfRange: return "ClassOutOfRange";
    case Errc::kMissingPair: return "MissingPair";
    case Errc::kUnreadableImage: return "UnreadableImage";
    case Errc::kMalformedLine: return "MalformedLine";
    case Errc::kNonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case Errc::kBadQuaternion: return "BadQuaternion";
    case Errc::kDegenerateSpec: return "DegenerateSpec";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kNoData: return "NoData";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kConfig: return "Config";
  }
  return "Unknown";
}

}  // namespace semfusion
