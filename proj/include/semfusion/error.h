#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semfusion {

enum class Errc {
  kInvalidArgument,
  kNonPositiveDepth,
  kResolutionMismatch,
  kClassCountMismatch,
  kEmptyMap,
  kLengthMismatch,
  kTooLarge,
  kBadMagic,
  kTruncatedFile,
  kTrailingBytes,
  kRowNotNormalised,
  kClassOutOfRange,
  kMissingPair,
  kUnreadableImage,
  kMalformedLine,
  kNonMonotonicTimestamps,
  kBadQuaternion,
  kDegenerateSpec,
  kDimensionMismatch,
  kNoData,
  kIoFailure,
  kConfig,
};

std::string_view to_string(Errc code);

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI exit-code mapping) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  Errc code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace semfusion
