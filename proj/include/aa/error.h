#ifndef AA_ERROR_H_
#define AA_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace aa {

enum class ErrorKind {
  kEmptyDocument,
  kEmptyGroup,
  kMissingFile,
  kSchemaViolation,
  kDuplicateId,
  kMissingRelations,
  kInsufficientContext,
  kMissingEduSequence,
  kIndexOutOfRange,
  kSequenceTooShort,
  kEmptyMap,
  kShapeMismatch,
  kDimensionMismatch,
  kDegenerateDataset,
  kNonFiniteLoss,
  kCorruptCheckpoint,
  kTooFewDocuments,
  kEmptyMatrix,
  kUnknownToken,
  kInvalidDistribution,
  kConfig,
};

std::string_view error_kind_name(ErrorKind kind);

// Every failure the library reports carries a kind so callers (and the CLI
// exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace aa

#endif  // AA_ERROR_H_
