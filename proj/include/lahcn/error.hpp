#pragma once

#include <stdexcept>
#include <string>

namespace lahcn {

// Exit-code families used by the command-line tool.
enum class ErrorClass {
  kConfig = 2,       // bad configuration or unparsable input
  kConsistency = 3,  // input parsed but inconsistent with the hierarchy/data
  kNumeric = 4,      // shape or numeric failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }
  int exit_code() const noexcept { return static_cast<int>(class_); }

 private:
  ErrorClass class_;
};

#define LAHCN_DEFINE_ERROR(Name, Cls)                                        \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {} \
  };

// hierarchy
LAHCN_DEFINE_ERROR(CycleError, kConsistency)
LAHCN_DEFINE_ERROR(MultiParentError, kConsistency)
LAHCN_DEFINE_ERROR(OrphanError, kConsistency)
LAHCN_DEFINE_ERROR(UnknownLabelError, kConsistency)
LAHCN_DEFINE_ERROR(LevelOutOfRange, kConsistency)

// tensor
LAHCN_DEFINE_ERROR(ShapeMismatch, kNumeric)
LAHCN_DEFINE_ERROR(AllMaskedError, kNumeric)
LAHCN_DEFINE_ERROR(EmptyAxis, kNumeric)
LAHCN_DEFINE_ERROR(NotScalarError, kNumeric)
LAHCN_DEFINE_ERROR(NonFiniteError, kNumeric)

// corpus / io
LAHCN_DEFINE_ERROR(ParseError, kConfig)
LAHCN_DEFINE_ERROR(DuplicateIdError, kConsistency)
LAHCN_DEFINE_ERROR(EmptyCorpus, kConsistency)
LAHCN_DEFINE_ERROR(DimMismatch, kConsistency)
LAHCN_DEFINE_ERROR(UnknownDocumentError, kConsistency)

// training / persistence
LAHCN_DEFINE_ERROR(ConfigError, kConfig)
LAHCN_DEFINE_ERROR(EmptyDataset, kConsistency)
LAHCN_DEFINE_ERROR(NonFiniteLoss, kNumeric)
LAHCN_DEFINE_ERROR(VersionError, kConfig)
LAHCN_DEFINE_ERROR(FingerprintError, kConsistency)

// metrics
LAHCN_DEFINE_ERROR(NoPositivesError, kConsistency)

#undef LAHCN_DEFINE_ERROR

}  // namespace lahcn
