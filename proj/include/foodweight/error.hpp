#pragma once

#include <stdexcept>
#include <string>

namespace foodweight {

/// Base of every error raised by the library. Each failure mode named in the
/// module contracts has its own subclass so callers can catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FOODWEIGHT_DEFINE_ERROR(Name)            \
  class Name : public Error {                    \
   public:                                       \
    explicit Name(const std::string& what)       \
        : Error(std::string(#Name ": ") + what) {} \
  }

FOODWEIGHT_DEFINE_ERROR(DegenerateBox);
FOODWEIGHT_DEFINE_ERROR(DecodeError);
FOODWEIGHT_DEFINE_ERROR(EmptyDataset);
FOODWEIGHT_DEFINE_ERROR(ZeroStd);
FOODWEIGHT_DEFINE_ERROR(UnknownClass);
FOODWEIGHT_DEFINE_ERROR(DimensionMismatch);
FOODWEIGHT_DEFINE_ERROR(EmptyBatch);
FOODWEIGHT_DEFINE_ERROR(EmptyInput);
FOODWEIGHT_DEFINE_ERROR(ZeroActual);
FOODWEIGHT_DEFINE_ERROR(ConstantActuals);
FOODWEIGHT_DEFINE_ERROR(NoGroundTruth);
FOODWEIGHT_DEFINE_ERROR(NoPredictions);
FOODWEIGHT_DEFINE_ERROR(ParseError);
FOODWEIGHT_DEFINE_ERROR(MissingFile);
FOODWEIGHT_DEFINE_ERROR(IoError);
FOODWEIGHT_DEFINE_ERROR(InvalidArgument);

#undef FOODWEIGHT_DEFINE_ERROR

}  // namespace foodweight
