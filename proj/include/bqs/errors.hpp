#pragma once

#include <stdexcept>
#include <string>

namespace bqs {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define BQS_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                  \
    public:                                                      \
        explicit Name(const std::string& what)                   \
            : Error(std::string(#Name ": ") + what) {}           \
    }

BQS_DEFINE_ERROR(RemapOutOfBand);
BQS_DEFINE_ERROR(DegenerateFrequency);
BQS_DEFINE_ERROR(SingularSymbol);
BQS_DEFINE_ERROR(BoundViolation);
BQS_DEFINE_ERROR(QuadratureNoConvergence);
BQS_DEFINE_ERROR(NonzeroMeanInZ);
BQS_DEFINE_ERROR(InsufficientSamples);
BQS_DEFINE_ERROR(CFLViolation);
BQS_DEFINE_ERROR(NaNDetected);
BQS_DEFINE_ERROR(CoercivityLost);
BQS_DEFINE_ERROR(ConfigError);
BQS_DEFINE_ERROR(IOError);
BQS_DEFINE_ERROR(InvalidParams);

#undef BQS_DEFINE_ERROR

}  // namespace bqs
