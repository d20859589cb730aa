#pragma once

#include <stdexcept>
#include <string>

namespace lcn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

// A Sinkhorn scaling vector over- or underflowed; the message names the
// kernel variant that produced it.
struct StabilizationError : Error {
    using Error::Error;
};

// A low-rank matvec produced a nonpositive entry on a strictly positive
// input vector. The caller should fall back to a sparse kernel.
struct NegativeKernelError : Error {
    using Error::Error;
};

struct FactorizationError : Error {
    using Error::Error;
};

struct PccUndefinedError : Error {
    using Error::Error;
};

}  // namespace lcn
