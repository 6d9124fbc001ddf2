#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nbsde
{
//! Base class for every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

#define NBSDE_DEFINE_ERROR(NAME)        \
    class NAME : public Error           \
    {                                   \
      public:                           \
        using Error::Error;             \
    }

// geometry
NBSDE_DEFINE_ERROR(DegenerateProjection);
NBSDE_DEFINE_ERROR(BadOrder);
NBSDE_DEFINE_ERROR(UnsupportedDomain);

// expressions and constants
NBSDE_DEFINE_ERROR(UnknownIdentifier);
NBSDE_DEFINE_ERROR(ArityMismatch);
NBSDE_DEFINE_ERROR(UnboundVariable);
NBSDE_DEFINE_ERROR(DomainError);
NBSDE_DEFINE_ERROR(InadmissibleConstants);

// finite elements
NBSDE_DEFINE_ERROR(BadResolution);
NBSDE_DEFINE_ERROR(SingularSystem);
NBSDE_DEFINE_ERROR(InnerDivergence);
NBSDE_DEFINE_ERROR(MeshMismatch);

// paths and Monte Carlo
NBSDE_DEFINE_ERROR(StepTooLarge);
NBSDE_DEFINE_ERROR(IndexOrder);
NBSDE_DEFINE_ERROR(AdmissibilityError);

// picard
NBSDE_DEFINE_ERROR(TooFewIterates);

// cli
NBSDE_DEFINE_ERROR(ConfigError);
NBSDE_DEFINE_ERROR(FieldLoadError);

#undef NBSDE_DEFINE_ERROR

//! Parse failure with the byte offset where the parser gave up.
class SyntaxError : public Error
{
  public:
    SyntaxError(std::string const& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset)
    {
    }

    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

}  // namespace nbsde
