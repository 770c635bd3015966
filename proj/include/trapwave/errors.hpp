#pragma once

#include <stdexcept>
#include <string>

namespace trapwave {

/// Base of every domain error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define TRAPWAVE_DEFINE_ERROR(Name)                  \
    class Name : public Error {                       \
      public:                                         \
        explicit Name(const std::string& what_arg)    \
            : Error(std::string(#Name ": ") + what_arg) \
        {}                                            \
    }

TRAPWAVE_DEFINE_ERROR(DegenerateRay);
TRAPWAVE_DEFINE_ERROR(OffSurface);
TRAPWAVE_DEFINE_ERROR(NoConvergence);
TRAPWAVE_DEFINE_ERROR(StoryMismatch);
TRAPWAVE_DEFINE_ERROR(AtFocus);
TRAPWAVE_DEFINE_ERROR(NeverPasses);
TRAPWAVE_DEFINE_ERROR(ResolutionTooCoarse);
TRAPWAVE_DEFINE_ERROR(Blowup);
TRAPWAVE_DEFINE_ERROR(FociInsideObstacle);
TRAPWAVE_DEFINE_ERROR(SupportClipped);
TRAPWAVE_DEFINE_ERROR(MissingManifest);

#undef TRAPWAVE_DEFINE_ERROR

}  // namespace trapwave
