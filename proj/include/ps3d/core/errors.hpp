#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ps3d {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PS3D_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& msg) : Error(msg) {}     \
    }

PS3D_DEFINE_ERROR(InvalidDepth);
PS3D_DEFINE_ERROR(DimensionMismatch);
PS3D_DEFINE_ERROR(ImageTooSmall);
PS3D_DEFINE_ERROR(GridMismatch);
PS3D_DEFINE_ERROR(OutOfBounds);
PS3D_DEFINE_ERROR(VersionMismatch);
PS3D_DEFINE_ERROR(CorruptModel);
PS3D_DEFINE_ERROR(EmptyStateSpace);
PS3D_DEFINE_ERROR(NonConcaveDeformation);
PS3D_DEFINE_ERROR(InstanceTooLarge);
PS3D_DEFINE_ERROR(InsufficientSamples);
PS3D_DEFINE_ERROR(NoValidSamples);
PS3D_DEFINE_ERROR(DegenerateData);
PS3D_DEFINE_ERROR(NonFiniteLoss);
PS3D_DEFINE_ERROR(NoGroundTruth);
PS3D_DEFINE_ERROR(ConfigInvalid);
PS3D_DEFINE_ERROR(IoError);

#undef PS3D_DEFINE_ERROR

/// Malformed input file. Carries the byte offset at which parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

}  // namespace ps3d
