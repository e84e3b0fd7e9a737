/**
 * @file errors.hpp
 * @brief Exception hierarchy for the spo2cam library.
 */

#ifndef SPO2CAM_ERRORS_HPP
#define SPO2CAM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spo2cam {

/// Base class for all library errors. Carries a stable machine-readable
/// code alongside the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define SPO2CAM_DEFINE_ERROR(Name)                                    \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& message)                     \
            : Error(#Name, message) {}                                \
    }

SPO2CAM_DEFINE_ERROR(SingularDesign);
SPO2CAM_DEFINE_ERROR(ZeroHemoglobin);
SPO2CAM_DEFINE_ERROR(InsufficientFrames);
SPO2CAM_DEFINE_ERROR(RateTooLow);
SPO2CAM_DEFINE_ERROR(ShapeMismatch);
SPO2CAM_DEFINE_ERROR(NonFiniteLoss);
SPO2CAM_DEFINE_ERROR(MissingColorcheck);
SPO2CAM_DEFINE_ERROR(LengthMismatch);
SPO2CAM_DEFINE_ERROR(ZeroTruth);
SPO2CAM_DEFINE_ERROR(SingleSubject);
SPO2CAM_DEFINE_ERROR(DatasetOverlap);
SPO2CAM_DEFINE_ERROR(MissingMetadata);
SPO2CAM_DEFINE_ERROR(MissingLabels);
SPO2CAM_DEFINE_ERROR(FrameGap);
SPO2CAM_DEFINE_ERROR(ParseError);
SPO2CAM_DEFINE_ERROR(ConfigError);
SPO2CAM_DEFINE_ERROR(IoError);

#undef SPO2CAM_DEFINE_ERROR

} // namespace spo2cam

#endif // SPO2CAM_ERRORS_HPP
