#ifndef DCE_VERSION_HPP
#define DCE_VERSION_HPP

namespace dce {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kSweepFormatVersion = 1;

}  // namespace dce

#endif  // DCE_VERSION_HPP
