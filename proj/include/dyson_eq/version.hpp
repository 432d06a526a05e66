#ifndef DYSON_EQ_VERSION_HPP
#define DYSON_EQ_VERSION_HPP

namespace dyson_eq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dyson_eq

#endif  // DYSON_EQ_VERSION_HPP
