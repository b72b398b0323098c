#ifndef PHEFL_VERSION_HPP
#define PHEFL_VERSION_HPP

namespace phefl {

inline constexpr const char* kVersion = "0.1.0";

} // namespace phefl

#endif
