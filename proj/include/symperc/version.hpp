#pragma once

namespace symperc {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "perceptron-lab";

}  // namespace symperc
