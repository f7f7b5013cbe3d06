#pragma once

namespace tad {

// Reserved vocabulary ids, fixed across every vocabulary this project builds.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kSepId = 2;
inline constexpr int kNumReservedIds = 3;

}  // namespace tad
