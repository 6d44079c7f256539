#pragma once

#include <cstddef>
#include <functional>

namespace symprice {

/// Worker cap for internal parallel loops. 0 means hardware concurrency.
/// Results never depend on this value: loops split [0, n) into fixed-size
/// blocks and each block writes only its own output slots.
void set_thread_count(unsigned n) noexcept;
unsigned thread_count() noexcept;

inline constexpr std::size_t kBlockSize = 1 << 14;

/// Calls body(begin, end) for every block of [0, n). Blocks are claimed
/// dynamically by up to thread_count() workers.
void parallel_blocks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace symprice
