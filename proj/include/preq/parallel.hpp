#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace preq {

/// Fixed block size for all sample/path partitioning. Results are reduced in
/// block-index order, so worker count never changes the bytes of any output.
inline constexpr std::size_t kAccumulationBlock = 1024;

inline std::size_t block_count(std::size_t total, std::size_t block = kAccumulationBlock) {
  return (total + block - 1) / block;
}

/// Runs fn(block_index, begin, end) over [0, total) in blocks of fixed size.
/// Blocks may execute on any worker; fn must write only to per-block slots.
template <typename Fn>
void for_each_block(std::size_t total, int workers, Fn&& fn,
                    std::size_t block = kAccumulationBlock) {
  const std::size_t nblocks = block_count(total, block);
  if (nblocks == 0) return;
  auto run = [&](std::size_t b) {
    const std::size_t begin = b * block;
    const std::size_t end = std::min(total, begin + block);
    fn(b, begin, end);
  };
  if (workers <= 1 || nblocks == 1) {
    for (std::size_t b = 0; b < nblocks; ++b) run(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  const std::size_t nthreads =
      std::min<std::size_t>(static_cast<std::size_t>(workers), nblocks);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1)) run(b);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace preq
