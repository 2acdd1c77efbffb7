#pragma once

#include <cstdint>
#include <functional>

namespace pff {

// Global worker count, set once from the CLI --threads flag. Default 1.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [begin, end), split into contiguous chunks, one chunk
// per worker. Chunks never overlap and no reduction happens across them, so
// results are identical for every thread count. Runs inline when the range
// is small or only one worker is configured.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn);

}  // namespace pff
