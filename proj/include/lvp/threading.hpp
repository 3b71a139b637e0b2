#pragma once

#include <cstdint>
#include <functional>

namespace lvp {

// Worker cap: min(hardware threads, LVPNET_THREADS when set). At least 1.
int worker_count();

// Static block partition of [0, n) over the worker pool; blocks, not
// interleaving, so per-worker iteration order stays ascending. Results must
// be written to index-addressed slots; any cross-item reduction happens in
// index order afterwards, which keeps outputs independent of thread count.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

} // namespace lvp
