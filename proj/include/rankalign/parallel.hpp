#pragma once

#include <cstddef>

namespace rankalign {

/// Hardware concurrency, capped by the RANKALIGN_THREADS environment variable
/// when it holds a positive integer. Always >= 1.
std::size_t worker_count();

}  // namespace rankalign
