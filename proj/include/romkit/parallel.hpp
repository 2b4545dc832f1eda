#pragma once

namespace romkit {

/// Number of threads the parallel kernels will use. Resolution order:
/// set_threads(n > 0), else the ROMKIT_THREADS environment variable,
/// else the OpenMP default. Always >= 1.
int thread_count();

/// Cap kernel parallelism; 0 restores automatic selection.
void set_threads(int n);

/// True when the build has OpenMP support compiled in.
bool openmp_enabled();

} // namespace romkit
