#pragma once

namespace protoseg {

// Worker count used by the OpenMP kernels. Resolution order: explicit
// set_thread_count() > PROTOSEG_THREADS env var > OpenMP default.
// 0 means "auto". All kernels produce bit-identical results for any
// thread count: parallel loops only span independent output elements and
// every floating-point reduction is accumulated in a fixed serial order.
int thread_count();
void set_thread_count(int n);

}  // namespace protoseg
