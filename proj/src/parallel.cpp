#include "protoseg/parallel.hpp"

#include <omp.h>

#include <cstdlib>

namespace protoseg {

namespace {

int g_explicit_cap = 0;

int env_cap() {
    static const int cap = [] {
        const char* v = std::getenv("PROTOSEG_THREADS");
        if (!v) return 0;
        const int n = std::atoi(v);
        return n > 0 ? n : 0;
    }();
    return cap;
}

}  // namespace

int thread_count() {
    if (g_explicit_cap > 0) return g_explicit_cap;
    if (env_cap() > 0) return env_cap();
    return omp_get_max_threads();
}

void set_thread_count(int n) {
    g_explicit_cap = n > 0 ? n : 0;
}

}  // namespace protoseg
