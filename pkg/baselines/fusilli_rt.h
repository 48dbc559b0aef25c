/* Minimal benchmark runtime: a monotonic clock in nanoseconds and a
 * checksum accumulator that keeps kernel results observable.  Include this
 * header before any system header so the POSIX clock is visible under
 * -std=c99.  Benchmark drivers only; generated kernels never need it. */
#ifndef FUSILLI_RT_H
#define FUSILLI_RT_H

#ifndef _POSIX_C_SOURCE
#define _POSIX_C_SOURCE 199309L
#endif
#include <time.h>

#define FUSILLI_NOW_NS(var)                                                  \
  do {                                                                       \
    struct timespec fus_ts_;                                                 \
    clock_gettime(CLOCK_MONOTONIC, &fus_ts_);                                \
    (var) = (long long)fus_ts_.tv_sec * 1000000000LL + fus_ts_.tv_nsec;      \
  } while (0)

#define FUSILLI_CHECKSUM(acc, value) ((acc) += (long long)(value))

#endif /* FUSILLI_RT_H */
