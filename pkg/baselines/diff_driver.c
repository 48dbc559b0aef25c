/* Differential driver: run one kernel on SETS random input sets and print
 * one result per line.  Build twice -- once against the generated kernel,
 * once against the baseline -- and diff the outputs.
 *
 * Configure with -DKERNEL=<name> and one of:
 *   -DSHAPE1   int kernel(int *a, int a_len)
 *   -DSHAPE2   int kernel(int *a, int a_len, int *b, int b_len)
 *   -DSHAPE2N  int kernel(int *a, int a_len, int *b, int b_len, int n)
 * -DCOUNTS makes the second array draw from [1, 255] (run-length counts).
 */
#include "fusilli_rt.h"
#include <stdio.h>

#define MAX_LEN 64

static unsigned int st;
static unsigned int nxt(void) {
  st = st * 1103515245u + 12345u;
  return st;
}
static int pick_len(void) { return (int)(nxt() % (MAX_LEN + 1)); }
static int pick_val(void) { return (int)((nxt() >> 16) % 201u) - 100; }
#ifdef COUNTS
static int pick_count(void) { return (int)((nxt() >> 16) % 255u) + 1; }
#endif

#ifdef SHAPE1
int KERNEL(int *a, int a_len);
#endif
#ifdef SHAPE2
int KERNEL(int *a, int a_len, int *b, int b_len);
#endif
#ifdef SHAPE2N
int KERNEL(int *a, int a_len, int *b, int b_len, int n);
#endif

#ifndef SETS
#define SETS 100
#endif

int main(void) {
  static int a[MAX_LEN];
#if defined(SHAPE2) || defined(SHAPE2N)
  static int b[MAX_LEN];
#endif
  long long checksum = 0;
  st = 20260810u;
  for (int set = 0; set < SETS; set++) {
    int a_len = pick_len();
    for (int i = 0; i < a_len; i++) {
      a[i] = pick_val();
    }
#if defined(SHAPE2) || defined(SHAPE2N)
    int b_len = pick_len();
    for (int i = 0; i < b_len; i++) {
#ifdef COUNTS
      b[i] = pick_count();
#else
      b[i] = pick_val();
#endif
    }
#endif
#ifdef SHAPE1
    int r = KERNEL(a, a_len);
#endif
#ifdef SHAPE2
    int r = KERNEL(a, a_len, b, b_len);
#endif
#ifdef SHAPE2N
    int n = (int)(nxt() % 200u);
    int r = KERNEL(a, a_len, b, b_len, n);
#endif
    printf("%d\n", r);
    FUSILLI_CHECKSUM(checksum, r);
  }
  printf("checksum %lld\n", checksum);
  return 0;
}
