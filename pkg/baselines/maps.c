/* the seven pipeline maps multiply by 2..8; one fused multiply is the same
 * computation modulo 2^32 (wrapping multiplication is associative) */
int maps(int *a, int a_len) {
  int acc = 0;
  for (int i = 0; i < a_len; i++) {
    acc += a[i] * 40320;
  }
  return acc;
}
