/* baseline: plain accumulation over the array */
int sum(int *a, int a_len) {
  int acc = 0;
  for (int i = 0; i < a_len; i++) {
    acc += a[i];
  }
  return acc;
}
