int sumOfSquares(int *a, int a_len) {
  int acc = 0;
  for (int i = 0; i < a_len; i++) {
    acc += a[i] * a[i];
  }
  return acc;
}
