int dotProduct(int *a, int a_len, int *b, int b_len) {
  int n = a_len < b_len ? a_len : b_len;
  int acc = 0;
  for (int i = 0; i < n; i++) {
    acc += a[i] * b[i];
  }
  return acc;
}
