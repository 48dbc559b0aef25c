int flatMapTake(int *a, int a_len, int *b, int b_len, int n) {
  int acc = 0;
  int left = n;
  for (int i = 0; i < a_len && left > 0; i++) {
    int x = a[i];
    for (int j = 0; j < b_len && left > 0; j++) {
      acc += x * b[j];
      left--;
    }
  }
  return acc;
}
