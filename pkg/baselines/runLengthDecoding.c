int runLengthDecoding(int *values, int values_len, int *counts, int counts_len) {
  int n = values_len < counts_len ? values_len : counts_len;
  int acc = 0;
  for (int i = 0; i < n; i++) {
    int v = values[i];
    int c = counts[i];
    for (int r = 0; r < c; r++) {
      acc += v;
    }
  }
  return acc;
}
