/* the two expansions have different shapes (a over b vs b over a), so the
 * second side runs as an explicit pull-one-element state machine driven by
 * the first side's loop nest */
int zipFlatMapFlatMap(int *a, int a_len, int *b, int b_len) {
  int acc = 0;
  int k = 0;
  int l = 0;
  int in_r = 0;
  for (int i = 0; i < a_len; i++) {
    int x = a[i];
    for (int j = 0; j < b_len; j++) {
      int left = x * b[j];
      int rv = 0;
      int got = 0;
      while (!got) {
        if (in_r) {
          if (l < a_len) {
            rv = b[k] + a[l];
            l++;
            got = 1;
          } else {
            in_r = 0;
            k++;
          }
        } else if (k < b_len) {
          l = 0;
          in_r = 1;
        } else {
          goto done;
        }
      }
      acc += left + rv;
    }
  }
done:
  return acc;
}
