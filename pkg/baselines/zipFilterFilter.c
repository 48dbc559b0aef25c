/* pair the even elements of a with the multiples of three in b, in order;
 * j is the persistent cursor into b */
int zipFilterFilter(int *a, int a_len, int *b, int b_len) {
  int acc = 0;
  int j = 0;
  for (int i = 0; i < a_len; i++) {
    int x = a[i];
    if (x % 2 == 0) {
      int y = 0;
      int got = 0;
      while (j < b_len) {
        y = b[j];
        j++;
        if (y % 3 == 0) {
          got = 1;
          break;
        }
      }
      if (!got) {
        break;
      }
      acc += x + y;
    }
  }
  return acc;
}
