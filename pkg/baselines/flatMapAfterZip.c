/* zip of a with itself (x + y), each element expanded over b shifted by it */
int flatMapAfterZip(int *a, int a_len, int *b, int b_len) {
  int acc = 0;
  for (int i = 0; i < a_len; i++) {
    int x = a[i] + a[i];
    for (int j = 0; j < b_len; j++) {
      acc += b[j] + x;
    }
  }
  return acc;
}
