int filters(int *a, int a_len) {
  int acc = 0;
  for (int i = 0; i < a_len; i++) {
    int e = a[i];
    if (e % 2 != 0 && e % 3 != 0 && e % 4 != 0 && e % 5 != 0 && e % 6 != 0 &&
        e % 7 != 0 && e % 8 != 0) {
      acc += e;
    }
  }
  return acc;
}
