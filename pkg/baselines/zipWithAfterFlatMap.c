/* left side is the flat-map expansion, right side is a itself; k tracks how
 * many pairs have been produced (the zip stops at a_len of them) */
int zipWithAfterFlatMap(int *a, int a_len, int *b, int b_len) {
  int acc = 0;
  int k = 0;
  for (int i = 0; i < a_len && k < a_len; i++) {
    int x = a[i];
    for (int j = 0; j < b_len && k < a_len; j++) {
      acc += (b[j] + x) + a[k];
      k++;
    }
  }
  return acc;
}
