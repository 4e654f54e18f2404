// Nested loops before three independent branches.
int stress(int n, int m, int a, int b, int c) {
  int s = 0;
  int i = 0;
  while (i < n) {
    int j = 0;
    while (j < m) {
      if (a > i) s = s + 1;
      if (b > j) s = s + 2;
      if (c > i + j) s = s + 3;
      j = j + 1;
    }
    i = i + 1;
  }
  if (i == 0) s = s - 1;
  if (a == 7) s = s + 100;
  if (b == 9) s = s * 2;
  return s;
}
