// Out-of-bounds accesses. Each faulting line carries a bug marker.

struct Rec {
  int vals[3];
  int n;
};

int table[5];

int read_at(int a[4], int i) {
  return a[i]; /* bug */
}

int off_by_one(int a[4]) {
  int s = 0;
  int i;
  for (i = 0; i <= 4; i++)
    s += a[i]; /* bug */
  return s;
}

int shifted(int k) {
  int t[8];
  int i;
  for (i = 0; i < 8; i++)
    t[i] = i;
  if (k > 2)
    return t[k - 10]; /* bug */
  return 0;
}

int option_value(int argc, int argv[4], int i) {
  if (i > argc)
    return -1;
  return argv[i]; /* bug */
}

int rec_get(struct Rec *r, int k) {
  if (k < 0)
    return 0;
  return r->vals[k]; /* bug */
}

int through_pointer(int *p, int k) {
  if (k >= 2)
    return p[k]; /* bug */
  return p[0];
}

int next_elem(int a[4], int i) {
  if (i >= 0 && i < 4)
    return a[i + 1]; /* bug */
  return 0;
}

int matrix(int r, int c) {
  int m[3][3];
  int i;
  int j;
  for (i = 0; i < 3; i++)
    for (j = 0; j < 3; j++)
      m[i][j] = i + j;
  if (r >= 0 && r < 3)
    return m[r][c]; /* bug */
  return -1;
}

void store(int v, int i) {
  int buf[6];
  if (v > 10)
    buf[i] = v; /* bug */
}

int char_index(char c) {
  int counts[10];
  int i;
  for (i = 0; i < 10; i++)
    counts[i] = 0;
  if (c >= '0')
    return counts[c - '0']; /* bug */
  return -1;
}

int global_table(int i) {
  if (i != 0)
    return table[i + 2]; /* bug */
  return table[0];
}

int third_pass(int n) {
  int a[2];
  int i = 0;
  int s = 0;
  a[0] = 1;
  a[1] = 2;
  while (i < n) {
    s += a[i]; /* bug */
    i++;
  }
  return s;
}
