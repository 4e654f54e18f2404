// Def-use corpus: small functions with few paths.

int counter;

int df_basic(int x) {
  int y = 0;
  if (x > 2)
    y = x * 2;
  else
    y = x - 1;
  return y;
}

int df_kill(int x) {
  int v = x;
  if (x == 5)
    v = 0;
  if (v > 3)
    return v;
  return -v;
}

int df_loop(int n) {
  int s = 0;
  int i = 0;
  while (i < n) {
    s = s + i;
    i = i + 1;
  }
  return s;
}

int df_contra(int x) {
  int r = 1;
  if (x > 10)
    r = 2;
  if (x < 5)
    return r * 3;
  return r;
}

int df_array(int i) {
  int a[3];
  a[0] = 4;
  a[1] = 5;
  a[2] = 6;
  if (i >= 0 && i < 3)
    return a[i];
  return 0;
}

struct Pair {
  int lo;
  int hi;
};

int df_struct(int a, int b) {
  struct Pair p;
  p.lo = a;
  p.hi = b;
  if (p.lo > p.hi) {
    p.lo = b;
    p.hi = a;
  }
  return p.hi - p.lo;
}

int df_switch(int k) {
  int r = 0;
  switch (k) {
  case 1:
    r = 10;
    break;
  case 2:
    r = 20;
  default:
    r = r + 1;
  }
  return r;
}

int df_global(int x) {
  if (x > 0)
    counter = x;
  return counter + 1;
}
