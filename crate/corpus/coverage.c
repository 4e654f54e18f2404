// Branch-coverage corpus. Every branch decision depends only on scalar
// parameters, and every constant that matters lies inside [-64, 64].

void exit(int code);

struct Pt {
  int x;
  int y;
};

int classify(int x) {
  if (x < 0)
    return -1;
  else if (x == 0)
    return 0;
  return 1;
}

int in_window(int x, int lo) {
  if (x >= lo && x <= lo + 10)
    return 1;
  return 0;
}

int both_positive(int a, int b) {
  if (a > 0 && b > 0)
    return 1;
  return 0;
}

int either_mark(int a, int b) {
  if (a == 3 || b == -2)
    return 1;
  return 0;
}

int mixed(int a, int b) {
  if ((a > 0 || b > 0) && !(a == b))
    return a - b;
  return 0;
}

int four_conditions(int a, int b) {
  if (a > 1 && a < 9 || b > 1 && b < 9)
    return 1;
  return 0;
}

int grade(int s) {
  if (s >= 60)
    return 4;
  else if (s >= 40)
    return 3;
  else if (s >= 20)
    return 2;
  else if (s >= 10)
    return 1;
  return 0;
}

int weekday(int d) {
  int r = -1;
  switch (d) {
  case 0:
    r = 1;
    break;
  case 6:
    r = 1;
    break;
  case 1:
  case 2:
  case 3:
    r = 0;
    break;
  default:
    r = -1;
  }
  return r;
}

int count_up(int n) {
  int i = 0;
  while (i < n)
    i = i + 1;
  if (i == 2)
    return 1;
  return 0;
}

int sum_to(int n) {
  int s = 0;
  int i;
  for (i = 1; i <= n; i++)
    s += i;
  if (s > 5)
    return s;
  return 0;
}

int abs_diff(int a, int b) {
  if (a > b)
    return a - b;
  return b - a;
}

int sign_product(int a, int b) {
  if (a > 0) {
    if (b > 0)
      return 1;
    return -1;
  } else {
    if (b < 0)
      return 1;
  }
  return 0;
}

int clamp10(int x) {
  if (x < -10)
    x = -10;
  if (x > 10)
    x = 10;
  return x;
}

unsigned umod(unsigned x) {
  if (x % 4 == 3)
    return 1;
  if (x > 40)
    return 2;
  return 0;
}

int char_kind(char c) {
  if (c >= '0' && c <= '9')
    return 1;
  if (c == ' ')
    return 2;
  return 0;
}

int table_lookup(int i) {
  int t[4] = {5, 7, 9, 11};
  if (i >= 0 && i < 4) {
    if (t[i] > 8)
      return 1;
    return 2;
  }
  return 0;
}

int point_zone(int a, int b) {
  struct Pt p;
  p.x = a;
  p.y = b;
  if (p.x + p.y > 10)
    return 1;
  if (p.x == p.y)
    return 2;
  return 0;
}

int twice(int v) {
  return v * 2;
}

int via_helper(int x) {
  int t;
  t = twice(x);
  if (t == 18)
    return 1;
  return 0;
}

int flag_then_test(int x) {
  int y = 2;
  if (x > 3)
    y = 1;
  if (y == 1)
    return 10;
  return 20;
}

int bit_fields(int x) {
  if ((x & 3) == 2)
    return 1;
  if ((x >> 2) == 5)
    return 2;
  return 0;
}

int find_index(int n) {
  int i;
  for (i = 0; i < 10; i++) {
    if (i == n)
      break;
  }
  if (i < 10)
    return i;
  return -1;
}

int countdown(int n) {
  while (n > 0)
    n = n - 2;
  if (n == -1)
    return 1;
  return 0;
}

int grid_hits(int a) {
  int c = 0;
  int i;
  int j;
  for (i = 0; i < 2; i++)
    for (j = 0; j < 2; j++)
      if (i + j == a)
        c++;
  if (c == 2)
    return 1;
  return 0;
}

int compare(int x, int y) {
  if (x == y)
    return 0;
  if (x > y)
    return 1;
  return -1;
}

int never_both(int x) {
  if (x > 5 && x < 3)
    return 1;
  return 0;
}

int dead_inner(int x) {
  if (x > 0) {
    if (x < 0)
      return 1;
    return 2;
  }
  return 3;
}

int parity(int x) {
  if (x % 2 == 0)
    return 0;
  if (x % 2 == 1)
    return 1;
  return -1;
}

int product_is(int x, int y) {
  if (x * y == 12)
    return 1;
  return 0;
}

int calc(int op, int v) {
  switch (op) {
  case 0:
    return v + 1;
  case 1:
    return v - 1;
  case 2:
    if (v > 0)
      return v;
    return -v;
  default:
    break;
  }
  return 0;
}

int any_flag(unsigned f) {
  if ((f & 1) || (f & 4))
    return 1;
  return 0;
}

int bounded_sum(int n) {
  int s = 0;
  int i;
  for (i = 0; i < n && i < 3; i++)
    s += i;
  if (s == 3)
    return 1;
  return 0;
}

int cmdline_option_value(int argc, int argv[4], int i) {
  if (i == argc) {
    exit(1);
    return -1;
  }
  return argv[i];
}

void getLocalPayload(int nUsable, char flags, int nTotal, int *pnLocal) {
  int nLocal;
  int nMinLocal;
  int nMaxLocal;

  if (flags == 0x0D) {
    nMinLocal = (nUsable - 12) * 32 / 255 - 23;
    nMaxLocal = nUsable - 35;
  } else {
    nMinLocal = (nUsable - 12) * 32 / 255 - 23;
    nMaxLocal = (nUsable - 12) * 64 / 255 - 23;
  }

  nLocal = nMinLocal + (nTotal - nMinLocal) % (nUsable - 4);
  if (nLocal > nMaxLocal)
    nLocal = nMinLocal;
  *pnLocal = nLocal;
}
