// Division and remainder by zero. Each faulting line carries a bug marker.

struct Frac {
  int num;
  int den;
};

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

  nLocal = nMinLocal + (nTotal - nMinLocal) % (nUsable - 4); /* bug */
  if (nLocal > nMaxLocal)
    nLocal = nMinLocal;
  *pnLocal = nLocal;
}

int quotient(int a, int b) {
  return a / b; /* bug */
}

int remainder_of(int a, int b) {
  if (a < 0)
    return 0;
  return a % b; /* bug */
}

int mean(int sum, int n) {
  if (sum > 100)
    return 100;
  return sum / n; /* bug */
}

int shifted_div(int x) {
  return 100 / (x - 7); /* bug */
}

int guarded_div(int x) {
  if (x > 0)
    return 10 / (x - 5); /* bug */
  return 0;
}

int countdown_div(int a) {
  int s = 0;
  int i;
  for (i = 3; i >= 0; i--) {
    if (a > 60)
      s += a / i; /* bug */
  }
  return s;
}

int square_mod(int x) {
  return 7 % (x * x - 4); /* bug */
}

unsigned masked(unsigned a, unsigned b) {
  return a / (b & 3); /* bug */
}

int digit_div(char c) {
  if (c >= '0' && c <= '9')
    return 64 / (c - '0'); /* bug */
  return -1;
}

int frac_scale(struct Frac *f, int scale) {
  if (scale == 0)
    return f->num;
  return scale / f->den; /* bug */
}
