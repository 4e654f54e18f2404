// Accesses through fixed or null addresses. Each faulting line carries a bug marker.

struct Dev {
  int ctrl;
  int status;
};

void poke(int v) {
  *(int *)0x52 = v; /* bug */
}

int peek_reg(int x) {
  if (x > 5)
    return *(int *)0x1000; /* bug */
  return 0;
}

int offset_reg(int a) {
  int *r = (int *)(a + 12);
  if (a > 0)
    return *r; /* bug */
  return 0;
}

int null_when(int c) {
  int v = 7;
  int *p = &v;
  if (c > 3)
    p = 0;
  return *p; /* bug */
}

int read_select(int sel) {
  int *reg = (int *)0x4000;
  if (sel == 1)
    return reg[0]; /* bug */
  return sel;
}

void guarded_write(int a, int b) {
  int *port = (int *)0x80;
  if (a > b)
    *port = a - b; /* bug */
}

int dev_status(int on) {
  struct Dev *d = (struct Dev *)0x2000;
  if (on)
    return d->status; /* bug */
  return -1;
}

int base_index(int i) {
  int *base = (int *)0x100;
  if (i < 0)
    return 0;
  return base[i]; /* bug */
}

int null_after_loop(int n) {
  int v = 1;
  int *p = &v;
  int i;
  for (i = 0; i < n && i < 3; i++)
    if (i == 2)
      p = 0;
  return *p; /* bug */
}

char fixed_char(int a) {
  char *p = (char *)0x300;
  if (a == 9)
    return p[a]; /* bug */
  return 0;
}

char null_string(int k) {
  char *s = 0;
  if (k < -5)
    return s[0]; /* bug */
  return 'x';
}
