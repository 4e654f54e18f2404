// Constructs at the edge of the dialect.

struct PGcancel {
  int be_pid;
  int be_key;
};

int send(int sock, char *buf, int len, int flags);

int PQcancel(struct PGcancel *cancel, char *errbuf, int errbufsize) {
  int sock = 3;
  char buf[8];
  if (!cancel) {
    errbuf[0] = 'E';
    return 0;
  }
  if (send(sock, buf, sizeof(buf), 0) != (int)sizeof(buf)) {
    errbuf[0] = 'S';
    return 0;
  }
  return 1;
}

int apply(int (*op)(int), int v) {
  return op(v);
}

int residue(int x, int y) {
  if (y != 0 && ((x - 1) * y) % y == 1)
    return 1;
  return 0;
}
