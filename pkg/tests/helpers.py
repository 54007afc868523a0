"""Small shared helpers for the test modules."""
from pinacolada.explorer import ExplorerConfig, explore
from pinacolada.frontend import parse_source
from pinacolada.goto import lower


def compile_src(src):
    return lower(parse_source(src))


def run(src, **kw):
    kw.setdefault("int_width", 4)
    return explore(compile_src(src), ExplorerConfig(**kw))


COUNTER_LOOP = """int main() {
  int x = 1;
  int y = -1;
  while (x < 3) {
    if (y < 0) {
      x = x + 1;
    }
  }
  assert(x == 3);
  return 0;
}
"""

COUNTER_LOOP_STUCK = COUNTER_LOOP.replace("int y = -1;", "int y = 2;")

TWO_DIAMONDS = """int main() {
  int a = nondet_int();
  int b = nondet_int();
  int r = 0;
  if (a > 0) { r = r + 1; } else { r = r - 1; }
  if (b > 0) { r = r + 2; } else { r = r - 2; }
  return 0;
}
"""

X_NE_5 = """int main() {
  int x;
  x = nondet_int();
  if (x > 0) {
    assert(x != 5);
  }
  return 0;
}
"""
