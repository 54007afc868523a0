"""Random MiniC program generator for differential tests.

Programs read at most three nondet inputs (all at the top of main) and every
loop is a counter loop with a constant bound whose counter is never written
in the body, so every path terminates.
"""
import random

INT_OPS = ["+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>"]
CMP_OPS = ["<", "<=", ">", ">=", "==", "!="]


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.ints = []
        self.bools = []
        self.loop_id = 0
        self.budget = 0

    def lit(self):
        return str(self.rng.randint(-8, 7))

    def int_expr(self, depth=2):
        r = self.rng.random()
        if depth == 0 or r < 0.3:
            if self.ints and self.rng.random() < 0.75:
                return self.rng.choice(self.ints)
            return self.lit()
        if r < 0.4:
            return f"{self.rng.choice(['-', '~'])}({self.int_expr(depth - 1)})"
        if r < 0.45 and self.helper:
            return f"helper({self.int_expr(depth - 1)}, {self.int_expr(depth - 1)})"
        op = self.rng.choice(INT_OPS)
        return f"({self.int_expr(depth - 1)} {op} {self.int_expr(depth - 1)})"

    def bool_expr(self, depth=2):
        r = self.rng.random()
        if depth == 0 or r < 0.5:
            if self.bools and r < 0.15:
                return self.rng.choice(self.bools)
            return f"({self.int_expr(1)} {self.rng.choice(CMP_OPS)} {self.int_expr(1)})"
        if r < 0.6:
            return f"!({self.bool_expr(depth - 1)})"
        op = self.rng.choice(["&&", "||", "==", "!="])
        return f"({self.bool_expr(depth - 1)} {op} {self.bool_expr(depth - 1)})"

    def identity(self):
        """A bit-vector identity that holds for all values, sometimes perturbed."""
        x, y = self.int_expr(0), self.int_expr(0)
        lhs, rhs = self.rng.choice([
            (f"({x} + {y})", f"({y} + {x})"),
            (f"({x} * 2)", f"({x} << 1)"),
            (f"(({x} ^ {y}) ^ {y})", x),
            (f"-(~{x})", f"({x} + 1)"),
            (f"(({x} & {y}) + ({x} | {y}))", f"({x} + {y})"),
            (f"({x} - {y})", f"({x} + -({y}))"),
            (f"((({x} / 3) * 3) + ({x} % 3))", x),
            (f"({x} >> 4)", x),
            (f"({x} <= 7)", "true"),
        ])
        if self.rng.random() < 0.25:
            rhs = f"({rhs} + 1)" if "true" not in rhs else "false"
        return f"({lhs} == {rhs})"

    def assertion(self):
        if self.rng.random() < 0.6:
            return self.identity()
        return self.bool_expr()

    def block(self, depth, n, ind):
        scope = (len(self.ints), len(self.bools))
        out = []
        for _ in range(n):
            if self.budget <= 0:
                break
            out.extend(self.stmt(depth, ind))
        del self.ints[scope[0]:], self.bools[scope[1]:]
        return out

    def stmt(self, depth, ind):
        self.budget -= 1
        pad = "  " * ind
        r = self.rng.random()
        targets = [v for v in self.ints if not v.startswith("i")]
        if r < 0.35 and targets:
            return [f"{pad}{self.rng.choice(targets)} = {self.int_expr()};"]
        if r < 0.42 and self.bools:
            return [f"{pad}{self.rng.choice(self.bools)} = {self.bool_expr(1)};"]
        if r < 0.62 and depth > 0:
            out = [f"{pad}if ({self.bool_expr()}) {{"]
            out += self.block(depth - 1, self.rng.randint(1, 2), ind + 1)
            if self.rng.random() < 0.6:
                out.append(f"{pad}}} else {{")
                out += self.block(depth - 1, self.rng.randint(1, 2), ind + 1)
            out.append(f"{pad}}}")
            return out
        if r < 0.72 and depth > 0:
            i = f"i{self.loop_id}"
            self.loop_id += 1
            bound = self.rng.randint(1, 3)
            out = [f"{pad}int {i} = 0;", f"{pad}while ({i} < {bound}) {{"]
            out += self.block(depth - 1, self.rng.randint(1, 2), ind + 1)
            out += [f"{pad}  {i} = {i} + 1;", f"{pad}}}"]
            self.ints.append(i)  # readable after the loop, never assigned
            return out
        if r < 0.8:
            return [f"{pad}assume({self.bool_expr(1)});"]
        return [f"{pad}assert({self.assertion()});"]

    def program(self):
        rng = self.rng
        lines = []
        self.helper = rng.random() < 0.3
        if self.helper:
            lines += ["int helper(int p, int q) {",
                      "  if (p < q) {",
                      f"    return p + {self.lit()};",
                      "  }",
                      "  return q ^ p;",
                      "}", ""]
        lines.append("int main() {")
        for k in range(rng.randint(0, 3)):
            name = "abc"[k]
            if rng.random() < 0.2:
                lines.append(f"  bool {name} = nondet_bool();")
                self.bools.append(name)
            else:
                lines.append(f"  int {name} = nondet_int();")
                self.ints.append(name)
        for k in range(rng.randint(1, 2)):
            lines.append(f"  int t{k} = {self.int_expr(1)};")
            self.ints.append(f"t{k}")
        self.budget = rng.randint(3, 8)
        lines += self.block(2, 6, 1)
        lines.append(f"  assert({self.assertion()});")
        lines.append("  return 0;")
        lines.append("}")
        return "\n".join(lines) + "\n"


def generate(seed: int) -> str:
    return _Gen(random.Random(seed)).program()


def corpus(count=200, base_seed=20240601):
    return [(f"fuzz{base_seed + k}", generate(base_seed + k)) for k in range(count)]
