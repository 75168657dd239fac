"""Minimal symbolic kernel.

Expressions are immutable, hash-consed DAG nodes.  Constructors canonicalize
as they build (flattened sums and products, like terms collected, literal
zeros and ones removed), so two structurally equal expressions are the same
Python object.

Three kinds of symbols exist:

* coordinates (``x^mu`` of a chart),
* parameters (``M``, ``Lambda``, a family parameter ``s`` ...),
* jet symbols ``y^i_I``: the value of a field component ``i`` differentiated
  along the multi-index ``I``.

Differentiating with respect to a *coordinate* is a total derivative: jet
symbols advance to the next jet order.  Differentiating with respect to any
other symbol is an ordinary partial derivative.  The same ``diff`` therefore
serves both for explicit functions of the coordinates and for the formal
divergence on jet space.
"""

from __future__ import annotations

import math
import threading
import weakref
import zlib
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Expr",
    "Chart",
    "SymkerError",
    "ParseError",
    "UnknownSymbolError",
    "DomainError",
    "UnboundSymbolError",
    "const",
    "coord",
    "param",
    "jet",
    "ZERO",
    "ONE",
    "add",
    "mul",
    "power",
    "sqrt",
    "sin",
    "cos",
    "exp",
    "ln",
    "total",
    "product",
    "diff",
    "gradient",
    "subs",
    "simplify",
    "free_symbols",
    "parse",
    "to_text",
    "evaluate",
    "Evaluator",
    "count_nodes",
]


class SymkerError(Exception):
    """Base class for symbolic kernel errors."""


class ParseError(SymkerError):
    """Syntax error; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnknownSymbolError(SymkerError):
    def __init__(self, name: str, position: int | None = None):
        self.name = name
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown symbol {name!r}{where}")


class DomainError(SymkerError, ArithmeticError):
    """Pole, negative sqrt argument, non-positive log argument."""


class UnboundSymbolError(SymkerError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no value bound for symbol {name!r}")

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return self.args[0]


# ---------------------------------------------------------------------------
# node storage

CONST, SYM, ADD, MUL, FUNC = range(5)
_FUNCS = ("sin", "cos", "exp", "ln")

_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_lock = threading.Lock()


def _strhash(s: str) -> int:
    # str hashes are salted per process; term order must not be
    return zlib.crc32(s.encode())


class Expr:
    """A node of the expression DAG.  Build through the module constructors.

    ``op`` is one of CONST, SYM, ADD, MUL, FUNC.

    * CONST: ``val`` is a ``Fraction`` or ``float``.
    * SYM:   ``val`` is ``(kind, name, data)``.
    * ADD:   ``args`` are the non-constant terms, ``val`` is
      ``(constant, coefficients)``.
    * MUL:   ``args`` are the bases, ``val`` is ``(coefficient, exponents)``.
    * FUNC:  ``args`` is ``(argument,)``, ``val`` is the function name.
    """

    __slots__ = ("op", "args", "val", "_hash", "_diff", "__weakref__")

    def __init__(self, op, args, val, h):
        self.op = op
        self.args = args
        self.val = val
        self._hash = h
        self._diff = None

    def __hash__(self) -> int:
        return self._hash

    # identity is structural equality thanks to interning
    def __eq__(self, other) -> bool:
        return self is other

    def __ne__(self, other) -> bool:
        return self is not other

    def __reduce__(self):
        return (parse_tree, (_to_tree(self),))

    # arithmetic sugar -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return mul(self, power(other, -1))

    def __rtruediv__(self, other):
        return mul(other, power(self, -1))

    def __neg__(self):
        return mul(-1, self)

    def __pow__(self, e):
        return power(self, e)

    def __repr__(self) -> str:
        return f"Expr({to_text(self)})"

    __str__ = lambda self: to_text(self)  # noqa: E731

    # convenience -------------------------------------------------------------
    @property
    def is_const(self) -> bool:
        return self.op == CONST

    @property
    def is_zero(self) -> bool:
        return self.op == CONST and self.val[1] == 0

    @property
    def name(self) -> str:
        if self.op != SYM:
            raise AttributeError("only symbols have a name")
        return self.val[1]

    @property
    def kind(self) -> str:
        if self.op != SYM:
            raise AttributeError("only symbols have a kind")
        return self.val[0]

    def value(self):
        """Numeric value of a constant node."""
        if self.op != CONST:
            raise TypeError("not a constant")
        return self.val[1]


class _Key:
    """Intern-table key with a precomputed hash; children compare by
    identity."""

    __slots__ = ("h", "op", "args", "val")

    def __init__(self, h, op, args, val):
        self.h = h
        self.op = op
        self.args = args
        self.val = val

    def __hash__(self):
        return self.h

    def __eq__(self, o):
        if self.op != o.op or len(self.args) != len(o.args):
            return False
        for a, b in zip(self.args, o.args):
            if a is not b:
                return False
        return self.val == o.val


_NUMHASH: dict = {}


def _nh(v) -> int:
    """Hash of a number, memoized for Fractions (whose hash is slow)."""
    if type(v) is int:
        return v
    r = _NUMHASH.get(v)
    if r is None:
        r = hash(v)
        if len(_NUMHASH) < 100000:
            _NUMHASH[v] = r
    return r


def _intern(op, args, val, h) -> Expr:
    key = _Key(h, op, args, val)
    node = _table.get(key)
    if node is not None:
        return node
    with _lock:
        node = _table.get(key)
        if node is None:
            node = Expr(op, args, val, h)
            _table[key] = node
    return node


def _norm_number(v):
    # exact numbers are ints, or Fractions with a denominator > 1
    t = type(v)
    if t is int:
        return v
    if t is Fraction:
        return v.numerator if v.denominator == 1 else v
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, int):
        return int(v)
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else v
    if isinstance(v, float):
        if v.is_integer() and abs(v) < 2**53:
            return int(v)
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return _norm_number(float(v))
    raise TypeError(f"unsupported constant {v!r}")


def const(v) -> Expr:
    v = _norm_number(v)
    tag = 1 if type(v) is float else 0
    return _intern(CONST, (), (tag, v), hash((CONST, tag, v)))


ZERO = const(0)
ONE = const(1)
_MINUS_ONE = const(-1)


def _cval(e: Expr):
    return e.val[1]


def _sym(kind: str, name: str, data=None) -> Expr:
    h = hash((SYM, _strhash(kind), _strhash(name), hash(data)))
    return _intern(SYM, (), (kind, name, data), h)


def coord(name: str) -> Expr:
    return _sym("coord", name)


def param(name: str) -> Expr:
    return _sym("param", name)


def jet(field: str, comp: tuple, index: tuple = ()) -> Expr:
    """Jet symbol: component ``comp`` of ``field`` differentiated along the
    coordinate names in ``index`` (kept sorted)."""
    index = tuple(sorted(index))
    comp = tuple(comp)
    label = f"{field}{list(comp)}" + (f"_{','.join(index)}" if index else "")
    data = (field, comp, index)
    h = hash((SYM, _strhash("jet"), _strhash(label)))
    return _intern(SYM, (), ("jet", label, data), h)


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (Number, np.number)):
        return const(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def _num_mul(a, b):
    r = a * b
    return r if type(r) is int else _norm_number(r)


def _num_add(a, b):
    r = a + b
    return r if type(r) is int else _norm_number(r)


def _is_int(v) -> bool:
    return type(v) is int or (isinstance(v, Fraction) and v.denominator == 1)


def _is_exact(v) -> bool:
    return type(v) is int or isinstance(v, Fraction)


# ---------------------------------------------------------------------------
# canonical constructors

def _split_coeff(e: Expr):
    """e == c * rest with c numeric and rest non-numeric (or None)."""
    if e.op == MUL and e.val[0] != 1:
        c = e.val[0]
        rest = _make_mul(1, e.args, e.val[1])
        return c, rest
    return 1, e


def _make_add(c0, terms: dict) -> Expr:
    items = [(t, c) for t, c in terms.items() if c != 0]
    if not items:
        return const(c0)
    if c0 == 0 and len(items) == 1:
        t, c = items[0]
        return mul(c, t) if c != 1 else t
    items.sort(key=lambda tc: tc[0]._hash)
    args = tuple(t for t, _ in items)
    coeffs = tuple(c for _, c in items)
    h = hash((ADD, _nh(c0), tuple(map(_nh, coeffs)), tuple(a._hash for a in args)))
    return _intern(ADD, args, (c0, coeffs), h)


def total(xs: Iterable) -> Expr:
    """n-ary sum with like-term collection."""
    c0 = 0
    terms: dict = {}
    for x in xs:
        x = _as_expr(x)
        op = x.op
        if op == CONST:
            c0 = _num_add(c0, _cval(x))
        elif op == ADD:
            c0 = _num_add(c0, x.val[0])
            for t, c in zip(x.args, x.val[1]):
                terms[t] = _num_add(terms.get(t, 0), c)
        else:
            c, rest = _split_coeff(x)
            if rest.op == ADD:  # c * (a + b + ...) distributes
                c0 = _num_add(c0, _num_mul(c, rest.val[0]))
                for t, cc in zip(rest.args, rest.val[1]):
                    terms[t] = _num_add(terms.get(t, 0), _num_mul(c, cc))
            else:
                terms[rest] = _num_add(terms.get(rest, 0), c)
    return _make_add(c0, terms)


def add(*xs) -> Expr:
    return total(xs)


def _make_mul(coeff, bases: tuple, exps: tuple) -> Expr:
    if coeff == 0:
        return ZERO
    if not bases:
        return const(coeff)
    if coeff == 1 and len(bases) == 1 and exps[0] == 1:
        return bases[0]
    h = hash((MUL, _nh(coeff), tuple(map(_nh, exps)), tuple(b._hash for b in bases)))
    return _intern(MUL, bases, (coeff, exps), h)


def _pow_number(b, e):
    """b**e for numeric b and rational/float e; exact where possible."""
    if _is_exact(b) and _is_int(e):
        n = int(e)
        if b == 0 and n < 0:
            raise DomainError("division by zero")
        return _norm_number(Fraction(b) ** n)
    if _is_exact(b) and isinstance(e, Fraction) and b > 0:
        b = Fraction(b)
        # exact root when numerator and denominator are perfect powers
        q = e.denominator
        num = _int_root(b.numerator, q)
        den = _int_root(b.denominator, q)
        if num is not None and den is not None:
            return _norm_number(Fraction(num, den) ** e.numerator)
    bf, ef = float(b), float(e)
    if bf < 0 and not float(ef).is_integer():
        raise DomainError("fractional power of a negative number")
    if bf == 0 and ef < 0:
        raise DomainError("division by zero")
    return _norm_number(bf**ef)


def _int_root(n: int, q: int):
    if n < 0:
        return None
    r = round(n ** (1.0 / q))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**q == n:
            return cand
    return None


def product(xs: Iterable) -> Expr:
    """n-ary product with base/exponent collection."""
    coeff = 1
    facs: dict = {}
    for x in xs:
        x = _as_expr(x)
        op = x.op
        if op == CONST:
            coeff = _num_mul(coeff, _cval(x))
            if coeff == 0:
                return ZERO
        elif op == MUL:
            coeff = _num_mul(coeff, x.val[0])
            for b, e in zip(x.args, x.val[1]):
                facs[b] = _num_add(facs.get(b, 0), e)
        else:
            facs[x] = _num_add(facs.get(x, 0), 1)
    if coeff == 0:
        return ZERO
    items = [(b, e) for b, e in facs.items() if e != 0]
    items.sort(key=lambda be: be[0]._hash)
    bases = tuple(b for b, _ in items)
    exps = tuple(e for _, e in items)
    return _make_mul(coeff, bases, exps)


def mul(*xs) -> Expr:
    return product(xs)


def power(b, e) -> Expr:
    """b**e with a constant exponent."""
    b = _as_expr(b)
    if isinstance(e, Expr):
        if e.op != CONST:
            raise SymkerError("exponent must be a constant")
        e = _cval(e)
    e = _norm_number(e)
    if e == 0:
        return ONE
    if e == 1:
        return b
    if b.op == CONST:
        return const(_pow_number(_cval(b), e))
    if b.op == MUL:
        if _is_int(e):
            coeff = _pow_number(b.val[0], e)
            items = [(bb, _num_mul(ee, e)) for bb, ee in zip(b.args, b.val[1])]
            items.sort(key=lambda be: be[0]._hash)
            return _make_mul(coeff, tuple(x for x, _ in items), tuple(x for _, x in items))
        if len(b.args) == 1 and b.val[0] == 1 and not _is_int(b.val[1][0]):
            # (x^p)^q with p non-integer: x^p >= 0 wherever it is real
            return _make_mul(1, b.args, (_num_mul(b.val[1][0], e),))
    return _make_mul(1, (b,), (e,))


def sqrt(x) -> Expr:
    return power(x, Fraction(1, 2))


def _func(name: str, x) -> Expr:
    x = _as_expr(x)
    if x.op == CONST:
        v = _cval(x)
        if name == "sin":
            return ZERO if v == 0 else const(math.sin(v))
        if name == "cos":
            return ONE if v == 0 else const(math.cos(v))
        if name == "exp":
            return ONE if v == 0 else const(math.exp(v))
        if name == "ln":
            if v <= 0:
                raise DomainError("log of a non-positive number")
            return ZERO if v == 1 else const(math.log(v))
    if name == "ln" and x.op == FUNC and x.val == "exp":
        return x.args[0]
    h = hash((FUNC, _strhash(name), x._hash))
    return _intern(FUNC, (x,), name, h)


def sin(x) -> Expr:
    return _func("sin", x)


def cos(x) -> Expr:
    return _func("cos", x)


def exp(x) -> Expr:
    return _func("exp", x)


def ln(x) -> Expr:
    return _func("ln", x)


def simplify(e: Expr) -> Expr:
    """Rebuild through the canonical constructors.

    Construction already canonicalizes, so this mostly re-collects terms
    whose children changed shape after substitution.  Value preserving and
    idempotent.
    """
    memo: dict = {}

    def go(n: Expr) -> Expr:
        r = memo.get(n)
        if r is not None:
            return r
        if n.op in (CONST, SYM):
            r = n
        elif n.op == ADD:
            r = total([const(n.val[0])] + [mul(c, go(t)) for t, c in zip(n.args, n.val[1])])
        elif n.op == MUL:
            r = product([const(n.val[0])] + [power(go(b), x) for b, x in zip(n.args, n.val[1])])
        else:
            r = _func(n.val, go(n.args[0]))
        memo[n] = r
        return r

    return _iterative(e, go)


def _iterative(root: Expr, fn):
    """Apply a memoized recursive rebuild without blowing the C stack:
    warm the memo bottom-up first."""
    for n in _toposort([root]):
        fn(n)
    return fn(root)


def _toposort(roots: Sequence[Expr]) -> list:
    """Children before parents, each node once."""
    seen = set()
    order = []
    stack = [(r, False) for r in reversed(list(roots))]
    while stack:
        n, done = stack.pop()
        if done:
            order.append(n)
            continue
        i = id(n)
        if i in seen:
            continue
        seen.add(i)
        stack.append((n, True))
        for a in n.args:
            if id(a) not in seen:
                stack.append((a, False))
    return order


def count_nodes(*roots: Expr) -> int:
    return len(_toposort(roots))


def free_symbols(*roots: Expr, kind: str | None = None) -> set:
    out = set()
    for n in _toposort(roots):
        if n.op == SYM and (kind is None or n.val[0] == kind):
            out.add(n)
    return out


# ---------------------------------------------------------------------------
# differentiation

def _is_coord(v: Expr) -> bool:
    return v.op == SYM and v.val[0] == "coord"


def _diff_leaf(n: Expr, v: Expr) -> Expr:
    if n is v:
        return ONE
    if n.op == SYM and n.val[0] == "jet" and _is_coord(v):
        fieldname, comp, index = n.val[2]
        return jet(fieldname, comp, index + (v.val[1],))
    return ZERO


def diff(e, var) -> Expr:
    """Exact derivative of ``e`` with respect to symbol ``var``.

    For a coordinate this is the total derivative (jet symbols advance);
    otherwise a partial derivative holding every other symbol fixed.
    ``var`` may be given as a coordinate name.
    """
    e = _as_expr(e)
    if isinstance(var, str):
        var = coord(var)
    if var.op != SYM:
        raise SymkerError("can only differentiate with respect to a symbol")
    for n in _toposort([e]):
        d = n._diff
        if d is not None and var in d:
            continue
        r = _diff_node(n, var)
        if n._diff is None:
            n._diff = {}
        n._diff[var] = r
    return e._diff[var]


def _d(n: Expr, v: Expr) -> Expr:
    return n._diff[v]


def _diff_node(n: Expr, v: Expr) -> Expr:
    op = n.op
    if op == CONST:
        return ZERO
    if op == SYM:
        return _diff_leaf(n, v)
    if op == ADD:
        return total(mul(c, _d(t, v)) for t, c in zip(n.args, n.val[1]))
    if op == MUL:
        coeff, exps = n.val
        bases = n.args
        out = []
        for i, (b, x) in enumerate(zip(bases, exps)):
            db = _d(b, v)
            if db.is_zero:
                continue
            # d(b^x) = x b^(x-1) db, the other factors unchanged
            facs = [const(coeff * x), db]
            for j, (bb, xx) in enumerate(zip(bases, exps)):
                facs.append(power(bb, xx - 1) if j == i else power(bb, xx))
            out.append(product(facs))
        return total(out)
    # FUNC
    a = n.args[0]
    da = _d(a, v)
    if da.is_zero:
        return ZERO
    name = n.val
    if name == "sin":
        return mul(cos(a), da)
    if name == "cos":
        return mul(-1, sin(a), da)
    if name == "exp":
        return mul(n, da)
    return mul(power(a, -1), da)  # ln


def gradient(e: Expr, variables: Sequence[Expr]) -> dict:
    """Partial derivatives of ``e`` with respect to many symbols at once
    (reverse accumulation over the DAG).  Coordinates are not allowed here:
    this is the jet-space partial gradient."""
    wanted = set(variables)
    if any(_is_coord(v) for v in wanted):
        raise SymkerError("gradient takes non-coordinate symbols only")
    order = _toposort([e])
    # prune nodes that do not depend on any wanted symbol
    dep: dict = {}
    for n in order:
        if n.op == SYM:
            dep[id(n)] = n in wanted
        elif n.op == CONST:
            dep[id(n)] = False
        else:
            dep[id(n)] = any(dep[id(a)] for a in n.args)
    adj: dict = {id(e): [ONE]}
    for n in reversed(order):
        parts = adj.pop(id(n), None)
        if parts is None or not dep[id(n)]:
            if n.op == SYM and parts is not None:
                adj[id(n)] = parts
            continue
        if n.op == SYM:
            adj[id(n)] = parts
            continue
        g = total(parts)
        if g.is_zero:
            continue
        if n.op == ADD:
            for t, c in zip(n.args, n.val[1]):
                if dep[id(t)]:
                    adj.setdefault(id(t), []).append(mul(c, g))
        elif n.op == MUL:
            coeff, exps = n.val
            for i, (b, x) in enumerate(zip(n.args, exps)):
                if not dep[id(b)]:
                    continue
                facs = [g, const(coeff * x)]
                for j, (bb, xx) in enumerate(zip(n.args, exps)):
                    facs.append(power(bb, xx - 1) if j == i else power(bb, xx))
                adj.setdefault(id(b), []).append(product(facs))
        else:
            a = n.args[0]
            if n.val == "sin":
                da = cos(a)
            elif n.val == "cos":
                da = mul(-1, sin(a))
            elif n.val == "exp":
                da = n
            else:
                da = power(a, -1)
            adj.setdefault(id(a), []).append(mul(g, da))
    out = {}
    for v in variables:
        parts = adj.get(id(v))
        out[v] = total(parts) if parts else ZERO
    return out


def subs(e: Expr, mapping: Mapping) -> Expr:
    """Replace symbols by expressions (or numbers)."""
    e = _as_expr(e)
    m = {k if isinstance(k, Expr) else coord(k): _as_expr(v) for k, v in mapping.items()}
    memo: dict = {}
    for n in _toposort([e]):
        if n.op == CONST:
            r = n
        elif n.op == SYM:
            r = m.get(n, n)
        elif n.op == ADD:
            if all(memo[id(a)] is a for a in n.args):
                r = n
            else:
                r = total([const(n.val[0])] + [mul(c, memo[id(t)]) for t, c in zip(n.args, n.val[1])])
        elif n.op == MUL:
            if all(memo[id(a)] is a for a in n.args):
                r = n
            else:
                r = product([const(n.val[0])] + [power(memo[id(b)], x) for b, x in zip(n.args, n.val[1])])
        else:
            a = memo[id(n.args[0])]
            r = n if a is n.args[0] else _func(n.val, a)
        memo[id(n)] = r
    return memo[id(e)]


# ---------------------------------------------------------------------------
# charts

@dataclass(frozen=True)
class Chart:
    """An m-dimensional coordinate patch.

    ``ranges`` gives per-coordinate sampling boxes used by the numeric
    spot checks; ``signature`` is the sign of det(g) for metrics on this
    chart (-1 Lorentzian, +1 Riemannian).
    """

    coords: tuple
    signature: int = -1
    ranges: tuple | None = None
    name: str = ""

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) < 1:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(coords)) != len(coords):
            raise ValueError("coordinate names must be distinct")
        for c in coords:
            if not c.isidentifier():
                raise ValueError(f"bad coordinate name {c!r}")
        if self.ranges is not None:
            rng = tuple(tuple(map(float, r)) for r in self.ranges)
            if len(rng) != len(coords):
                raise ValueError("one sampling range per coordinate")
            object.__setattr__(self, "ranges", rng)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def symbols(self) -> tuple:
        return tuple(coord(c) for c in self.coords)

    def index(self, name: str) -> int:
        return self.coords.index(name)

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        """Random points inside the sampling box, shape (n, m)."""
        box = self.ranges or tuple((0.5, 1.5) for _ in self.coords)
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        return lo + (hi - lo) * rng.random((n, self.dim))


# ---------------------------------------------------------------------------
# parsing

_KNOWN_CONSTANTS = {"pi": math.pi}


@dataclass
class _Tok:
    kind: str  # num, id, op, end
    text: str
    pos: int


def _tokenize(text: str) -> list:
    toks = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            toks.append(_Tok("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("id", text[i:j], i))
            i = j
            continue
        if ch in "+-*/^(),":
            toks.append(_Tok("op", ch, i))
            i += 1
            continue
        if ch == "*" and i + 1 < n and text[i + 1] == "*":
            toks.append(_Tok("op", "^", i))
            i += 2
            continue
        raise ParseError(f"unexpected character {ch!r}", i, text)
    toks.append(_Tok("end", "", n))
    return toks


_BINARY = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30  # binds tighter than * but looser than ^: -x^2 == -(x^2)


class _Parser:
    """Pratt parser for the field-file expression grammar."""

    def __init__(self, text: str, names: Mapping[str, Expr]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.names = names

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, s: str) -> _Tok:
        t = self.next()
        if t.text != s:
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ParseError(f"expected {s!r}, found {found}", t.pos, self.text)
        return t

    def parse(self) -> Expr:
        e = self.expr(0)
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"unexpected {t.text!r}", t.pos, self.text)
        return e

    def expr(self, rbp: int) -> Expr:
        left = self.nud(self.next())
        while True:
            t = self.peek()
            if t.kind != "op" or t.text not in _BINARY:
                break
            lbp = _BINARY[t.text]
            if lbp <= rbp:
                break
            self.next()
            if t.text == "^":
                right = self.expr(lbp - 1)  # right associative
                if right.op != CONST:
                    raise ParseError("exponent must be a constant", t.pos, self.text)
                left = power(left, right)
            else:
                right = self.expr(lbp)
                if t.text == "+":
                    left = add(left, right)
                elif t.text == "-":
                    left = add(left, mul(-1, right))
                elif t.text == "*":
                    left = mul(left, right)
                else:
                    left = mul(left, power(right, -1))
        return left

    def nud(self, t: _Tok) -> Expr:
        if t.kind == "num":
            try:
                return const(Fraction(t.text))
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"bad number {t.text!r}", t.pos, self.text) from None
        if t.kind == "op" and t.text == "(":
            e = self.expr(0)
            self.expect(")")
            return e
        if t.kind == "op" and t.text in "+-":
            e = self.expr(_UNARY_BP)
            return e if t.text == "+" else mul(-1, e)
        if t.kind == "id":
            if self.peek().text == "(":
                return self.call(t)
            if t.text in self.names:
                return self.names[t.text]
            if t.text in _KNOWN_CONSTANTS:
                return const(_KNOWN_CONSTANTS[t.text])
            raise UnknownSymbolError(t.text, t.pos)
        if t.kind == "end":
            raise ParseError("unexpected end of input", t.pos, self.text)
        raise ParseError(f"unexpected {t.text!r}", t.pos, self.text)

    def call(self, t: _Tok) -> Expr:
        self.expect("(")
        name = t.text
        if name == "d":
            # derivative marker, resolved right away
            e = self.expr(0)
            self.expect(",")
            v = self.next()
            if v.kind != "id":
                raise ParseError("expected a symbol name", v.pos, self.text)
            if v.text not in self.names:
                raise UnknownSymbolError(v.text, v.pos)
            self.expect(")")
            return diff(e, self.names[v.text])
        arg = self.expr(0)
        self.expect(")")
        if name == "sqrt":
            return sqrt(arg)
        if name in ("sin", "cos", "exp"):
            return _func(name, arg)
        if name in ("ln", "log"):
            return ln(arg)
        raise UnknownSymbolError(name, t.pos)


def parse(text: str, chart: Chart | Sequence[str] | None = None, params: Iterable[str] = ()) -> Expr:
    """Parse an expression string over a chart's coordinates and parameters.

    Grammar (EBNF)::

        expr    = term { ("+" | "-") term } ;
        term    = unary { ("*" | "/") unary } ;
        unary   = ("+" | "-") unary | power ;
        power   = atom [ "^" unary ] ;          (* exponent must be constant *)
        atom    = number | name | call | "(" expr ")" ;
        call    = func "(" expr ")" | "d" "(" expr "," name ")" ;
        func    = "sin" | "cos" | "sqrt" | "exp" | "ln" ;
        number  = digits [ "." digits ] [ ("e" | "E") [sign] digits ] ;

    ``pi`` is a predefined constant.  ``d(e, x)`` is the derivative marker.
    """
    if chart is None:
        coords: Sequence[str] = ()
    elif isinstance(chart, Chart):
        coords = chart.coords
    else:
        coords = tuple(chart)
    names = {c: coord(c) for c in coords}
    for p in params:
        if p in names:
            raise ValueError(f"parameter {p!r} clashes with a coordinate")
        names[p] = param(p)
    return _Parser(text, names).parse()


def parse_tree(tree):
    """Rebuild from the nested tuple form produced for pickling."""
    tag = tree[0]
    if tag == "c":
        return const(tree[1])
    if tag == "s":
        kind, name, data = tree[1]
        if kind == "jet":
            return jet(*data)
        return _sym(kind, name, data)
    if tag == "+":
        return total([const(tree[1])] + [mul(c, parse_tree(t)) for c, t in tree[2]])
    if tag == "*":
        return product([const(tree[1])] + [power(parse_tree(b), x) for b, x in tree[2]])
    return _func(tree[1], parse_tree(tree[2]))


def _to_tree(e: Expr):
    if e.op == CONST:
        return ("c", _cval(e))
    if e.op == SYM:
        return ("s", e.val)
    if e.op == ADD:
        return ("+", e.val[0], tuple((c, _to_tree(t)) for t, c in zip(e.args, e.val[1])))
    if e.op == MUL:
        return ("*", e.val[0], tuple((_to_tree(b), x) for b, x in zip(e.args, e.val[1])))
    return ("f", e.val, _to_tree(e.args[0]))


# ---------------------------------------------------------------------------
# printing

def _num_text(v) -> str:
    if type(v) is int:
        return str(v)
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))


def to_text(e: Expr) -> str:
    """Render in the parser's grammar; re-parsing gives the same value."""
    memo: dict = {}

    def atom(s: str, e: Expr) -> str:
        simple = e.op == SYM or e.op == FUNC or (e.op == CONST and _cval(e) >= 0 and (
            not isinstance(_cval(e), Fraction) or _cval(e).denominator == 1))
        if e.op == MUL and e.val[0] == 1 and len(e.args) == 1 and e.val[1][0] == Fraction(1, 2):
            simple = True
        return s if simple else f"({s})"

    def go(n: Expr) -> str:
        r = memo.get(id(n))
        if r is not None:
            return r
        if n.op == CONST:
            r = _num_text(_cval(n))
        elif n.op == SYM:
            r = n.val[1]
        elif n.op == FUNC:
            r = f"{n.val}({go(n.args[0])})"
        elif n.op == ADD:
            parts = []
            for t, c in zip(n.args, n.val[1]):
                body = go(t)
                if c == 1:
                    parts.append(("+", body))
                elif c == -1:
                    parts.append(("-", atom(body, t) if t.op == ADD else body))
                else:
                    sgn = "-" if c < 0 else "+"
                    parts.append((sgn, f"{_num_text(abs(c))}*{atom(body, t)}"))
            if n.val[0] != 0:
                c0 = n.val[0]
                parts.append(("-" if c0 < 0 else "+", _num_text(abs(c0))))
            s = parts[0][1] if parts[0][0] == "+" else "-" + parts[0][1]
            for sgn, body in parts[1:]:
                s += f" {sgn} {body}"
            r = s
        else:  # MUL
            coeff, exps = n.val
            num, den = [], []
            for b, x in zip(n.args, exps):
                base = go(b)
                if x == Fraction(1, 2):
                    num.append(f"sqrt({base})")
                elif x == Fraction(-1, 2):
                    den.append(f"sqrt({base})")
                elif x == 1:
                    num.append(atom(base, b))
                elif x == -1:
                    den.append(atom(base, b))
                elif x < 0:
                    den.append(f"{atom(base, b)}^{_exp_text(-x)}")
                else:
                    num.append(f"{atom(base, b)}^{_exp_text(x)}")
            sign = ""
            c = coeff
            if c < 0:
                sign, c = "-", -c
            if c != 1 or not num:
                num.insert(0, _num_text(c) if isinstance(c, float) or c.denominator == 1 else f"({_num_text(c)})")
            s = "*".join(num)
            if den:
                s += "/" + (den[0] if len(den) == 1 else "(" + "*".join(den) + ")")
            r = sign + s
        memo[id(n)] = r
        return r

    for n in _toposort([e]):
        go(n)
    return go(e)


def _exp_text(x) -> str:
    if _is_int(x) and x >= 0:
        return str(int(x))
    return f"({_num_text(x)})"


# ---------------------------------------------------------------------------
# evaluation

class Evaluator:
    """Compiled, vectorized evaluator for a set of root expressions.

    Values bound to symbols may be scalars or equally shaped numpy arrays;
    every root evaluates to an array of the broadcast shape.
    """

    def __init__(self, roots: Sequence[Expr]):
        self.roots = [_as_expr(r) for r in roots]
        self.order = _toposort(self.roots)
        self.slot = {id(n): i for i, n in enumerate(self.order)}
        self.symbols = [n for n in self.order if n.op == SYM]
        slot = self.slot
        prog = []
        for n in self.order:
            op = n.op
            if op == CONST:
                prog.append((0, float(_cval(n))))
            elif op == SYM:
                prog.append((1, n.val[1]))
            elif op == ADD:
                terms = tuple((slot[id(t)], None if c == 1 else float(c)) for t, c in zip(n.args, n.val[1]))
                prog.append((2, float(n.val[0]), terms))
            elif op == MUL:
                coeff, exps = n.val
                facs = []
                for bb, x in zip(n.args, exps):
                    if x == 1:
                        kind = 0
                    elif x == 2:
                        kind = 1
                    elif x == -1:
                        kind = 2
                    elif x == Fraction(1, 2):
                        kind = 3
                    elif x == Fraction(-1, 2):
                        kind = 4
                    else:
                        kind = 5
                    facs.append((slot[id(bb)], kind, x < 0, not _is_int(x), float(x)))
                prog.append((3, float(coeff), tuple(facs)))
            else:
                prog.append((4, n.val, slot[id(n.args[0])]))
        self.prog = prog
        self.out = [slot[id(r)] for r in self.roots]

    def __call__(self, values: Mapping, check: bool = True):
        vals: list = [None] * len(self.prog)
        lookup = {}
        for k, v in values.items():
            if isinstance(k, str):
                lookup[k] = v
            else:
                lookup[k.val[1]] = v
        sqrt_, power_ = np.sqrt, np.power
        with np.errstate(all="ignore"):
            for i, ins in enumerate(self.prog):
                kind = ins[0]
                if kind == 3:
                    acc = ins[1]
                    for j, fk, neg, frac, x in ins[2]:
                        v = vals[j]
                        if fk == 0:
                            acc = acc * v
                        elif fk == 1:
                            acc = acc * (v * v)
                        else:
                            if check and (neg or frac):
                                _check_pow(v, neg, frac)
                            if fk == 2:
                                acc = acc / v
                            elif fk == 3:
                                acc = acc * sqrt_(v)
                            elif fk == 4:
                                acc = acc / sqrt_(v)
                            else:
                                acc = acc * power_(v, x)
                    vals[i] = acc
                elif kind == 2:
                    acc = ins[1]
                    for j, c in ins[2]:
                        acc = acc + (vals[j] if c is None else c * vals[j])
                    vals[i] = acc
                elif kind == 0:
                    vals[i] = ins[1]
                elif kind == 1:
                    try:
                        vals[i] = lookup[ins[1]]
                    except KeyError:
                        raise UnboundSymbolError(ins[1]) from None
                else:
                    v = vals[ins[2]]
                    name = ins[1]
                    if name == "sin":
                        vals[i] = np.sin(v)
                    elif name == "cos":
                        vals[i] = np.cos(v)
                    elif name == "exp":
                        vals[i] = np.exp(v)
                    else:
                        if check and np.any(np.real(v) <= 0):
                            raise DomainError("log of a non-positive number")
                        vals[i] = np.log(v)
        return [vals[j] for j in self.out]


def _check_pow(v, neg: bool, frac: bool):
    a = np.real(v)
    if neg and np.any(a == 0):
        raise DomainError("division by zero")
    if frac and np.any(a < 0):
        raise DomainError("fractional power of a negative number")


def evaluate(e, point: Mapping | None = None, params: Mapping | None = None, **kw):
    """Evaluate at a point.  ``point`` and ``params`` map names (or symbols)
    to numbers or arrays; keyword arguments are merged in as well."""
    values = {}
    for m in (point or {}), (params or {}), kw:
        values.update(m)
    out = Evaluator([_as_expr(e)])(values)[0]
    if np.ndim(out) == 0:
        out = float(out)
        if not math.isfinite(out):
            raise DomainError("non-finite result")
    return out
