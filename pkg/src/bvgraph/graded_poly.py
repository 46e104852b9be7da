"""Graded-commutative polynomials with exact rational coefficients.

Every generator carries an integer degree; its parity is the degree mod 2.
Monomials are stored in normal order (sorted by ``(degree, name)``), so two
polynomials are equal exactly when their term dictionaries agree.  Odd
generators square to zero and anticommute with each other.
"""
from __future__ import annotations

import json
import re
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping, Sequence, Union

from .errors import ParityError, UnknownGeneratorError, ValidationError

Number = Union[int, Fraction]


def _natural_key(name: str) -> tuple:
    parts = re.split(r"(\d+)", name)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts))


class Generator:
    """A named generator of fixed integer degree."""

    __slots__ = ("name", "degree", "odd", "key", "_hash")

    def __init__(self, name: str, degree: int):
        if not isinstance(name, str) or not name:
            raise ValidationError("generator name must be a non-empty string")
        if isinstance(degree, bool) or not isinstance(degree, int):
            raise ValidationError(f"degree of {name!r} must be an integer")
        self.name = name
        self.degree = degree
        self.odd = degree % 2 == 1
        self.key = (degree, _natural_key(name), name)
        self._hash = hash(self.key)

    def __eq__(self, other):
        return isinstance(other, Generator) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "Generator"):
        return self.key < other.key

    def __repr__(self):
        return f"Generator({self.name!r}, {self.degree})"

    def __reduce__(self):
        return (Generator, (self.name, self.degree))


Monomial = tuple  # tuple of (Generator, exponent) pairs in normal order


def _clean(c) -> Number:
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, int):
        return c
    if isinstance(c, Rational):
        return _clean(Fraction(c))
    raise ValidationError(f"coefficient {c!r} is not an exact rational")


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` (or an int) into a Fraction, rejecting floats."""
    if isinstance(text, bool):
        raise ValidationError("boolean is not a rational")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, str) and re.fullmatch(r"\s*[-+]?\d+(\s*/\s*[-+]?\d+)?\s*", text):
        try:
            return Fraction(text.replace(" ", ""))
        except ZeroDivisionError:
            raise ValidationError(f"zero denominator in {text!r}") from None
    raise ValidationError(f"cannot parse rational from {text!r}")


def format_rational(c) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


def koszul_sign(factors: Sequence[Generator]) -> int:
    """Sign of sorting ``factors`` into normal order; 0 if an odd factor repeats."""
    odd = [g for g in factors if g.odd]
    inversions = 0
    for i, a in enumerate(odd):
        for b in odd[i + 1:]:
            if a == b:
                return 0
            if b.key < a.key:
                inversions += 1
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=1 << 18)
def mono_mul(a: Monomial, b: Monomial):
    """Product of two normal-ordered monomials as ``(sign, monomial)``.

    The sign is 0 when an odd generator appears in both factors.
    """
    if not a:
        return 1, b
    if not b:
        return 1, a
    odd_left = sum(1 for g, _ in a if g.odd)
    flips = 0
    out = []
    i = j = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        ga, ea = a[i]
        gb, eb = b[j]
        if ga.key < gb.key:
            out.append(a[i])
            if ga.odd:
                odd_left -= 1
            i += 1
        elif gb.key < ga.key:
            out.append(b[j])
            if gb.odd:
                flips += odd_left
            j += 1
        else:
            if ga.odd:
                return 0, ()
            out.append((ga, ea + eb))
            i += 1
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return (-1 if flips % 2 else 1), tuple(out)


def mono_degree(m: Monomial) -> int:
    return sum(g.degree * e for g, e in m)


def mono_parity(m: Monomial) -> int:
    return sum(e for g, e in m if g.odd) % 2


def mono_order(m: Monomial) -> int:
    """Number of generator factors, counted with multiplicity."""
    return sum(e for _, e in m)


def _mono_sort_key(m: Monomial):
    return (mono_order(m), tuple((g.key, e) for g, e in m))


class GradedPoly:
    """A finite sum of normal-ordered monomials with rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        self.terms = {m: _clean(c) for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def _raw(cls, terms: dict) -> "GradedPoly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    # constructors
    @classmethod
    def const(cls, c) -> "GradedPoly":
        return cls({(): c})

    @classmethod
    def gen(cls, g: Generator, exponent: int = 1) -> "GradedPoly":
        if exponent < 0:
            raise ValidationError("negative exponent")
        if exponent == 0:
            return cls.const(1)
        if g.odd and exponent > 1:
            return cls()
        return cls._raw({((g, exponent),): 1})

    @classmethod
    def lift(cls, x) -> "GradedPoly":
        return x if isinstance(x, GradedPoly) else cls.const(x)

    # basic queries
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __iter__(self):
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def coefficient(self, mono: Monomial) -> Number:
        return self.terms.get(mono, 0)

    def constant_term(self) -> Number:
        return self.terms.get((), 0)

    def generators(self) -> set:
        return {g for m in self.terms for g, _ in m}

    def degrees(self) -> set:
        return {mono_degree(m) for m in self.terms}

    def degree(self) -> int | None:
        """Z-degree if homogeneous (None for zero or inhomogeneous)."""
        ds = self.degrees()
        return ds.pop() if len(ds) == 1 else None

    def parity(self) -> int | None:
        ps = {mono_parity(m) for m in self.terms}
        if not ps:
            return None
        return ps.pop() if len(ps) == 1 else None

    def orders(self) -> set:
        return {mono_order(m) for m in self.terms}

    def homogeneous_parts(self) -> dict:
        parts: dict[int, dict] = {}
        for m, c in self.terms.items():
            parts.setdefault(mono_degree(m), {})[m] = c
        return {d: GradedPoly._raw(t) for d, t in sorted(parts.items())}

    def parity_parts(self) -> dict:
        parts: dict[int, dict] = {}
        for m, c in self.terms.items():
            parts.setdefault(mono_parity(m), {})[m] = c
        return {d: GradedPoly._raw(t) for d, t in sorted(parts.items())}

    def filter(self, pred) -> "GradedPoly":
        return GradedPoly._raw({m: c for m, c in self.terms.items() if pred(m)})

    # arithmetic
    def __eq__(self, other):
        if isinstance(other, GradedPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == ({(): other} if other != 0 else {})
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __neg__(self):
        return GradedPoly._raw({m: -c for m, c in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, GradedPoly):
            if isinstance(other, (int, Fraction)):
                other = GradedPoly.const(other)
            else:
                return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = _clean(v)
            else:
                out.pop(m, None)
        return GradedPoly._raw(out)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, (GradedPoly, int, Fraction)):
            return NotImplemented
        return self + (-GradedPoly.lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "GradedPoly":
        c = _clean(c)
        if c == 0:
            return GradedPoly()
        return GradedPoly._raw({m: _clean(v * c) for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, GradedPoly):
            return NotImplemented
        out: dict = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                s, m = mono_mul(ma, mb)
                if s:
                    v = out.get(m, 0) + s * ca * cb
                    if v:
                        out[m] = v
                    else:
                        del out[m]
        return GradedPoly._raw({m: _clean(c) for m, c in out.items()})

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValidationError("exponent must be a non-negative integer")
        result = GradedPoly.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # calculus
    def derive(self, g: Generator) -> "GradedPoly":
        return derive(self, g)

    def substitute(self, bindings) -> "GradedPoly":
        return substitute(self, bindings)

    # presentation
    def to_text(self) -> str:
        return to_text(self)

    def to_json(self) -> dict:
        return to_json(self)

    def __repr__(self):
        return f"GradedPoly({to_text(self)})"

    def __str__(self):
        return to_text(self)


PolyLike = Union[GradedPoly, int, Fraction]


def lift(x) -> GradedPoly:
    return GradedPoly.lift(x)


def gens(spec: str | Iterable[str], degree: int) -> list[Generator]:
    names = spec.split() if isinstance(spec, str) else list(spec)
    return [Generator(n, degree) for n in names]


def _resolve(factor, registry: Mapping[str, Generator] | None) -> Generator:
    if isinstance(factor, Generator):
        return factor
    if isinstance(factor, str):
        if registry is None or factor not in registry:
            raise UnknownGeneratorError(factor)
        return registry[factor]
    raise ValidationError(f"bad factor {factor!r}")


def normalize(raw: Iterable, registry: Mapping[str, Generator] | None = None) -> GradedPoly:
    """Build a polynomial from ``(coefficient, factors)`` pairs.

    Factors are generators, registered names, or ``(factor, exponent)``
    pairs, in the order they are multiplied.  The result is in normal order
    with the Koszul sign of the reordering applied.
    """
    out = GradedPoly()
    for coeff, factors in raw:
        c = _clean(parse_rational(coeff) if isinstance(coeff, str) else coeff)
        flat: list[Generator] = []
        for f in factors:
            if isinstance(f, (tuple, list)):
                g, e = _resolve(f[0], registry), f[1]
                if not isinstance(e, int) or e < 0:
                    raise ValidationError(f"bad exponent {e!r} for {g.name!r}")
            else:
                g, e = _resolve(f, registry), 1
            if g.odd and e > 1:
                flat = None
                break
            flat.extend([g] * e)
        if flat is None:
            continue
        sign = koszul_sign(flat)
        if sign == 0:
            continue
        merged: dict[Generator, int] = {}
        for g in sorted(flat, key=lambda g: g.key):
            merged[g] = merged.get(g, 0) + 1
        mono = tuple(merged.items())
        out = out + GradedPoly._raw({mono: sign * c}) if c else out
    return out


def mul(p: PolyLike, q: PolyLike) -> GradedPoly:
    return lift(p) * lift(q)


def derive(p: PolyLike, g: Generator) -> GradedPoly:
    """Left derivative: moves ``g`` to the front, then differentiates."""
    p = lift(p)
    out: dict = {}
    for m, c in p.terms.items():
        odd_before = 0
        for idx, (h, e) in enumerate(m):
            if h == g:
                sign = -1 if (g.odd and odd_before % 2) else 1
                if e == 1:
                    nm = m[:idx] + m[idx + 1:]
                else:
                    nm = m[:idx] + ((h, e - 1),) + m[idx + 1:]
                v = out.get(nm, 0) + sign * e * c
                if v:
                    out[nm] = v
                else:
                    out.pop(nm, None)
                break
            if h.odd:
                odd_before += e
            if h.key > g.key:
                break
    return GradedPoly._raw({m: _clean(c) for m, c in out.items()})


def berezin(p: PolyLike, odd_gens: Sequence[Generator]) -> GradedPoly:
    """Berezin integral, with ``odd_gens[0]`` as the innermost measure.

    Normalization: the integral of ``g`` against ``dg`` is 1, so
    ``berezin(g1*g2, [g1, g2]) == 1``.
    """
    for g in odd_gens:
        if not g.odd:
            raise ParityError(f"cannot Berezin-integrate over even generator {g.name!r}")
    out = lift(p)
    for g in odd_gens:
        out = derive(out, g)
    return out


def evaluate_at_zero(p: PolyLike, generators: Iterable[Generator]) -> GradedPoly:
    """Set the given generators to zero."""
    gs = set(generators)
    return lift(p).filter(lambda m: not any(g in gs for g, _ in m))


def substitute(p: PolyLike, bindings: Mapping[Generator, PolyLike]) -> GradedPoly:
    """Apply the graded algebra map sending each bound generator to its value.

    Values must have the parity of the generator they replace.
    """
    p = lift(p)
    vals = {}
    for g, v in bindings.items():
        if not isinstance(g, Generator):
            raise ValidationError(f"binding key {g!r} is not a generator")
        v = lift(v)
        par = v.parity()
        if v and (par is None or par != (1 if g.odd else 0)):
            raise ParityError(f"binding for {g.name!r} does not preserve parity")
        vals[g] = v
    if not vals:
        return p
    powers: dict = {}

    def power(g, e):
        key = (g, e)
        if key not in powers:
            powers[key] = vals[g] ** e
        return powers[key]

    out = GradedPoly()
    for m, c in p.terms.items():
        if not any(g in vals for g, _ in m):
            out = out + GradedPoly._raw({m: c})
            continue
        term = GradedPoly.const(c)
        for g, e in m:
            term = term * (power(g, e) if g in vals else GradedPoly._raw({((g, e),): 1}))
            if not term:
                break
        out = out + term
    return out


def rename(p: PolyLike, mapping: Mapping[Generator, Generator]) -> GradedPoly:
    return substitute(p, {g: GradedPoly.gen(h) for g, h in mapping.items()})


def exp_nilpotent(p: PolyLike, max_order: int = 64) -> GradedPoly:
    """``exp(p)`` for ``p`` without constant term whose powers terminate."""
    p = lift(p)
    if p.constant_term():
        raise ValidationError("exp_nilpotent needs a polynomial without constant term")
    total = GradedPoly.const(1)
    term = GradedPoly.const(1)
    for k in range(1, max_order + 1):
        term = (term * p) / k
        if not term:
            return total
        total = total + term
    raise ValidationError("exponential did not terminate; argument is not nilpotent")


# serialization

def to_text(p: PolyLike) -> str:
    p = lift(p)
    if not p.terms:
        return "0"
    pieces = []
    for m in sorted(p.terms, key=_mono_sort_key):
        c = Fraction(p.terms[m])
        sign = "-" if c < 0 else "+"
        factors = [g.name if e == 1 else f"{g.name}^{e}" for g, e in m]
        a = abs(c)
        lead = [] if a == 1 and factors else [str(a)]
        body = "*".join(lead + factors)
        pieces.append((sign, body))
    first_sign, first = pieces[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        text += f" {sign} {body}"
    return text


_TERM = re.compile(r"\s*([+-])?\s*([^+-]+)")
_FACTOR = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)(?:\^(\d+))?$")


def from_text(text: str, registry: Mapping[str, Generator]) -> GradedPoly:
    """Parse the ``to_text`` format, e.g. ``"3/2*x1^2*psi1 - x2 + 1"``.

    Factors are multiplied left to right, so the Koszul sign of the written
    order is applied.  Every name must be in ``registry``.
    """
    if not isinstance(text, str):
        raise ValidationError("polynomial text must be a string")
    body = text.strip()
    if not body:
        raise ValidationError("empty polynomial text")
    if body == "0":
        return GradedPoly()
    raw = []
    pos = 0
    while pos < len(body):
        m = _TERM.match(body, pos)
        if not m or not m.group(2).strip():
            raise ValidationError(f"cannot parse polynomial text {text!r}")
        pos = m.end()
        coeff = Fraction(-1 if m.group(1) == "-" else 1)
        factors = []
        for piece in m.group(2).strip().split("*"):
            piece = piece.strip()
            if re.fullmatch(r"\d+(/\d+)?", piece):
                coeff *= parse_rational(piece)
                continue
            f = _FACTOR.match(piece)
            if not f:
                raise ValidationError(f"bad factor {piece!r} in {text!r}")
            factors.append((f.group(1), int(f.group(2) or 1)))
        raw.append((coeff, factors))
    return normalize(raw, registry)


def to_json(p: PolyLike) -> dict:
    p = lift(p)
    degrees = {g.name: g.degree for g in sorted(p.generators(), key=lambda g: g.key)}
    terms = [
        {"coeff": format_rational(p.terms[m]), "factors": [[g.name, e] for g, e in m]}
        for m in sorted(p.terms, key=_mono_sort_key)
    ]
    return {"degrees": degrees, "terms": terms}


def from_json(doc, registry: Mapping[str, Generator] | None = None) -> GradedPoly:
    if isinstance(doc, str):
        doc = json.loads(doc)
    if not isinstance(doc, dict) or "terms" not in doc:
        raise ValidationError("polynomial document needs a 'terms' list")
    reg = dict(registry or {})
    for name, deg in (doc.get("degrees") or {}).items():
        g = Generator(name, deg)
        if name in reg and reg[name] != g:
            raise ValidationError(f"conflicting degree for {name!r}")
        reg[name] = g
    raw = []
    for t in doc["terms"]:
        if not isinstance(t, dict) or "coeff" not in t:
            raise ValidationError("each term needs 'coeff' and 'factors'")
        raw.append((parse_rational(t["coeff"]), [tuple(f) if isinstance(f, list) else f
                                                  for f in t.get("factors", [])]))
    return normalize(raw, reg)
