"""Finite approximants of the communication domains that session types denote.

Each closed session type ``A`` and polarity ``p`` determines a pointed
domain of unidirectional communications.  This module represents the
finite elements of those domains as trees:

* ``BOT`` is the least element of every aspect: the absence of
  communication.  Product-shaped aspects have their all-bottom tuple
  identified with ``BOT``; the smart constructors normalize on the way in,
  so structural equality decides the domain's equality.
* ``STAR`` is the close message, the one non-trivial element of the
  positive aspect of the unit type.
* ``Lift(v)`` is the image of ``v`` under lifting: one message boundary.
  ``Lift(BOT)`` is *not* ``BOT``; lifting is not strict.
* ``Tag(k, Lift(v))`` is an element of a coalesced sum: the label ``k``
  followed by the communication ``v``.
* ``Pair``/``ValPair``/``Record`` are the product shapes used by channel
  and value transmission and by the passive side of choices.
* ``Fold(v)`` marks an element of a recursive type via the canonical
  isomorphism with its unfolding.

Observation depth counts message boundaries: every ``Lift`` is one unit.
``Fold`` is transparent for depth, so one labelled message on a recursive
stream costs exactly one unit; recursive occurrences reachable without
crossing a message boundary contribute only ``BOT`` to enumeration, which
matches the least solution of the corresponding domain equation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from . import ast as A
from .ast import NEG, POS, Polarity


class DomainError(ValueError):
    """A value was used at an aspect it does not conform to."""


class JoinError(ValueError):
    """The join of two incomparable values was requested."""


class NotEnumerable(ValueError):
    def __init__(self, ty: A.FType):
        self.ty = ty
        super().__init__(f"functional type is not enumerable: {ty}")


class ValueNotationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class CommValue:
    pass


@dataclass(frozen=True)
class BotValue(CommValue):
    def __repr__(self):
        return "BOT"


@dataclass(frozen=True)
class StarValue(CommValue):
    def __repr__(self):
        return "STAR"


@dataclass(frozen=True)
class Lift(CommValue):
    inner: CommValue


@dataclass(frozen=True)
class Tag(CommValue):
    label: str
    inner: CommValue  # always a Lift


@dataclass(frozen=True)
class Pair(CommValue):
    left: CommValue
    right: CommValue


@dataclass(frozen=True)
class ValPair(CommValue):
    val: "FuncValue"
    rest: CommValue


@dataclass(frozen=True)
class Record(CommValue):
    entries: tuple[tuple[str, CommValue], ...]

    def get(self, key: str) -> CommValue:
        for k, v in self.entries:
            if k == key:
                return v
        raise KeyError(key)

    def to_dict(self) -> dict[str, CommValue]:
        return dict(self.entries)


@dataclass(frozen=True)
class Fold(CommValue):
    inner: CommValue


BOT = BotValue()
STAR = StarValue()


# Functional values


@dataclass(frozen=True)
class FuncValue:
    pass


@dataclass(frozen=True)
class FuncBot(FuncValue):
    def __repr__(self):
        return "FBOT"


@dataclass(frozen=True)
class QProcBot(FuncValue):
    """The lifted bottom of a quoted-process domain: a stuck process.

    Distinct from ``FBOT``, which is the absence of any value.
    """

    def __repr__(self):
        return "QPROC_BOT"


@dataclass(frozen=True, eq=False)
class QProc(FuncValue):
    """A quoted process: the lifted image of its input/output function."""

    den: object  # semantics.Denotation; compared by identity

    def __eq__(self, other):
        return self is other or (isinstance(other, QProc) and self.den is other.den)

    def __hash__(self):
        return hash(("QProc", id(self.den)))


@dataclass(frozen=True, eq=False)
class Closure(FuncValue):
    var: str
    body: A.Term
    ty: A.FType  # the arrow type of the lambda
    env: tuple[tuple[str, FuncValue], ...]
    psi: tuple[tuple[str, A.FType], ...] = ()

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Closure):
            return False
        if self.var != other.var or self.body != other.body:
            return False
        free = A.free_term_vars(self.body) - {self.var}
        mine, theirs = dict(self.env), dict(other.env)
        return all(mine.get(x, FBOT) == theirs.get(x, FBOT) for x in free)

    def __hash__(self):
        return hash(("Closure", self.var, self.body))


FBOT = FuncBot()
QPROC_BOT = QProcBot()


# ---------------------------------------------------------------------------
# Smart constructors: keep values canonical (all-bottom products are BOT)


def record(mapping: Mapping[str, CommValue] | Iterable[tuple[str, CommValue]]) -> CommValue:
    items = tuple(sorted(dict(mapping).items()))
    if all(v == BOT for _, v in items):
        return BOT
    return Record(items)


def pair(left: CommValue, right: CommValue) -> CommValue:
    if left == BOT and right == BOT:
        return BOT
    return Pair(left, right)


def valpair(val: FuncValue, rest: CommValue) -> CommValue:
    if val == FBOT and rest == BOT:
        return BOT
    return ValPair(val, rest)


def fold(v: CommValue) -> CommValue:
    if v == BOT:
        return BOT
    return Fold(v)


def unfold(v: CommValue) -> CommValue:
    if v == BOT:
        return BOT
    if isinstance(v, Fold):
        return v.inner
    raise DomainError(f"cannot unfold {v!r}")


def tag(label: str, under_lift: CommValue) -> CommValue:
    return Tag(label, Lift(under_lift))


def up(v: CommValue) -> CommValue:
    """The unit of lifting.  Never strict: ``up(BOT) != BOT``."""
    return Lift(v)


def down(v: CommValue) -> CommValue:
    """The counit of lifting; strict, and a retraction of ``up``."""
    if v == BOT:
        return BOT
    if isinstance(v, Lift):
        return v.inner
    raise DomainError(f"cannot lower {v!r}")


def bottom(ty: A.SType, pol: Polarity) -> CommValue:
    """Least element of the aspect; products of bottoms are identified with BOT."""
    return BOT


# ---------------------------------------------------------------------------
# Splitting values against an expected shape (BOT stands for any product of
# bottoms, so consumers ask for the components they need)


def split_record(v: CommValue, labels: Sequence[str]) -> dict[str, CommValue]:
    if v == BOT:
        return {k: BOT for k in labels}
    if isinstance(v, Record):
        d = v.to_dict()
        if set(d) != set(labels):
            raise DomainError(f"record keys {sorted(d)} != expected {sorted(labels)}")
        return d
    raise DomainError(f"expected a record, got {v!r}")


def split_pair(v: CommValue) -> tuple[CommValue, CommValue]:
    if v == BOT:
        return BOT, BOT
    if isinstance(v, Pair):
        return v.left, v.right
    raise DomainError(f"expected a pair, got {v!r}")


def split_valpair(v: CommValue) -> tuple[FuncValue, CommValue]:
    if v == BOT:
        return FBOT, BOT
    if isinstance(v, ValPair):
        return v.val, v.rest
    raise DomainError(f"expected a value-carrying pair, got {v!r}")


# ---------------------------------------------------------------------------
# Order, join, meet, equality


def func_leq(f: FuncValue, g: FuncValue) -> bool:
    if f == FBOT:
        return True
    if isinstance(f, QProcBot):
        return isinstance(g, (QProcBot, QProc))
    # Closures and quoted processes compare by identity of their definition:
    # a sound under-approximation of the pointwise order.
    return f == g


def leq(v: CommValue, w: CommValue) -> bool:
    """The structural pointwise order on conforming values."""
    if v == BOT:
        return True
    if w == BOT:
        return False
    match v, w:
        case StarValue(), StarValue():
            return True
        case Lift(inner=a), Lift(inner=b):
            return leq(a, b)
        case Tag(label=k, inner=a), Tag(label=l, inner=b):
            return k == l and leq(a, b)
        case Pair(left=a1, right=a2), Pair(left=b1, right=b2):
            return leq(a1, b1) and leq(a2, b2)
        case ValPair(val=f, rest=a), ValPair(val=g, rest=b):
            return func_leq(f, g) and leq(a, b)
        case Record(entries=es), Record(entries=fs):
            if [k for k, _ in es] != [k for k, _ in fs]:
                raise DomainError("records with different keys are unrelated")
            return all(leq(a, b) for (_, a), (_, b) in zip(es, fs))
        case Fold(inner=a), Fold(inner=b):
            return leq(a, b)
        case (Pair(), Record()) | (Record(), Pair()):
            raise DomainError(f"shape mismatch: {v!r} vs {w!r}")
    return False


def equal(v: CommValue, w: CommValue) -> bool:
    return v == w


def _func_lub(f: FuncValue, g: FuncValue) -> FuncValue:
    if f == FBOT:
        return g
    if g == FBOT:
        return f
    if isinstance(f, QProcBot) and isinstance(g, (QProcBot, QProc)):
        return g
    if isinstance(g, QProcBot) and isinstance(f, QProc):
        return f
    if f == g:
        return f
    raise JoinError(f"functional values have no join: {f!r} vs {g!r}")


def lub2(v: CommValue, w: CommValue) -> CommValue:
    """Least upper bound of two compatible values (chain elements always are)."""
    if v == BOT:
        return w
    if w == BOT:
        return v
    match v, w:
        case StarValue(), StarValue():
            return STAR
        case Lift(inner=a), Lift(inner=b):
            return Lift(lub2(a, b))
        case Tag(label=k, inner=a), Tag(label=l, inner=b):
            if k != l:
                raise JoinError(f"incomparable labels {k!r} and {l!r} have no join")
            return Tag(k, lub2(a, b))
        case Pair(left=a1, right=a2), Pair(left=b1, right=b2):
            return pair(lub2(a1, b1), lub2(a2, b2))
        case ValPair(val=f, rest=a), ValPair(val=g, rest=b):
            return valpair(_func_lub(f, g), lub2(a, b))
        case Record(entries=es), Record(entries=fs):
            if [k for k, _ in es] != [k for k, _ in fs]:
                raise DomainError("records with different keys have no join")
            return record({k: lub2(a, b) for (k, a), (_, b) in zip(es, fs)})
        case Fold(inner=a), Fold(inner=b):
            return fold(lub2(a, b))
    raise DomainError(f"shape mismatch: {v!r} vs {w!r}")


def _func_meet(f: FuncValue, g: FuncValue) -> FuncValue:
    if f == FBOT or g == FBOT:
        return FBOT
    if f == g:
        return f
    if isinstance(f, (QProcBot, QProc)) and isinstance(g, (QProcBot, QProc)):
        return QPROC_BOT
    return FBOT


def meet2(v: CommValue, w: CommValue) -> CommValue:
    """Greatest lower bound; mismatched constructors meet at BOT."""
    if v == BOT or w == BOT:
        return BOT
    match v, w:
        case StarValue(), StarValue():
            return STAR
        case Lift(inner=a), Lift(inner=b):
            return Lift(meet2(a, b))
        case Tag(label=k, inner=a), Tag(label=l, inner=b):
            if k != l:
                return BOT
            return Tag(k, meet2(a, b))
        case Pair(left=a1, right=a2), Pair(left=b1, right=b2):
            return pair(meet2(a1, b1), meet2(a2, b2))
        case ValPair(val=f, rest=a), ValPair(val=g, rest=b):
            return valpair(_func_meet(f, g), meet2(a, b))
        case Record(entries=es), Record(entries=fs):
            if [k for k, _ in es] != [k for k, _ in fs]:
                raise DomainError("records with different keys have no meet")
            return record({k: meet2(a, b) for (k, a), (_, b) in zip(es, fs)})
        case Fold(inner=a), Fold(inner=b):
            return fold(meet2(a, b))
    raise DomainError(f"shape mismatch: {v!r} vs {w!r}")


# ---------------------------------------------------------------------------
# Truncation


def truncate(v: CommValue, depth: int) -> CommValue:
    """Replace everything below the ``depth``-th message boundary with BOT."""
    if v == BOT or isinstance(v, StarValue):
        return v
    match v:
        case Lift(inner=a):
            if depth <= 0:
                return BOT
            return Lift(truncate(a, depth - 1))
        case Tag(label=k, inner=Lift(inner=a)):
            if depth <= 0:
                return BOT
            return Tag(k, Lift(truncate(a, depth - 1)))
        case Pair(left=l, right=r):
            return pair(truncate(l, depth), truncate(r, depth))
        case ValPair(val=f, rest=r):
            return valpair(f, truncate(r, depth))
        case Record(entries=es):
            return record({k: truncate(a, depth) for k, a in es})
        case Fold(inner=a):
            return fold(truncate(a, depth))
    raise DomainError(f"not a value: {v!r}")


def height(v: CommValue) -> int:
    """Number of message boundaries on the deepest path."""
    match v:
        case BotValue() | StarValue():
            return 0
        case Lift(inner=a):
            return 1 + height(a)
        case Tag(inner=a):
            return height(a)
        case Pair(left=l, right=r):
            return max(height(l), height(r))
        case ValPair(rest=r):
            return height(r)
        case Record(entries=es):
            return max(height(a) for _, a in es)
        case Fold(inner=a):
            return height(a)
    raise DomainError(f"not a value: {v!r}")


# ---------------------------------------------------------------------------
# Conformance


FuncEnum = Callable[[A.FType], Sequence[FuncValue]]


def conforms(v: CommValue, ty: A.SType, pol: Polarity) -> bool:
    try:
        check_conforms(v, ty, pol)
        return True
    except DomainError:
        return False


def check_conforms(v: CommValue, ty: A.SType, pol: Polarity) -> None:
    if v == BOT:
        return
    match ty, pol:
        case A.Unit(), Polarity.POS:
            if not isinstance(v, StarValue):
                raise DomainError(f"expected * or _ at 1+, got {v!r}")
        case A.Unit(), Polarity.NEG:
            raise DomainError(f"only _ inhabits 1-, got {v!r}")
        case A.Down(body=b), Polarity.POS:
            _check_lifted(v, b, POS)
        case A.Down(body=b), Polarity.NEG:
            check_conforms(v, b, NEG)
        case A.Up(body=b), Polarity.NEG:
            _check_lifted(v, b, NEG)
        case A.Up(body=b), Polarity.POS:
            check_conforms(v, b, POS)
        case (A.Plus(branches=bs), Polarity.POS) | (A.With(branches=bs), Polarity.NEG):
            if not (isinstance(v, Tag) and isinstance(v.inner, Lift)):
                raise DomainError(f"expected a tagged message, got {v!r}")
            mapping = dict(bs)
            if v.label not in mapping:
                raise DomainError(f"label {v.label!r} not in {sorted(mapping)}")
            check_conforms(v.inner.inner, mapping[v.label], pol)
        case (A.Plus(branches=bs), Polarity.NEG) | (A.With(branches=bs), Polarity.POS):
            if not isinstance(v, Record):
                raise DomainError(f"expected a record over labels, got {v!r}")
            d = split_record(v, [k for k, _ in bs])
            for k, t in bs:
                check_conforms(d[k], t, pol)
        case A.Tensor(carried=l, cont=r), Polarity.POS:
            _check_lifted_pair(v, l, POS, r, POS)
        case A.Tensor(carried=l, cont=r), Polarity.NEG:
            a, b = split_pair(v)
            check_conforms(a, l, NEG)
            check_conforms(b, r, NEG)
        case A.Lolly(carried=l, cont=r), Polarity.NEG:
            _check_lifted_pair(v, l, POS, r, NEG)
        case A.Lolly(carried=l, cont=r), Polarity.POS:
            a, b = split_pair(v)
            check_conforms(a, l, NEG)
            check_conforms(b, r, POS)
        case A.AndVal(cont=r), Polarity.POS:
            _check_lifted_valpair(v, r, POS)
        case A.AndVal(cont=r), Polarity.NEG:
            check_conforms(v, r, NEG)
        case A.ImpVal(cont=r), Polarity.NEG:
            _check_lifted_valpair(v, r, NEG)
        case A.ImpVal(cont=r), Polarity.POS:
            check_conforms(v, r, POS)
        case A.Rec(), _:
            if not isinstance(v, Fold):
                raise DomainError(f"expected fold(...) at a recursive type, got {v!r}")
            check_conforms(v.inner, A.unfold_rec(ty), pol)
        case _:
            raise DomainError(f"no aspect for {ty!r} at {pol}")


def _check_lifted(v: CommValue, ty: A.SType, pol: Polarity) -> None:
    if not isinstance(v, Lift):
        raise DomainError(f"expected up(...) or _, got {v!r}")
    check_conforms(v.inner, ty, pol)


def _check_lifted_pair(v, lty, lpol, rty, rpol) -> None:
    if not isinstance(v, Lift):
        raise DomainError(f"expected up((_, _)) or _, got {v!r}")
    a, b = split_pair(v.inner)
    check_conforms(a, lty, lpol)
    check_conforms(b, rty, rpol)


def _check_lifted_valpair(v, rty, rpol) -> None:
    if not isinstance(v, Lift):
        raise DomainError(f"expected up((value, _)) or _, got {v!r}")
    _, rest = split_valpair(v.inner)
    check_conforms(rest, rty, rpol)


# ---------------------------------------------------------------------------
# Enumeration

_DEFAULT_QPROC_POINTS: tuple[FuncValue, ...] = (FBOT, QPROC_BOT)


def default_func_enum(ty: A.FType) -> Sequence[FuncValue]:
    """Quoted-process types enumerate their two canonical points; other
    functional types admit no finite enumeration."""
    if isinstance(ty, A.ProcType):
        return _DEFAULT_QPROC_POINTS
    raise NotEnumerable(ty)


def enumerate_values(ty: A.SType, pol: Polarity, depth: int,
                     func_enum: Optional[FuncEnum] = None) -> list[CommValue]:
    """All conforming values whose height is at most ``depth``.

    Deterministically ordered.  Recursive occurrences reachable without
    crossing a message boundary contribute only BOT (the least solution of
    the enumeration equation), matching the degenerate domains such types
    denote.
    """
    fe = func_enum or default_func_enum

    def go(t: A.SType, p: Polarity, d: int, seen: frozenset) -> list[CommValue]:
        key = (t, p)
        if key in seen:
            return [BOT]
        seen = seen | {key}
        match t, p:
            case A.Unit(), Polarity.POS:
                return [BOT, STAR]
            case A.Unit(), Polarity.NEG:
                return [BOT]
            case A.Down(body=b), Polarity.POS:
                return _lifted(go(b, POS, d - 1, frozenset()) if d > 0 else None)
            case A.Down(body=b), Polarity.NEG:
                return go(b, NEG, d, seen)
            case A.Up(body=b), Polarity.NEG:
                return _lifted(go(b, NEG, d - 1, frozenset()) if d > 0 else None)
            case A.Up(body=b), Polarity.POS:
                return go(b, POS, d, seen)
            case (A.Plus(branches=bs), Polarity.POS) | (A.With(branches=bs), Polarity.NEG):
                out: list[CommValue] = [BOT]
                if d > 0:
                    for k, bt in bs:
                        out.extend(tag(k, x) for x in go(bt, p, d - 1, frozenset()))
                return out
            case (A.Plus(branches=bs), Polarity.NEG) | (A.With(branches=bs), Polarity.POS):
                per = [(k, go(bt, p, d, seen)) for k, bt in bs]
                combos = [{}]
                for k, vals in per:
                    combos = [{**c, k: v} for c in combos for v in vals]
                return _dedup(record(c) for c in combos)
            case A.Tensor(carried=l, cont=r), Polarity.POS:
                return _lifted_pairs(l, POS, r, POS, d, go)
            case A.Tensor(carried=l, cont=r), Polarity.NEG:
                return _dedup(
                    pair(x, y)
                    for x in go(l, NEG, d, seen)
                    for y in go(r, NEG, d, seen)
                )
            case A.Lolly(carried=l, cont=r), Polarity.NEG:
                return _lifted_pairs(l, POS, r, NEG, d, go)
            case A.Lolly(carried=l, cont=r), Polarity.POS:
                return _dedup(
                    pair(x, y)
                    for x in go(l, NEG, d, seen)
                    for y in go(r, POS, d, seen)
                )
            case A.AndVal(val=vt, cont=r), Polarity.POS:
                return _lifted_valpairs(vt, r, POS, d, go, fe)
            case A.AndVal(cont=r), Polarity.NEG:
                return go(r, NEG, d, seen)
            case A.ImpVal(val=vt, cont=r), Polarity.NEG:
                return _lifted_valpairs(vt, r, NEG, d, go, fe)
            case A.ImpVal(cont=r), Polarity.POS:
                return go(r, POS, d, seen)
            case A.Rec(), _:
                return _dedup(fold(x) for x in go(A.unfold_rec(t), p, d, seen))
        raise DomainError(f"no aspect for {t!r} at {p}")

    out = go(ty, pol, depth, frozenset())
    return sorted(set(out), key=value_key)


def _lifted(inner: Optional[list[CommValue]]) -> list[CommValue]:
    out: list[CommValue] = [BOT]
    if inner is not None:
        out.extend(Lift(x) for x in inner)
    return out


def _lifted_pairs(lty, lpol, rty, rpol, d, go) -> list[CommValue]:
    out: list[CommValue] = [BOT]
    if d > 0:
        lefts = go(lty, lpol, d - 1, frozenset())
        rights = go(rty, rpol, d - 1, frozenset())
        out.extend(Lift(pair(x, y)) for x in lefts for y in rights)
    return out


def _lifted_valpairs(vt, rty, rpol, d, go, fe) -> list[CommValue]:
    out: list[CommValue] = [BOT]
    if d > 0:
        vals = list(fe(vt))
        rights = go(rty, rpol, d - 1, frozenset())
        out.extend(Lift(valpair(f, y)) for f in vals for y in rights)
    return out


def _dedup(vals: Iterable[CommValue]) -> list[CommValue]:
    return list(dict.fromkeys(vals))


def value_key(v: CommValue):
    """A stable total ordering key for deterministic enumeration output."""
    match v:
        case BotValue():
            return (0,)
        case StarValue():
            return (1,)
        case Lift(inner=a):
            return (2, value_key(a))
        case Tag(label=k, inner=a):
            return (3, k, value_key(a))
        case Pair(left=l, right=r):
            return (4, value_key(l), value_key(r))
        case ValPair(val=f, rest=r):
            return (5, _func_key(f), value_key(r))
        case Record(entries=es):
            return (6, tuple((k, value_key(x)) for k, x in es))
        case Fold(inner=a):
            return (7, value_key(a))
    raise DomainError(f"not a value: {v!r}")


def _func_key(f: FuncValue):
    match f:
        case FuncBot():
            return (0,)
        case QProcBot():
            return (1,)
        case QProc():
            return (2, id(f.den))
        case Closure():
            return (3, f.var, id(f.body))
    raise DomainError(f"not a functional value: {f!r}")


# ---------------------------------------------------------------------------
# Ascending-chain height of the truncated aspect (a fuel bound for traces)


def chain_steps(ty: A.SType, pol: Polarity, depth: int) -> int:
    """An upper bound on the number of strict steps any ascending chain can
    take in the depth-truncated aspect."""

    def go(t: A.SType, p: Polarity, d: int, seen: frozenset) -> int:
        key = (t, p)
        if key in seen:
            return 0
        seen = seen | {key}
        match t, p:
            case A.Unit(), Polarity.POS:
                return 1
            case A.Unit(), Polarity.NEG:
                return 0
            case A.Down(body=b), Polarity.POS:
                return 1 + go(b, POS, d - 1, frozenset()) if d > 0 else 0
            case A.Down(body=b), Polarity.NEG:
                return go(b, NEG, d, seen)
            case A.Up(body=b), Polarity.NEG:
                return 1 + go(b, NEG, d - 1, frozenset()) if d > 0 else 0
            case A.Up(body=b), Polarity.POS:
                return go(b, POS, d, seen)
            case (A.Plus(branches=bs), Polarity.POS) | (A.With(branches=bs), Polarity.NEG):
                if d <= 0:
                    return 0
                return 1 + max(go(bt, p, d - 1, frozenset()) for _, bt in bs)
            case (A.Plus(branches=bs), Polarity.NEG) | (A.With(branches=bs), Polarity.POS):
                return sum(go(bt, p, d, seen) for _, bt in bs)
            case A.Tensor(carried=l, cont=r), Polarity.POS:
                if d <= 0:
                    return 0
                return 1 + go(l, POS, d - 1, frozenset()) + go(r, POS, d - 1, frozenset())
            case A.Tensor(carried=l, cont=r), Polarity.NEG:
                return go(l, NEG, d, seen) + go(r, NEG, d, seen)
            case A.Lolly(carried=l, cont=r), Polarity.NEG:
                if d <= 0:
                    return 0
                return 1 + go(l, POS, d - 1, frozenset()) + go(r, NEG, d - 1, frozenset())
            case A.Lolly(carried=l, cont=r), Polarity.POS:
                return go(l, NEG, d, seen) + go(r, POS, d, seen)
            case A.AndVal(cont=r), Polarity.POS:
                return 3 + go(r, POS, d - 1, frozenset()) if d > 0 else 0
            case A.AndVal(cont=r), Polarity.NEG:
                return go(r, NEG, d, seen)
            case A.ImpVal(cont=r), Polarity.NEG:
                return 3 + go(r, NEG, d - 1, frozenset()) if d > 0 else 0
            case A.ImpVal(cont=r), Polarity.POS:
                return go(r, POS, d, seen)
            case A.Rec(), _:
                return go(A.unfold_rec(t), p, d, seen)
        raise DomainError(f"no aspect for {t!r} at {p}")

    return go(ty, pol, depth, frozenset())


# ---------------------------------------------------------------------------
# Text notation
#
#   _            absence of communication (bottom)
#   *            the close message
#   up(v)        a lifted communication
#   k·v          label k then v (also accepted/printed for fold-of-label
#                at recursive types, so bit streams read 0·1·_)
#   (v, w)       pairs (channel or value transmission)
#   {k: v, ...}  records (the passive side of a choice)
#   fold(v)      recursive wrapper when the unfolding is not a choice


def format_value(v: CommValue, ty: A.SType, pol: Polarity) -> str:
    match ty, pol:
        case A.Unit(), Polarity.POS:
            return "*" if isinstance(v, StarValue) else "_"
        case A.Unit(), Polarity.NEG:
            return "_"
        case A.Down(body=b), Polarity.POS:
            return "_" if v == BOT else f"up({format_value(down(v), b, POS)})"
        case A.Down(body=b), Polarity.NEG:
            return format_value(v, b, NEG)
        case A.Up(body=b), Polarity.NEG:
            return "_" if v == BOT else f"up({format_value(down(v), b, NEG)})"
        case A.Up(body=b), Polarity.POS:
            return format_value(v, b, POS)
        case (A.Plus(branches=bs), Polarity.POS) | (A.With(branches=bs), Polarity.NEG):
            if v == BOT:
                return "_"
            assert isinstance(v, Tag)
            cont = dict(bs)[v.label]
            return f"{v.label}·{format_value(v.inner.inner, cont, pol)}"
        case (A.Plus(branches=bs), Polarity.NEG) | (A.With(branches=bs), Polarity.POS):
            d = split_record(v, [k for k, _ in bs])
            inner = ", ".join(f"{k}: {format_value(d[k], t, pol)}" for k, t in bs)
            return "{" + inner + "}"
        case A.Tensor(carried=l, cont=r), Polarity.POS:
            if v == BOT:
                return "_"
            a, b = split_pair(down(v))
            return f"up(({format_value(a, l, POS)}, {format_value(b, r, POS)}))"
        case A.Tensor(carried=l, cont=r), Polarity.NEG:
            a, b = split_pair(v)
            return f"({format_value(a, l, NEG)}, {format_value(b, r, NEG)})"
        case A.Lolly(carried=l, cont=r), Polarity.NEG:
            if v == BOT:
                return "_"
            a, b = split_pair(down(v))
            return f"up(({format_value(a, l, POS)}, {format_value(b, r, NEG)}))"
        case A.Lolly(carried=l, cont=r), Polarity.POS:
            a, b = split_pair(v)
            return f"({format_value(a, l, NEG)}, {format_value(b, r, POS)})"
        case A.AndVal(cont=r), Polarity.POS:
            if v == BOT:
                return "_"
            f, rest = split_valpair(down(v))
            return f"up(({format_func_value(f)}, {format_value(rest, r, POS)}))"
        case A.AndVal(cont=r), Polarity.NEG:
            return format_value(v, r, NEG)
        case A.ImpVal(cont=r), Polarity.NEG:
            if v == BOT:
                return "_"
            f, rest = split_valpair(down(v))
            return f"up(({format_func_value(f)}, {format_value(rest, r, NEG)}))"
        case A.ImpVal(cont=r), Polarity.POS:
            return format_value(v, r, POS)
        case A.Rec(), _:
            if v == BOT:
                return "_"
            inner = unfold(v)
            unfolded = A.unfold_rec(ty)
            sum_shaped = (
                isinstance(unfolded, A.Plus) and pol == POS
            ) or (isinstance(unfolded, A.With) and pol == NEG)
            if sum_shaped and isinstance(inner, Tag):
                return format_value(inner, unfolded, pol)
            return f"fold({format_value(inner, unfolded, pol)})"
    raise DomainError(f"no aspect for {ty!r} at {pol}")


def format_func_value(f: FuncValue) -> str:
    match f:
        case FuncBot():
            return "_"
        case QProcBot():
            return "<stuck>"
        case QProc():
            return "<proc>"
        case Closure():
            return "<fun>"
    raise DomainError(f"not a functional value: {f!r}")


# Raw value-notation trees, coerced against an aspect afterwards.


@dataclass(frozen=True)
class _Raw:
    pass


@dataclass(frozen=True)
class _RBot(_Raw):
    pass


@dataclass(frozen=True)
class _RStar(_Raw):
    pass


@dataclass(frozen=True)
class _RStuck(_Raw):
    pass


@dataclass(frozen=True)
class _RUp(_Raw):
    inner: _Raw


@dataclass(frozen=True)
class _RFold(_Raw):
    inner: _Raw


@dataclass(frozen=True)
class _RDot(_Raw):
    label: str
    inner: _Raw


@dataclass(frozen=True)
class _RTuple(_Raw):
    items: tuple[_Raw, ...]


@dataclass(frozen=True)
class _RMap(_Raw):
    items: tuple[tuple[str, _Raw], ...]


def _tokenize_value(text: str) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()*{},:_":
            out.append(ch)
            i += 1
            continue
        if ch == "<":
            j = text.find(">", i)
            if j < 0:
                raise ValueNotationError("unclosed <...> in value")
            out.append(text[i:j + 1])
            i = j + 1
            continue
        if ch in "·.":
            out.append("·")
            i += 1
            continue
        if ch.isalnum():
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(text[i:j])
            i = j
            continue
        raise ValueNotationError(f"unexpected character {ch!r} in value")
    return out


def _parse_raw(tokens: list[str], pos: int) -> tuple[_Raw, int]:
    if pos >= len(tokens):
        raise ValueNotationError("unexpected end of value")
    tok = tokens[pos]
    if tok == "_":
        return _RBot(), pos + 1
    if tok == "*":
        return _RStar(), pos + 1
    if tok == "<stuck>":
        return _RStuck(), pos + 1
    if tok in ("<proc>", "<fun>"):
        raise ValueNotationError(
            f"{tok} displays a functional value with no written form"
        )
    if tok in ("up", "fold"):
        if pos + 1 >= len(tokens) or tokens[pos + 1] != "(":
            raise ValueNotationError(f"{tok} needs parentheses")
        inner, q = _parse_raw(tokens, pos + 2)
        if q >= len(tokens) or tokens[q] != ")":
            raise ValueNotationError(f"unclosed {tok}(...)")
        node = _RUp(inner) if tok == "up" else _RFold(inner)
        return node, q + 1
    if tok == "(":
        items = []
        q = pos + 1
        while True:
            item, q = _parse_raw(tokens, q)
            items.append(item)
            if q < len(tokens) and tokens[q] == ",":
                q += 1
                continue
            break
        if q >= len(tokens) or tokens[q] != ")":
            raise ValueNotationError("unclosed (...)")
        if len(items) == 1:
            return items[0], q + 1
        return _RTuple(tuple(items)), q + 1
    if tok == "{":
        entries = []
        q = pos + 1
        while True:
            if q >= len(tokens):
                raise ValueNotationError("unclosed {...}")
            label = tokens[q]
            if not label.isalnum() and "_" not in label:
                raise ValueNotationError(f"bad record label {label!r}")
            if q + 1 >= len(tokens) or tokens[q + 1] != ":":
                raise ValueNotationError("record entries are written label: value")
            item, q = _parse_raw(tokens, q + 2)
            entries.append((label, item))
            if q < len(tokens) and tokens[q] == ",":
                q += 1
                continue
            break
        if q >= len(tokens) or tokens[q] != "}":
            raise ValueNotationError("unclosed {...}")
        return _RMap(tuple(entries)), q + 1
    if tok.isalnum():
        if pos + 1 < len(tokens) and tokens[pos + 1] == "·":
            inner, q = _parse_raw(tokens, pos + 2)
            return _RDot(tok, inner), q
        raise ValueNotationError(f"bare name {tok!r} is not a value")
    raise ValueNotationError(f"unexpected token {tok!r} in value")


def parse_value(text: str, ty: A.SType, pol: Polarity) -> CommValue:
    tokens = _tokenize_value(text)
    raw, pos = _parse_raw(tokens, 0)
    if pos != len(tokens):
        raise ValueNotationError(f"trailing input in value: {tokens[pos:]}")
    return _coerce(raw, ty, pol)


def _coerce(raw: _Raw, ty: A.SType, pol: Polarity) -> CommValue:
    if isinstance(raw, _RBot):
        return BOT
    match ty, pol:
        case A.Unit(), Polarity.POS:
            if isinstance(raw, _RStar):
                return STAR
            raise ValueNotationError("the unit type carries only _ or *")
        case A.Unit(), Polarity.NEG:
            raise ValueNotationError("nothing flows this way on a unit channel; use _")
        case A.Down(body=b), Polarity.POS:
            return _coerce_lift(raw, b, POS)
        case A.Down(body=b), Polarity.NEG:
            return _coerce(raw, b, NEG)
        case A.Up(body=b), Polarity.NEG:
            return _coerce_lift(raw, b, NEG)
        case A.Up(body=b), Polarity.POS:
            return _coerce(raw, b, POS)
        case (A.Plus(branches=bs), Polarity.POS) | (A.With(branches=bs), Polarity.NEG):
            if isinstance(raw, _RDot):
                mapping = dict(bs)
                if raw.label not in mapping:
                    raise ValueNotationError(
                        f"label {raw.label!r} not among {sorted(mapping)}"
                    )
                return tag(raw.label, _coerce(raw.inner, mapping[raw.label], pol))
            raise ValueNotationError("expected a labelled value k·v")
        case (A.Plus(branches=bs), Polarity.NEG) | (A.With(branches=bs), Polarity.POS):
            if isinstance(raw, _RMap):
                mapping = dict(bs)
                got = dict(raw.items)
                if set(got) - set(mapping):
                    raise ValueNotationError(
                        f"unknown labels {sorted(set(got) - set(mapping))}"
                    )
                return record({
                    k: _coerce(got[k], t, pol) if k in got else BOT
                    for k, t in bs
                })
            raise ValueNotationError("expected a record {label: value, ...}")
        case A.Tensor(carried=l, cont=r), Polarity.POS:
            return _coerce_lift_pair(raw, l, POS, r, POS)
        case A.Tensor(carried=l, cont=r), Polarity.NEG:
            return _coerce_pair(raw, l, NEG, r, NEG)
        case A.Lolly(carried=l, cont=r), Polarity.NEG:
            return _coerce_lift_pair(raw, l, POS, r, NEG)
        case A.Lolly(carried=l, cont=r), Polarity.POS:
            return _coerce_pair(raw, l, NEG, r, POS)
        case A.AndVal(cont=r), Polarity.POS:
            return _coerce_lift_valpair(raw, r, POS)
        case A.AndVal(cont=r), Polarity.NEG:
            return _coerce(raw, r, NEG)
        case A.ImpVal(cont=r), Polarity.NEG:
            return _coerce_lift_valpair(raw, r, NEG)
        case A.ImpVal(cont=r), Polarity.POS:
            return _coerce(raw, r, POS)
        case A.Rec(), _:
            unfolded = A.unfold_rec(ty)
            if isinstance(raw, _RFold):
                return fold(_coerce(raw.inner, unfolded, pol))
            # k·v is accepted directly for fold-of-label values
            return fold(_coerce(raw, unfolded, pol))
    raise ValueNotationError(f"no aspect for {ty!r} at {pol}")


def _coerce_lift(raw: _Raw, ty: A.SType, pol: Polarity) -> CommValue:
    if isinstance(raw, _RUp):
        return Lift(_coerce(raw.inner, ty, pol))
    raise ValueNotationError("expected up(...) or _")


def _coerce_lift_pair(raw, lty, lpol, rty, rpol) -> CommValue:
    if isinstance(raw, _RUp):
        return Lift(_coerce_pair(raw.inner, lty, lpol, rty, rpol))
    raise ValueNotationError("expected up((v, w)) or _")


def _coerce_pair(raw, lty, lpol, rty, rpol) -> CommValue:
    if isinstance(raw, _RBot):
        return BOT
    if isinstance(raw, _RTuple) and len(raw.items) == 2:
        return pair(
            _coerce(raw.items[0], lty, lpol), _coerce(raw.items[1], rty, rpol)
        )
    raise ValueNotationError("expected a pair (v, w)")


def _coerce_lift_valpair(raw, rty, rpol) -> CommValue:
    if isinstance(raw, _RUp):
        inner = raw.inner
        if isinstance(inner, _RBot):
            return Lift(BOT)
        if isinstance(inner, _RTuple) and len(inner.items) == 2:
            fraw, rraw = inner.items
            if isinstance(fraw, _RBot):
                fval: FuncValue = FBOT
            elif isinstance(fraw, _RStuck):
                fval = QPROC_BOT
            else:
                raise ValueNotationError(
                    "functional values have no notation beyond _ and <stuck>"
                )
            return Lift(valpair(fval, _coerce(rraw, rty, rpol)))
        raise ValueNotationError("expected up((value, w))")
    raise ValueNotationError("expected up((value, w)) or _")
