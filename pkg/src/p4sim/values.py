"""Fixed-width bit vector values, width inference, and path constraints.

Every runtime quantity is a `Concrete` bit vector (unsigned magnitude plus a
signedness flag), the distinguished undefined value `UNDEF`, or a `Symbolic`
reference to an atom.  Atoms are either base atoms (introduced when a
symbolic packet is injected) or derived atoms (the result of an operation on
symbolic operands); derived atoms carry their definition so constraint sets
can be decided by evaluating them over enumerated base-atom assignments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .errors import StuckError, NEGATIVE_SHIFT, UNDEF_IN_EXPR, P4Error

BINOPS = ("+", "-", "*", "&", "|", "^", "<<", ">>")
CMPOPS = ("==", "!=", "<", "<=", ">", ">=")


class _Undef:
    __slots__ = ()

    def __repr__(self):
        return "UNDEF"


UNDEF = _Undef()


@dataclass(frozen=True)
class Concrete:
    width: int
    bits: int  # unsigned magnitude, always < 2**width
    signed: bool = False

    def __post_init__(self):
        assert self.width >= 0
        assert 0 <= self.bits < (1 << self.width) or self.width == 0

    def as_int(self) -> int:
        """Numeric value, interpreting the pattern per the signedness flag."""
        if self.signed and self.width > 0 and (self.bits >> (self.width - 1)) & 1:
            return self.bits - (1 << self.width)
        return self.bits

    def __repr__(self):
        s = "s" if self.signed else "u"
        return f"{self.width}'{s}{self.bits:#x}"


@dataclass(frozen=True)
class Symbolic:
    atom: int
    width: int
    signed: bool = False

    def __repr__(self):
        return f"sym{self.atom}:{self.width}"


Value = object  # Concrete | _Undef | Symbolic


def is_undef(v) -> bool:
    return v is UNDEF


def concrete(width: int, raw: int, signed: bool = False) -> Concrete:
    """Build a Concrete from a possibly-negative python int, wrapping to width."""
    return Concrete(width, raw & ((1 << width) - 1) if width else 0, signed)


def infer_const_width(value: int, negative_literal: bool = False,
                      explicit_width: Optional[int] = None,
                      signed: bool = False) -> Concrete:
    """Width inference for constants.

    Positive constants get the smallest width that holds the value; a
    negative literal -n gets bit_length(n) + 1 and a two's-complement
    encoding.  Explicit widths bypass inference but are checked.
    """
    if explicit_width is not None:
        w = explicit_width
        if signed:
            lo, hi = -(1 << (w - 1)), (1 << (w - 1)) - 1
            ok = lo <= value <= hi
        else:
            ok = 0 <= value < (1 << w)
        if not ok:
            raise P4Error("WIDTH_OVERFLOW",
                          f"value {value} does not fit in {w} bits")
        return concrete(w, value, signed)
    if negative_literal:
        assert value < 0
        w = (-value).bit_length() + 1
        return concrete(w, value, signed=True)
    assert value >= 0
    return Concrete(max(value.bit_length(), 1), value, signed=False)


def _promote(v: Concrete, width: int) -> Concrete:
    """Extend to `width` bits: sign-extend if signed, zero-extend otherwise."""
    if v.width == width:
        return v
    assert width > v.width
    return concrete(width, v.as_int(), v.signed)


def _binop_ints(op: str, a: int, b: int, width: int, a_signed: bool) -> int:
    """Arbitrary-precision op on numeric operands, then wrap to width."""
    mask = (1 << width) - 1
    if op == "+":
        return (a + b) & mask
    if op == "-":
        return (a - b) & mask
    if op == "*":
        return (a * b) & mask
    if op == "&":
        return (a & b) & mask
    if op == "|":
        return (a | b) & mask
    if op == "^":
        return (a ^ b) & mask
    if op == "<<":
        return (a << b) & mask if b < width else 0
    if op == ">>":
        # arithmetic on signed operands (python ints shift arithmetically),
        # logical on unsigned; `a` is numeric so this falls out directly
        return (a >> min(b, width)) & mask
    if op == "%":  # internal: hash-based offsets; not in the source grammar
        return (a % b) & mask
    raise AssertionError(op)


def apply_binop(op: str, a, b, atoms: "AtomTable | None" = None,
                site: str = "expr"):
    """Apply a binary operator with promote-to-larger-width semantics.

    Operands are extended to the larger width (sign- or zero-extended per
    their own signedness); arithmetic wraps at the promoted width;
    comparisons yield 1-bit results.  Undef operands are stuck; a negative
    signed shift amount is stuck.  Symbolic operands yield a derived atom.
    """
    if is_undef(a) or is_undef(b):
        raise StuckError(UNDEF_IN_EXPR, site, f"undefined operand of '{op}'")
    if isinstance(a, Symbolic) or isinstance(b, Symbolic):
        if atoms is None:
            raise StuckError(UNDEF_IN_EXPR, site, "symbolic operand outside symbolic mode")
        return atoms.derive_binop(op, a, b)
    assert isinstance(a, Concrete) and isinstance(b, Concrete)
    width = max(a.width, b.width)
    pa, pb = _promote(a, width), _promote(b, width)
    if op in CMPOPS:
        av, bv = pa.as_int(), pb.as_int()
        if op == "==":
            r = pa.bits == pb.bits
        elif op == "!=":
            r = pa.bits != pb.bits
        elif op == "<":
            r = av < bv
        elif op == "<=":
            r = av <= bv
        elif op == ">":
            r = av > bv
        else:
            r = av >= bv
        return Concrete(1, int(r))
    if op in ("<<", ">>"):
        amt = pb.as_int()
        if amt < 0:
            raise StuckError(NEGATIVE_SHIFT, site, f"shift amount {amt}")
        bits = _binop_ints(op, pa.as_int(), amt, width, pa.signed)
        return Concrete(width, bits, pa.signed)
    if op not in BINOPS and op != "%":
        raise AssertionError(f"unknown operator {op}")
    signed = pa.signed and pb.signed
    bits = _binop_ints(op, pa.as_int(), pb.as_int(), width, pa.signed)
    return Concrete(width, bits, signed)


def truncate_to_width(v, w: int, atoms: "AtomTable | None" = None,
                      site: str = "assign"):
    """Keep the low `w` bits of a value; symbolic values gain a derived atom."""
    if is_undef(v):
        raise StuckError(UNDEF_IN_EXPR, site, "truncating undefined value")
    if isinstance(v, Symbolic):
        if v.width == w:
            return v
        assert atoms is not None
        return atoms.derive_slice(v.atom, 0, w)
    assert isinstance(v, Concrete)
    if v.width == w:
        return v
    return Concrete(w, v.bits & ((1 << w) - 1), v.signed)


# --------------------------------------------------------------------------
# Atoms


@dataclass(frozen=True)
class AtomDef:
    """Definition of one atom.

    kind 'base' has no operands. Derived kinds:
      'binop'  args = (op, opnd, opnd)   opnd = ('atom', id) | ('const', bits, width, signed)
      'slice'  args = (parent_id, offset_from_lsb, width)
      'concat' args = tuple of opnds, most-significant first
      'hash'   args = (algorithm, output_width, tuple of (width, opnd))
      'cmp'    args = (op, opnd, opnd)
    """

    width: int
    signed: bool
    kind: str
    args: tuple = ()
    label: str = ""


class AtomTable:
    """Append-only registry of atoms for one execution path family."""

    def __init__(self):
        self.defs: dict[int, AtomDef] = {}
        self._next = 0
        self._roots: dict[int, frozenset[int]] = {}

    def clone(self) -> "AtomTable":
        t = AtomTable()
        t.defs = dict(self.defs)
        t._next = self._next
        t._roots = dict(self._roots)
        return t

    def _alloc(self, d: AtomDef) -> int:
        i = self._next
        self._next += 1
        self.defs[i] = d
        return i

    def fresh_base(self, width: int, signed: bool = False, label: str = "") -> int:
        return self._alloc(AtomDef(width, signed, "base", (), label))

    @staticmethod
    def _opnd(v) -> tuple:
        if isinstance(v, Symbolic):
            return ("atom", v.atom)
        assert isinstance(v, Concrete)
        return ("const", v.bits, v.width, v.signed)

    def derive_binop(self, op: str, a, b) -> Value:
        wa = a.width
        wb = b.width
        width = 1 if op in CMPOPS else max(wa, wb)
        signed = (getattr(a, "signed", False) and getattr(b, "signed", False)
                  and op not in CMPOPS)
        kind = "cmp" if op in CMPOPS else "binop"
        i = self._alloc(AtomDef(width, signed, kind,
                                (op, self._opnd(a), self._opnd(b))))
        return Symbolic(i, width, signed)

    def derive_slice(self, parent: int, offset: int, width: int) -> Value:
        i = self._alloc(AtomDef(width, False, "slice", (parent, offset, width)))
        return Symbolic(i, width)

    def derive_concat(self, parts) -> Value:
        """parts: sequence of Concrete/Symbolic, most-significant first."""
        width = sum(p.width for p in parts)
        i = self._alloc(AtomDef(width, False, "concat",
                                tuple(self._opnd(p) for p in parts)))
        return Symbolic(i, width)

    def derive_hash(self, algorithm: str, output_width: int, segments) -> Value:
        """segments: sequence of (width, Concrete|Symbolic)."""
        args = tuple((w, self._opnd(v)) for w, v in segments)
        i = self._alloc(AtomDef(output_width, False, "hash",
                                (algorithm, output_width, args)))
        return Symbolic(i, output_width)

    def roots(self, atom: int) -> frozenset[int]:
        """Base atoms this atom's value depends on."""
        cached = self._roots.get(atom)
        if cached is not None:
            return cached
        d = self.defs[atom]
        if d.kind == "base":
            r = frozenset((atom,))
        else:
            r = frozenset()
            for ref in self._refs(d):
                r |= self.roots(ref)
        self._roots[atom] = r
        return r

    @staticmethod
    def _refs(d: AtomDef):
        if d.kind == "slice":
            return (d.args[0],)
        if d.kind in ("binop", "cmp"):
            return tuple(o[1] for o in d.args[1:] if o[0] == "atom")
        if d.kind == "concat":
            return tuple(o[1] for o in d.args if o[0] == "atom")
        if d.kind == "hash":
            return tuple(o[1] for _, o in d.args[2] if o[0] == "atom")
        return ()

    def evaluate(self, atom: int, assignment: dict[int, int],
                 _memo=None) -> Concrete:
        """Forward-evaluate an atom under a base-atom assignment.

        Unassigned base atoms default to 0.  Derived 'binop'/'cmp' atoms are
        evaluated through `apply_binop` so derived semantics match concrete
        execution exactly.
        """
        if _memo is None:
            _memo = {}
        if atom in _memo:
            return _memo[atom]
        d = self.defs[atom]

        def opval(o):
            if o[0] == "atom":
                return self.evaluate(o[1], assignment, _memo)
            return Concrete(o[2], o[1], o[3])

        if d.kind == "base":
            r = Concrete(d.width, assignment.get(atom, 0) & ((1 << d.width) - 1),
                         d.signed)
        elif d.kind in ("binop", "cmp"):
            op, a, b = d.args
            r = apply_binop(op, opval(a), opval(b))
            if r.width != d.width:
                r = truncate_to_width(r, d.width)
        elif d.kind == "slice":
            parent, off, w = d.args
            pv = self.evaluate(parent, assignment, _memo)
            r = Concrete(w, (pv.bits >> off) & ((1 << w) - 1))
        elif d.kind == "concat":
            bits = 0
            for o in d.args:
                v = opval(o)
                bits = (bits << v.width) | v.bits
            r = Concrete(d.width, bits)
        elif d.kind == "hash":
            from . import hashes
            algorithm, out_w, segs = d.args
            bits = 0
            nbits = 0
            for w, o in segs:
                v = opval(o)
                bits = (bits << w) | (v.bits & ((1 << w) - 1))
                nbits += w
            r = Concrete(out_w, hashes.compute(algorithm, bits, nbits, out_w))
        else:
            raise AssertionError(d.kind)
        _memo[atom] = r
        return r


# --------------------------------------------------------------------------
# Constraints

REL_EQ = "eq"
REL_NEQ = "neq"
REL_TERNARY = "ternary"
REL_RANGE = "range"


@dataclass(frozen=True)
class Constraint:
    """One relation between an atom and constant operand(s).

    `negated` complements ternary/range relations (eq/neq are already a
    complement pair and keep negated=False).
    """

    atom: int
    rel: str
    args: tuple
    width: int
    negated: bool = False

    def negate(self) -> "Constraint":
        if self.rel == REL_EQ:
            return Constraint(self.atom, REL_NEQ, self.args, self.width)
        if self.rel == REL_NEQ:
            return Constraint(self.atom, REL_EQ, self.args, self.width)
        return Constraint(self.atom, self.rel, self.args, self.width,
                          not self.negated)

    def holds(self, value: int) -> bool:
        if self.rel == REL_EQ:
            return value == self.args[0]
        if self.rel == REL_NEQ:
            return value != self.args[0]
        if self.rel == REL_TERNARY:
            v, m = self.args
            r = (value & m) == (v & m)
        else:
            lo, hi = self.args
            r = lo <= value <= hi
        return r != self.negated

    def pretty(self, atoms: "AtomTable | None" = None) -> str:
        name = f"a{self.atom}"
        if atoms is not None and atoms.defs.get(self.atom) is not None:
            lbl = atoms.defs[self.atom].label
            if lbl:
                name = lbl
        if self.rel == REL_EQ:
            return f"{name} == {self.args[0]:#x}"
        if self.rel == REL_NEQ:
            return f"{name} != {self.args[0]:#x}"
        if self.rel == REL_TERNARY:
            core = f"{name} &&& {self.args[1]:#x} == {self.args[0] & self.args[1]:#x}"
        else:
            core = f"{name} in [{self.args[0]:#x}, {self.args[1]:#x}]"
        return f"not({core})" if self.negated else core


def eq_constraint(sym: Symbolic, value: int) -> Constraint:
    return Constraint(sym.atom, REL_EQ, (value,), sym.width)


def neq_constraint(sym: Symbolic, value: int) -> Constraint:
    return Constraint(sym.atom, REL_NEQ, (value,), sym.width)


def ternary_constraint(sym: Symbolic, value: int, mask: int) -> Constraint:
    return Constraint(sym.atom, REL_TERNARY, (value, mask), sym.width)


def range_constraint(sym: Symbolic, lo: int, hi: int) -> Constraint:
    return Constraint(sym.atom, REL_RANGE, (lo, hi), sym.width)


SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"

_ENUM_WIDTH_LIMIT = 16
_WIDE_PROBE_BUDGET = 4096

_sat_cache: dict[tuple, tuple] = {}


def _constraint_key(c: Constraint, atoms: AtomTable) -> tuple:
    """Cache key for a constraint: atom ids plus their definitions.  Ids are
    preserved by AtomTable.clone, so keys are stable across branch copies."""

    def atom_key(a, seen):
        d = atoms.defs[a]
        if a in seen:
            return ("rec", a)
        seen = seen | {a}
        refs = tuple(atom_key(r, seen) for r in AtomTable._refs(d))
        return (a, d.kind, d.width, d.signed, d.args, refs)

    return (atom_key(c.atom, frozenset()), c.rel, c.args, c.width, c.negated)


def constraint_sat(constraints, atoms: AtomTable):
    """Decide satisfiability of a conjunction of constraints.

    Returns (status, witness) where status is 'sat' | 'unsat' | 'unknown'
    and witness maps base atom ids to ints (only on sat).  Components whose
    base atoms total at most 16 bits are decided exactly by enumeration;
    wider base atoms are decided by mask/interval propagation plus witness
    probing, else 'unknown'.
    """
    constraints = list(constraints)
    if not constraints:
        return SAT, {}
    key = tuple(sorted((_constraint_key(c, atoms) for c in constraints),
                       key=repr))
    cached = _sat_cache.get(key)
    if cached is not None:
        return cached

    # group constraints into connected components over base atoms
    comp_of: dict[int, int] = {}
    comps: list[list[Constraint]] = []
    comp_roots: list[set[int]] = []
    for c in constraints:
        roots = atoms.roots(c.atom)
        hit = sorted({comp_of[r] for r in roots if r in comp_of})
        if not hit:
            idx = len(comps)
            comps.append([c])
            comp_roots.append(set(roots))
        else:
            idx = hit[0]
            comps[idx].append(c)
            comp_roots[idx] |= set(roots)
            for other in hit[1:]:
                comps[idx].extend(comps[other])
                comp_roots[idx] |= comp_roots[other]
                comps[other] = []
                comp_roots[other] = set()
        for r in comp_roots[idx]:
            comp_of[r] = idx

    witness: dict[int, int] = {}
    unknown = False
    for cs, roots in zip(comps, comp_roots):
        if not cs:
            continue
        status, model = _decide_component(cs, sorted(roots), atoms)
        if status == UNSAT:
            result = (UNSAT, None)
            _sat_cache[key] = result
            return result
        if status == UNKNOWN:
            unknown = True
        else:
            witness.update(model)
    result = (UNKNOWN, None) if unknown else (SAT, witness)
    _sat_cache[key] = result
    return result


def _decide_component(cs, roots, atoms):
    total = sum(atoms.defs[r].width for r in roots)
    if total <= _ENUM_WIDTH_LIMIT:
        widths = [atoms.defs[r].width for r in roots]
        for combo in itertools.product(*[range(1 << w) for w in widths]):
            assignment = dict(zip(roots, combo))
            memo = {}
            if all(c.holds(atoms.evaluate(c.atom, assignment, memo).bits)
                   for c in cs):
                return SAT, assignment
        return UNSAT, None
    # wide component: only direct base-atom constraints are propagated
    if len(roots) != 1:
        return UNKNOWN, None
    root = roots[0]
    if any(c.atom != root for c in cs):
        return UNKNOWN, None
    return _propagate_single(cs, root, atoms.defs[root].width)


def _propagate_single(cs, root, width):
    full = (1 << width) - 1
    eqs = {c.args[0] for c in cs if c.rel == REL_EQ}
    if eqs:
        if len(eqs) > 1:
            return UNSAT, None
        v = next(iter(eqs))
        if all(c.holds(v) for c in cs):
            return SAT, {root: v}
        return UNSAT, None
    fixed_mask = 0
    fixed_val = 0
    lo, hi = 0, full
    for c in cs:
        if c.rel == REL_TERNARY and not c.negated:
            v, m = c.args
            if (fixed_val ^ (v & m)) & (fixed_mask & m):
                return UNSAT, None
            fixed_mask |= m
            fixed_val |= v & m
        elif c.rel == REL_RANGE and not c.negated:
            lo, hi = max(lo, c.args[0]), min(hi, c.args[1])
    if lo > hi:
        return UNSAT, None
    if fixed_val > hi or (fixed_val | (full & ~fixed_mask)) < lo:
        return UNSAT, None
    free_positions = [i for i in range(width) if not (fixed_mask >> i) & 1]

    def scatter(k):
        x = fixed_val
        for j, pos in enumerate(free_positions):
            if (k >> j) & 1:
                x |= 1 << pos
        return x

    # scan valid patterns in increasing order; the scan is complete when it
    # runs off the top of the range or exhausts the pattern space, in which
    # case a failure to find a witness is a definite unsat
    n_patterns = 1 << min(len(free_positions), 60)
    complete = True
    for k in range(min(_WIDE_PROBE_BUDGET, n_patterns)):
        x = scatter(k)
        if x > hi:
            break
        if x < lo:
            continue
        if all(c.holds(x) for c in cs):
            return SAT, {root: x}
    else:
        complete = _WIDE_PROBE_BUDGET >= n_patterns
    if complete:
        return UNSAT, None
    return UNKNOWN, None
