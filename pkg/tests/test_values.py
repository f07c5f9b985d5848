import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from p4sim.errors import StuckError, P4Error
from p4sim.values import (AtomTable, Concrete, Constraint, Symbolic, UNDEF,
                          apply_binop, constraint_sat, eq_constraint,
                          infer_const_width, neq_constraint, range_constraint,
                          ternary_constraint, truncate_to_width,
                          BINOPS, CMPOPS, SAT, UNSAT, UNKNOWN)


# -- independent oracle -------------------------------------------------------

def _as_int(bits, width, signed):
    if signed and width and (bits >> (width - 1)) & 1:
        return bits - (1 << width)
    return bits


def oracle_binop(op, a, b):
    """Arbitrary-precision recomputation followed by masking to the
    promoted width; written independently of apply_binop."""
    width = max(a.width, b.width)
    mask = (1 << width) - 1
    av = _as_int(a.bits, a.width, a.signed)
    bv = _as_int(b.bits, b.width, b.signed)
    if op in CMPOPS:
        if op == "==":
            return int((av & mask) == (bv & mask))
        if op == "!=":
            return int((av & mask) != (bv & mask))
        table = {"<": av < bv, "<=": av <= bv, ">": av > bv, ">=": av >= bv}
        return int(table[op])
    if op == "<<":
        if bv < 0:
            return None
        return (av * (2 ** bv)) & mask
    if op == ">>":
        if bv < 0:
            return None
        return (av // (2 ** bv)) & mask if av >= 0 else (av >> bv) & mask
    plain = {"+": av + bv, "-": av - bv, "*": av * bv,
             "&": av & bv, "|": av | bv, "^": av ^ bv}
    return plain[op] & mask


def all_concretes(width):
    for bits in range(1 << width):
        for signed in (False, True):
            yield Concrete(width, bits, signed)


def test_binop_agrees_with_oracle_exhaustively_widths_le_4():
    checked = 0
    for wa, wb in itertools.product(range(1, 5), repeat=2):
        for a in all_concretes(wa):
            for b in all_concretes(wb):
                for op in BINOPS + CMPOPS:
                    expected = oracle_binop(op, a, b)
                    if expected is None:
                        with pytest.raises(StuckError) as ei:
                            apply_binop(op, a, b)
                        assert ei.value.reason == "NEGATIVE_SHIFT"
                        continue
                    got = apply_binop(op, a, b)
                    assert got.bits == expected, (op, a, b)
                    if op in CMPOPS:
                        assert got.width == 1
                    else:
                        assert got.width == max(wa, wb)
                    checked += 1
    assert checked > 40_000


def test_binop_examples():
    r = apply_binop("+", Concrete(8, 0xFF), Concrete(8, 0x01))
    assert (r.width, r.bits) == (8, 0x00)
    with pytest.raises(StuckError) as ei:
        apply_binop("&", UNDEF, Concrete(8, 1))
    assert ei.value.reason == "UNDEF_IN_EXPR"
    # (3-bit 5) + (4-bit signed -5): promote, wrap at 4 bits
    a = Concrete(3, 5)
    b = infer_const_width(-5, negative_literal=True)
    assert (b.width, b.bits, b.signed) == (4, 0b1011, True)
    r = apply_binop("+", a, b)
    assert (r.width, r.bits) == (4, 0)


def test_negative_shift_sticks():
    amt = infer_const_width(-1, negative_literal=True)
    with pytest.raises(StuckError) as ei:
        apply_binop("<<", Concrete(8, 1), amt)
    assert ei.value.reason == "NEGATIVE_SHIFT"


def test_infer_const_width_examples():
    v = infer_const_width(5)
    assert (v.width, v.bits, v.signed) == (3, 0b101, False)
    v = infer_const_width(-5, negative_literal=True)
    assert (v.width, v.bits) == (4, 0b1011)
    v = infer_const_width(0)
    assert (v.width, v.bits) == (1, 0)


def test_infer_const_width_explicit():
    v = infer_const_width(255, explicit_width=8)
    assert (v.width, v.bits) == (8, 255)
    with pytest.raises(P4Error) as ei:
        infer_const_width(256, explicit_width=8)
    assert ei.value.code == "WIDTH_OVERFLOW"
    with pytest.raises(P4Error):
        infer_const_width(200, explicit_width=8, signed=True)


def test_negative_width_is_positive_width_plus_one_small_exhaustive():
    for n in range(1, 4097):
        assert (infer_const_width(-n, negative_literal=True).width
                == infer_const_width(n).width + 1)


@settings(max_examples=300)
@given(st.integers(min_value=1, max_value=2 ** 20))
def test_negative_width_is_positive_width_plus_one(n):
    assert (infer_const_width(-n, negative_literal=True).width
            == infer_const_width(n).width + 1)


def test_truncate():
    assert truncate_to_width(Concrete(9, 0x1FF), 8).bits == 0xFF
    assert truncate_to_width(Concrete(8, 0x42), 8).bits == 0x42
    with pytest.raises(StuckError):
        truncate_to_width(UNDEF, 8)


def test_truncate_concrete_magnitude_bound():
    rng = random.Random(7)
    for _ in range(500):
        w = rng.randint(1, 32)
        v = Concrete(rng.randint(w, 64), 0)
        v = Concrete(v.width, rng.getrandbits(v.width))
        t = truncate_to_width(v, w)
        assert t.width == w and t.bits < (1 << w)


# -- constraints ----------------------------------------------------------------


def _sym(atoms, width):
    return Symbolic(atoms.fresh_base(width), width)


def test_constraint_sat_neq_example():
    atoms = AtomTable()
    et = _sym(atoms, 16)
    status, witness = constraint_sat([neq_constraint(et, 0x0800)], atoms)
    assert status == SAT
    assert witness[et.atom] != 0x0800


def test_constraint_sat_contradiction():
    atoms = AtomTable()
    x = _sym(atoms, 8)
    status, _ = constraint_sat([eq_constraint(x, 3), neq_constraint(x, 3)],
                               atoms)
    assert status == UNSAT


def test_constraint_sat_ternary_range_unsat_vs_bruteforce():
    atoms = AtomTable()
    x = _sym(atoms, 6)
    cs = [ternary_constraint(x, 0b100000, 0b110000),
          range_constraint(x, 0, 15)]
    # independent oracle: exhaustive scan over all 64 values
    assert not [v for v in range(64) if all(c.holds(v) for c in cs)]
    status, _ = constraint_sat(cs, atoms)
    assert status == UNSAT


def _random_constraints(rng, sym):
    out = []
    top = (1 << sym.width) - 1
    for _ in range(rng.randint(1, 4)):
        kind = rng.choice(["eq", "neq", "tern", "terneg", "range", "rangeneg"])
        if kind == "eq":
            out.append(eq_constraint(sym, rng.randint(0, top)))
        elif kind == "neq":
            out.append(neq_constraint(sym, rng.randint(0, top)))
        elif kind in ("tern", "terneg"):
            c = ternary_constraint(sym, rng.randint(0, top),
                                   rng.randint(0, top))
            out.append(c.negate() if kind == "terneg" else c)
        else:
            lo = rng.randint(0, top)
            hi = rng.randint(lo, top)
            c = range_constraint(sym, lo, hi)
            out.append(c.negate() if kind == "rangeneg" else c)
    return out


def test_constraint_sat_matches_enumeration_oracle():
    rng = random.Random(2024)
    atoms = AtomTable()
    for _ in range(300):
        width = rng.randint(1, 8)
        sym = _sym(atoms, width)
        cs = _random_constraints(rng, sym)
        sat_values = [v for v in range(1 << width)
                      if all(c.holds(v) for c in cs)]
        status, witness = constraint_sat(cs, atoms)
        if sat_values:
            assert status == SAT
            assert all(c.holds(witness[sym.atom]) for c in cs)
        else:
            assert status == UNSAT


def test_constraint_sat_wide_atoms():
    atoms = AtomTable()
    x = _sym(atoms, 48)
    status, witness = constraint_sat([neq_constraint(x, 0)], atoms)
    assert status == SAT and witness[x.atom] != 0
    status, _ = constraint_sat([eq_constraint(x, 5), eq_constraint(x, 6)],
                               atoms)
    assert status == UNSAT
    y = _sym(atoms, 32)
    status, witness = constraint_sat(
        [ternary_constraint(y, 0xFF000000, 0xFF000000),
         range_constraint(y, 0xFF000000, 0xFF0000FF)], atoms)
    assert status == SAT
    v = witness[y.atom]
    assert (v & 0xFF000000) == 0xFF000000 and v <= 0xFF0000FF
    status, _ = constraint_sat(
        [ternary_constraint(y, 0, 0x80000000),
         range_constraint(y, 0x80000000, 0xFFFFFFFF)], atoms)
    assert status == UNSAT


def test_constraint_sat_witness_replays():
    # sat results always carry a witness that satisfies every constraint
    rng = random.Random(99)
    atoms = AtomTable()
    for _ in range(200):
        width = rng.randint(1, 16)
        sym = _sym(atoms, width)
        cs = _random_constraints(rng, sym)
        status, witness = constraint_sat(cs, atoms)
        if status == SAT:
            assert all(c.holds(witness[sym.atom]) for c in cs)


# -- derived atoms ----------------------------------------------------------------


def test_derived_binop_evaluation():
    atoms = AtomTable()
    a = _sym(atoms, 8)
    d = atoms.derive_binop("+", a, Concrete(8, 1))
    assert isinstance(d, Symbolic) and d.width == 8
    assert atoms.evaluate(d.atom, {a.atom: 0xFF}).bits == 0x00
    status, witness = constraint_sat([eq_constraint(d, 0)], atoms)
    assert status == SAT and witness[a.atom] == 0xFF


def test_derived_slice_concat():
    atoms = AtomTable()
    a = _sym(atoms, 8)
    s = atoms.derive_slice(a.atom, 4, 4)  # high nibble
    assert atoms.evaluate(s.atom, {a.atom: 0xAB}).bits == 0xA
    c = atoms.derive_concat([Concrete(4, 0xF), s])
    assert atoms.evaluate(c.atom, {a.atom: 0xAB}).bits == 0xFA


def test_derived_two_atom_component():
    atoms = AtomTable()
    a = _sym(atoms, 4)
    b = _sym(atoms, 4)
    d = atoms.derive_binop("+", a, b)
    status, witness = constraint_sat([eq_constraint(d, 0xF),
                                      eq_constraint(a, 0x1)], atoms)
    assert status == SAT
    assert witness[a.atom] == 1 and (witness[a.atom] + witness[b.atom]) & 0xF == 0xF


def test_derived_hash_atom():
    from p4sim.hashes import compute
    atoms = AtomTable()
    a = _sym(atoms, 16)
    h = atoms.derive_hash("csum16", 16, [(16, a), (16, Concrete(16, 0x1234))])
    got = atoms.evaluate(h.atom, {a.atom: 0xABCD})
    bits = (0xABCD << 16) | 0x1234
    assert got.bits == compute("csum16", bits, 32, 16)


def test_unknown_for_wide_derived():
    atoms = AtomTable()
    a = _sym(atoms, 32)
    d = atoms.derive_binop("+", a, Concrete(32, 1))
    status, _ = constraint_sat([eq_constraint(d, 7)], atoms)
    assert status == UNKNOWN  # not decidable by per-atom propagation
