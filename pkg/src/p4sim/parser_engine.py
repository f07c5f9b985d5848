"""Execution of the parser state machine over the current packet.

Covers extraction (including header stacks and variable-length fields),
select dispatch, exception handling, and end-of-parse checksum verification.
A handler that continues to ingress skips any remaining verification: the
checksum exception is itself raised during verification.
"""

from __future__ import annotations

import itertools

from . import syntax as S
from . import hashes
from .errors import (StuckError, ParserException, P4Error,
                     UNDEF_IN_EXPR, BAD_VARBIT_LEN, PARSE_LOOP_BUDGET,
                     NO_BRANCH)
from .exprs import ParserEnv, eval_expr, eval_bool, compare_eq, resolve_instref
from .values import (Concrete, Symbolic, is_undef, truncate_to_width,
                     eq_constraint, ternary_constraint)


def extract(cfg, ctx, target: S.InstRef, env, site="extract"):
    """Deserialize the header at the current offset into an instance."""
    program = cfg.program
    if target.base in program.stacks and target.index == "next":
        idx = cfg.stack_next_index(target.base)
        if idx is None:
            raise ParserException(ParserException.STACK_FULL, site)
        elem = f"{target.base}[{idx}]"
        ctx.hit("parser.extract.stack")
    else:
        elem = resolve_instref(cfg, target, env)
        if elem is None:
            raise StuckError(UNDEF_IN_EXPR, site,
                             f"cannot resolve extract target {target.render()}")
    info = program.instances[elem]
    ht = info.htype
    fields_frame = {}
    for f in ht.fields:
        if f.varbit:
            width = _varbit_width(cfg, ctx, ht, fields_frame, site)
            ctx.hit("parser.extract.varbit")
        else:
            width = f.width
        v = cfg.packet_in.read(cfg.parse_offset, width, cfg.atoms)
        if v is None:
            raise ParserException(ParserException.TOO_SHORT,
                                  f"{site}({elem}.{f.name})")
        cfg.set_field_raw(elem, f.name, v)
        fields_frame[f.name] = v
        cfg.parse_offset += width
    cfg.set_validity(elem, True)
    cfg.latest = elem
    ctx.hit("parser.extract")


def _varbit_width(cfg, ctx, ht, fields_frame, site):
    """Bits of the variable-length field: header length minus fixed bits.

    The length expression gives the total header length in bytes and may
    reference only fields declared before the variable-length field."""
    v = eval_expr(cfg, ctx, ht.length_expr, frame=fields_frame, site=site)
    if not isinstance(v, Concrete):
        raise StuckError(BAD_VARBIT_LEN, site,
                         "length expression is not concrete")
    total_bytes = v.as_int()
    if total_bytes < 0:
        raise StuckError(BAD_VARBIT_LEN, site,
                         f"negative header length {total_bytes}")
    if ht.max_length is not None and total_bytes > ht.max_length:
        raise StuckError(BAD_VARBIT_LEN, site,
                         f"length {total_bytes} exceeds max_length "
                         f"{ht.max_length}")
    width = total_bytes * 8 - ht.fixed_bits
    if width < 0 or width % 8:
        raise StuckError(BAD_VARBIT_LEN, site,
                         f"variable part of {width} bits is not a whole "
                         "number of bytes")
    return width


def _decompose_case(values, widths, case_value, case_mask, site):
    """Split a select case constant (and mask) into per-operand parts."""
    total = sum(widths)
    if case_value >= (1 << total):
        raise P4Error("WIDTH_OVERFLOW",
                      f"select case value {case_value:#x} does not fit the "
                      f"{total}-bit operand tuple", site)
    parts = []
    shift = total
    for w in widths:
        shift -= w
        cv = (case_value >> shift) & ((1 << w) - 1)
        cm = (case_mask >> shift) & ((1 << w) - 1)
        parts.append((cv, cm))
    return parts


def eval_select(cfg, ctx, sel: S.ReturnSelect, env, site="select"):
    """First branch whose value/mask matches wins; symbolic operands fork."""
    values = []
    for op in sel.operands:
        v = eval_expr(cfg, ctx, op, parser_env=env, site=site)
        if is_undef(v):
            raise StuckError(UNDEF_IN_EXPR, site, "select on undefined value")
        values.append(v)
    widths = [v.width for v in values]
    for case in sel.cases:
        if case.value is None:
            ctx.hit("parser.select.default")
            return case.target
        cv = case.value.value
        cm = case.mask.value if case.mask is not None else (1 << sum(widths)) - 1
        parts = _decompose_case(values, widths, cv, cm, case.span)
        matched = True
        for v, (pv, pm) in zip(values, parts):
            if pm == 0:
                continue
            if isinstance(v, Concrete):
                if (v.bits ^ pv) & pm:
                    matched = False
                    break
            else:
                assert isinstance(v, Symbolic)
                full = (1 << v.width) - 1
                c = (eq_constraint(v, pv) if pm == full
                     else ternary_constraint(v, pv, pm))
                picked = ctx.fork_constraints(
                    "symbolic-branch", site,
                    [("case", [c]), ("skip", [c.negate()])])
                if picked != 0:
                    matched = False
                    break
        if matched:
            ctx.hit("parser.select.mask" if case.mask is not None
                    else "parser.select.value")
            return case.target
    raise StuckError(NO_BRANCH, site,
                     "no select branch matches and there is no default")


def verify_calculated_fields(cfg, ctx):
    """End-of-parse checksum verification; a mismatch raises the checksum
    exception.  With several pending verifications the order is explored."""
    pending = [cl for cl in cfg.program.clauses_for("verify")
               if cfg.is_valid(cl.inst)]
    if not pending:
        return
    order = list(range(len(pending)))
    if len(pending) > 1:
        perms = list(itertools.permutations(order))
        pick = ctx.choose(
            "verify-order", "verify_calculated_fields",
            [",".join(f"{pending[i].inst}.{pending[i].field}" for i in p)
             for p in perms])
        order = list(perms[pick])
    for i in order:
        cl = pending[i]
        site = f"verify({cl.inst}.{cl.field})"
        if cl.cond is not None and not eval_bool(cfg, ctx, cl.cond, site=site):
            continue
        computed = compute_calculation(cfg, cl.calc)
        ctx.hit(f"hash.{cfg.program.calcs[cl.calc].algorithm}")
        stored = cfg.get_field(cl.inst, cl.field)
        if is_undef(stored):
            raise StuckError(UNDEF_IN_EXPR, site, "stored checksum undefined")
        fw = cfg.program.field_width(cl.inst, cl.field)
        if fw is not None:
            computed = truncate_to_width(computed, fw, cfg.atoms, site)
        if compare_eq(cfg, ctx, stored, computed, site):
            ctx.hit("parser.verify_ok")
        else:
            ctx.hit("parser.verify_fail")
            raise ParserException(ParserException.CHECKSUM, site)


def compute_calculation(cfg, calc_name):
    from .program import flatten_field_list
    calc = cfg.program.calcs[calc_name]
    items = []
    for ln in calc.inputs:
        items.extend(flatten_field_list(cfg.program, ln))
    segments = hashes.serialize_field_list(cfg, items)
    return hashes.hash_segments(cfg, calc.algorithm, calc.output_width,
                                segments)


def dispatch_exception(cfg, ctx, exc: ParserException):
    handler = cfg.program.handlers.get(exc.name)
    if handler is None:
        ctx.hit("parser.handler_default")
        cfg.dropped = True
        return
    ctx.hit("parser.handler")
    env = ParserEnv(cfg)
    for stmt in handler.stmts:
        _set_metadata(cfg, ctx, stmt, env)
    if handler.action == "drop":
        ctx.hit("parser.handler_drop")
        cfg.dropped = True
    else:
        ctx.hit("parser.handler_ingress")


def _set_metadata(cfg, ctx, stmt: S.SetMetaStmt, env):
    site = f"set_metadata:{stmt.span[0]}"
    v = eval_expr(cfg, ctx, stmt.value, parser_env=env, site=site)
    cfg.set_field(stmt.target.ref.base, stmt.target.field, v, site)
    ctx.hit("parser.set_metadata")


def run_parser(cfg, ctx):
    """Run the state machine from `start` until ingress, drop, or stuck."""
    if "start" not in cfg.program.parser_states:
        raise StuckError(UNDEF_IN_EXPR, "parser", "program has no parser")
    env = ParserEnv(cfg)
    budget = cfg.parse_budget
    state = "start"
    try:
        while True:
            if budget <= 0:
                raise StuckError(PARSE_LOOP_BUDGET, f"parser:{state}",
                                 f"exceeded {cfg.parse_budget} transitions")
            budget -= 1
            st = cfg.program.parser_states[state]
            for stmt in st.stmts:
                if isinstance(stmt, S.ExtractStmt):
                    extract(cfg, ctx, stmt.target, env,
                            f"extract:{state}")
                else:
                    _set_metadata(cfg, ctx, stmt, env)
            if isinstance(st.ret, S.ReturnDirect):
                target = st.ret.target
                ctx.hit("parser.return")
            else:
                target = eval_select(cfg, ctx, st.ret, env,
                                     f"select:{state}")
            kind, name = target
            if kind == "ingress":
                break
            if kind == "error":
                ctx.hit("parser.parse_error")
                raise ParserException(name, f"parser:{state}")
            state = name
        verify_calculated_fields(cfg, ctx)
    except ParserException as exc:
        dispatch_exception(cfg, ctx, exc)
