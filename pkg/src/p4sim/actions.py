"""Table application, entry matching, and the primitive-action catalog."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import syntax as S
from . import hashes
from .errors import (StuckError, READ_INVALID_HEADER, UNDEF_IN_EXPR,
                     UNKNOWN_PRIMITIVE, UNSPECIFIED_PRIMITIVE_CASE, CALL_DEPTH)
from .exprs import eval_expr, resolve_instref
from .state import Packet
from .values import (Concrete, Symbolic, UNDEF, is_undef, apply_binop,
                     truncate_to_width, eq_constraint, neq_constraint,
                     ternary_constraint, range_constraint)

MAX_CALL_DEPTH = 128


# -- argument resolution ------------------------------------------------------


def _as_ref(cfg, arg, frame, name, site):
    if isinstance(arg, S.FieldRef):
        elem = resolve_instref(cfg, arg.ref)
        if elem is None:
            raise StuckError(UNSPECIFIED_PRIMITIVE_CASE, site,
                             f"{name}: unresolved field reference")
        return ("ref", elem, arg.field)
    if isinstance(arg, S.Ident) and frame and arg.name in frame:
        bound = frame[arg.name]
        if isinstance(bound, tuple) and bound and bound[0] == "ref":
            return bound
    raise StuckError(UNSPECIFIED_PRIMITIVE_CASE, site,
                     f"{name}: argument is not a field reference")


def _as_int(v, name, site, *, minimum=None):
    if not isinstance(v, Concrete):
        raise StuckError(UNSPECIFIED_PRIMITIVE_CASE, site,
                         f"{name}: needs a concrete argument")
    x = v.as_int()
    if minimum is not None and x < minimum:
        raise StuckError(UNSPECIFIED_PRIMITIVE_CASE, site,
                         f"{name}: argument {x} out of range")
    return x


def resolve_args(cfg, ctx, prim, call_args, frame, site):
    out = []
    for role, arg in zip(prim.roles, call_args):
        if role == "field":
            out.append(_as_ref(cfg, arg, frame, prim.name, site))
        elif role in ("inst", "stack"):
            if isinstance(arg, S.Ident):
                out.append(arg.name)
            elif isinstance(arg, S.InstRef):
                elem = resolve_instref(cfg, arg)
                if elem is None:
                    raise StuckError(UNSPECIFIED_PRIMITIVE_CASE, site,
                                     f"{prim.name}: no such element")
                out.append(elem)
            else:
                raise StuckError(UNSPECIFIED_PRIMITIVE_CASE, site,
                                 f"{prim.name}: expected an instance")
        elif role in ("register", "counter", "meter", "field_list", "calc"):
            assert isinstance(arg, S.Ident)
            out.append(arg.name)
        else:  # "val"
            out.append(eval_expr(cfg, ctx, arg, frame, site=site))
    return out


# -- primitive semantics --------------------------------------------------------


def _set(cfg, ref, v, site):
    cfg.set_field(ref[1], ref[2], v, site)


def _get(cfg, ref):
    return cfg.get_field(ref[1], ref[2])


def _prim_modify_field(cfg, ctx, a, site):
    if len(a) == 2:
        _set(cfg, a[0], a[1], site)
    else:
        cur = _get(cfg, a[0])
        mask = a[2]
        full = apply_binop("|", apply_binop("&", cur, _invert(cfg, mask, site),
                                            cfg.atoms, site),
                           apply_binop("&", a[1], mask, cfg.atoms, site),
                           cfg.atoms, site)
        _set(cfg, a[0], full, site)


def _invert(cfg, v, site):
    if is_undef(v):
        raise StuckError(UNDEF_IN_EXPR, site, "inverting undefined mask")
    ones = Concrete(v.width, (1 << v.width) - 1)
    return apply_binop("^", v, ones, cfg.atoms, site)


def _prim_arith2(op):
    def fn(cfg, ctx, a, site):
        cur = _get(cfg, a[0])
        _set(cfg, a[0], apply_binop(op, cur, a[1], cfg.atoms, site), site)
    return fn


def _prim_arith3(op):
    def fn(cfg, ctx, a, site):
        _set(cfg, a[0], apply_binop(op, a[1], a[2], cfg.atoms, site), site)
    return fn


def _zero_fill(cfg, elem):
    htype = cfg.program.instances[elem].htype
    for f in htype.fields:
        cfg.set_field_raw(elem, f.name,
                          Concrete(f.width, 0) if f.width is not None
                          else Concrete(0, 0))


def _prim_add_header(cfg, ctx, a, site):
    cfg.set_validity(a[0], True)
    _zero_fill(cfg, a[0])


def _prim_remove_header(cfg, ctx, a, site):
    cfg.set_validity(a[0], False)
    for f in cfg.program.instances[a[0]].htype.fields:
        cfg.set_field_raw(a[0], f.name, UNDEF)


def _prim_copy_header(cfg, ctx, a, site):
    dst, src = a
    if cfg.program.instances[dst].htype.name \
            != cfg.program.instances[src].htype.name:
        raise StuckError(UNSPECIFIED_PRIMITIVE_CASE, site,
                         "copy_header between different header types")
    valid, fields = cfg.instances[src]
    cfg.instances[dst] = [valid, dict(fields)]


def _prim_push(cfg, ctx, a, site):
    count = _as_int(a[1], "push", site) if len(a) > 1 else 1
    cfg.stack_push(a[0], count, site)


def _prim_pop(cfg, ctx, a, site):
    count = _as_int(a[1], "pop", site) if len(a) > 1 else 1
    cfg.stack_pop(a[0], count, site)


def _prim_register_read(cfg, ctx, a, site):
    idx = _as_int(a[2], "register_read", site, minimum=0)
    _set(cfg, a[0], cfg.register_read(a[1], idx, site), site)


def _prim_register_write(cfg, ctx, a, site):
    idx = _as_int(a[1], "register_write", site, minimum=0)
    cfg.register_write(a[0], idx, a[2], site)


def _prim_count(cfg, ctx, a, site):
    idx = _as_int(a[1], "count", site, minimum=0)
    cfg.count_increment(a[0], idx, cfg.packet_len_bytes, site)


def _prim_execute_meter(cfg, ctx, a, site):
    idx = _as_int(a[1], "execute_meter", site, minimum=0)
    cfg.meter_execute(a[0], idx, site)  # rate model is target specific: no-op


def _prim_drop(cfg, ctx, a, site):
    cfg.dropped = True


def _prim_no_op(cfg, ctx, a, site):
    pass


def _prim_truncate(cfg, ctx, a, site):
    cfg.truncate_len = _as_int(a[0], "truncate", site, minimum=0)


def _prim_hash_offset(cfg, ctx, a, site):
    from .program import flatten_field_list
    dest, base, calc_name, size_v = a
    size = _as_int(size_v, "modify_field_with_hash_based_offset", site,
                   minimum=1)
    calc = cfg.program.calcs[calc_name]
    items = []
    for ln in calc.inputs:
        items.extend(flatten_field_list(cfg.program, ln))
    segments = hashes.serialize_field_list(cfg, items)
    ctx.hit(f"hash.{calc.algorithm}")
    hv = hashes.hash_segments(cfg, calc.algorithm, calc.output_width, segments)
    if isinstance(hv, Symbolic):
        modded = cfg.atoms.derive_binop("%", hv, Concrete(hv.width, size))
    else:
        modded = Concrete(hv.width, hv.bits % size)
    _set(cfg, dest, apply_binop("+", base, modded, cfg.atoms, site), site)


def _snapshot_parsed(cfg):
    inst = tuple(sorted(
        (name, valid, tuple(sorted(fields.items())))
        for name, (valid, fields) in cfg.instances.items()))
    return (inst, cfg.payload)


def _spawn(cfg, data, *, skip_ingress=False, recirculated=False, parsed=None):
    cur = cfg.current_packet
    return Packet(cur.port, data, skip_ingress=skip_ingress,
                  recirculated=recirculated, parsed=parsed,
                  lineage=cur.lineage + (cur.pid,))


def _prim_resubmit(cfg, ctx, a, site):
    cfg.resubmit_req = True


def _prim_recirculate(cfg, ctx, a, site):
    cfg.recirc_req = True


def _prim_clone_i2i(cfg, ctx, a, site):
    cfg.in_stream.append(_spawn(cfg, cfg.current_packet.data,
                                recirculated=True))


def _prim_clone_e2i(cfg, ctx, a, site):
    cfg.clone_e2i_req = True  # the deparsed bytes exist only after deparsing


def _prim_clone_to_egress(cfg, ctx, a, site):
    cfg.in_stream.append(_spawn(cfg, cfg.current_packet.data,
                                skip_ingress=True,
                                parsed=_snapshot_parsed(cfg)))


def _prim_generate_digest(cfg, ctx, a, site):
    from .program import flatten_field_list
    receiver = _as_int(a[0], "generate_digest", site, minimum=0)
    items = flatten_field_list(cfg.program, a[1])
    segments = hashes.serialize_field_list(cfg, items)
    cfg.digests.append((receiver, tuple((w, repr(v)) for w, v in segments)))


@dataclass(frozen=True)
class PrimitiveDef:
    name: str
    min_args: int
    max_args: int
    roles: tuple
    fn: object


def _prim(name, min_args, max_args, roles, fn):
    return name, PrimitiveDef(name, min_args, max_args, roles, fn)


PRIMITIVES = dict([
    _prim("modify_field", 2, 3, ("field", "val", "val"), _prim_modify_field),
    _prim("add_to_field", 2, 2, ("field", "val"), _prim_arith2("+")),
    _prim("subtract_from_field", 2, 2, ("field", "val"), _prim_arith2("-")),
    _prim("add", 3, 3, ("field", "val", "val"), _prim_arith3("+")),
    _prim("subtract", 3, 3, ("field", "val", "val"), _prim_arith3("-")),
    _prim("bit_and", 3, 3, ("field", "val", "val"), _prim_arith3("&")),
    _prim("bit_or", 3, 3, ("field", "val", "val"), _prim_arith3("|")),
    _prim("bit_xor", 3, 3, ("field", "val", "val"), _prim_arith3("^")),
    _prim("shift_left", 3, 3, ("field", "val", "val"), _prim_arith3("<<")),
    _prim("shift_right", 3, 3, ("field", "val", "val"), _prim_arith3(">>")),
    _prim("add_header", 1, 1, ("inst",), _prim_add_header),
    _prim("remove_header", 1, 1, ("inst",), _prim_remove_header),
    _prim("copy_header", 2, 2, ("inst", "inst"), _prim_copy_header),
    _prim("push", 1, 2, ("stack", "val"), _prim_push),
    _prim("pop", 1, 2, ("stack", "val"), _prim_pop),
    _prim("register_read", 3, 3, ("field", "register", "val"),
          _prim_register_read),
    _prim("register_write", 3, 3, ("register", "val", "val"),
          _prim_register_write),
    _prim("count", 2, 2, ("counter", "val"), _prim_count),
    _prim("execute_meter", 2, 3, ("meter", "val", "field"),
          _prim_execute_meter),
    _prim("drop", 0, 0, (), _prim_drop),
    _prim("no_op", 0, 0, (), _prim_no_op),
    _prim("truncate", 1, 1, ("val",), _prim_truncate),
    _prim("modify_field_with_hash_based_offset", 4, 4,
          ("field", "val", "calc", "val"), _prim_hash_offset),
    _prim("resubmit", 0, 1, ("field_list",), _prim_resubmit),
    _prim("recirculate", 0, 1, ("field_list",), _prim_recirculate),
    _prim("clone_ingress_pkt_to_ingress", 1, 2, ("val", "field_list"),
          _prim_clone_i2i),
    _prim("clone_egress_pkt_to_ingress", 1, 2, ("val", "field_list"),
          _prim_clone_e2i),
    _prim("clone_ingress_pkt_to_egress", 1, 2, ("val", "field_list"),
          _prim_clone_to_egress),
    _prim("clone_egress_pkt_to_egress", 1, 2, ("val", "field_list"),
          _prim_clone_to_egress),
    _prim("generate_digest", 2, 2, ("val", "field_list"),
          _prim_generate_digest),
])


def exec_primitive(cfg, ctx, name, resolved_args, site="primitive"):
    prim = PRIMITIVES.get(name)
    if prim is None:
        extra = dict(cfg.profile.primitives)
        if name in extra:
            extra[name](cfg, ctx, resolved_args, site)
            return
        raise StuckError(UNKNOWN_PRIMITIVE, site, name)
    ctx.hit(f"prim.{name}")
    prim.fn(cfg, ctx, resolved_args, site)


# -- compound actions ------------------------------------------------------------


def exec_action(cfg, ctx, name, args, site="action", depth=0):
    """Run a compound action with already-evaluated arguments.

    `args` may contain Values or ("ref", inst, field) bindings.  Statements
    run strictly in order; nested compound calls push new frames.
    """
    if depth >= MAX_CALL_DEPTH:
        raise StuckError(CALL_DEPTH, site,
                         f"action call depth exceeded {MAX_CALL_DEPTH}")
    action = cfg.program.actions[name]
    frame = dict(zip(action.params, args))
    cfg.frames.append(frame)
    ctx.hit("action.call")
    try:
        for call in action.body:
            call_site = f"{site}/{name}:{call.span[0]}"
            if call.name in cfg.program.actions:
                callee_args = []
                for arg in call.args:
                    if isinstance(arg, S.FieldRef):
                        callee_args.append(
                            _as_ref(cfg, arg, frame, call.name, call_site))
                    elif (isinstance(arg, S.Ident) and arg.name in frame
                          and isinstance(frame[arg.name], tuple)
                          and frame[arg.name][0] == "ref"):
                        callee_args.append(frame[arg.name])
                    else:
                        callee_args.append(
                            eval_expr(cfg, ctx, arg, frame, site=call_site))
                exec_action(cfg, ctx, call.name, callee_args, call_site,
                            depth + 1)
            else:
                prim = PRIMITIVES.get(call.name)
                if prim is None:
                    raise StuckError(UNKNOWN_PRIMITIVE, call_site, call.name)
                resolved = resolve_args(cfg, ctx, prim, call.args, frame,
                                        call_site)
                exec_primitive(cfg, ctx, call.name, resolved, call_site)
    finally:
        cfg.frames.pop()


# -- matching ----------------------------------------------------------------------


def _lpm_mask(width, plen):
    return ((1 << plen) - 1) << (width - plen) if plen else 0


def _match_one(cfg, ctx, kind, spec, value, width, site):
    """Match a single read value against one entry spec; symbolic values
    fork with the match constraint versus its negation."""
    if kind == "valid":
        return value.bits == spec[1]
    if isinstance(value, Concrete):
        bits = value.bits
        if kind == "exact":
            return bits == spec[1]
        if kind == "ternary":
            return (bits & spec[2]) == (spec[1] & spec[2])
        if kind == "lpm":
            m = _lpm_mask(width, spec[2])
            return (bits & m) == (spec[1] & m)
        return spec[1] <= bits <= spec[2]
    assert isinstance(value, Symbolic)
    if kind == "exact":
        c = eq_constraint(value, spec[1])
    elif kind == "ternary":
        c = ternary_constraint(value, spec[1], spec[2])
    elif kind == "lpm":
        c = ternary_constraint(value, spec[1], _lpm_mask(width, spec[2]))
    else:
        c = range_constraint(value, spec[1], spec[2])
    picked = ctx.fork_constraints("symbolic-branch", site,
                                  [("match", [c]), ("miss", [c.negate()])])
    return picked == 0


def entry_matches(cfg, ctx, entry, table_info, values, site):
    for rs, spec, value in zip(table_info.reads, entry.specs, values):
        if not _match_one(cfg, ctx, spec[0], spec, value, rs.width, site):
            return False
    return True


def match_entry(entry, cfg, ctx=None, table=None):
    """Does this entry match the current field values?  Convenience wrapper
    over the matcher used by apply_table."""
    from .explore import RunContext
    if table is None:
        table = next(t for t, es in cfg.entries.items() if entry in es)
    info = cfg.program.tables[table]
    values = read_table_keys(cfg, info, site=f"match:{table}")
    return entry_matches(cfg, ctx or RunContext(), entry, info, values,
                         f"match:{table}")


def read_table_keys(cfg, info, site):
    values = []
    for rs in info.reads:
        if rs.kind == "valid":
            values.append(Concrete(1, int(cfg.is_valid(rs.inst))))
            continue
        if not cfg.is_valid(rs.inst) and not cfg.is_metadata(rs.inst):
            raise StuckError(READ_INVALID_HEADER, site,
                             f"table reads {rs.inst}.{rs.field} while "
                             f"{rs.inst} is invalid")
        v = cfg.get_field(rs.inst, rs.field)
        if is_undef(v):
            raise StuckError(UNDEF_IN_EXPR, site,
                             f"table reads undefined {rs.inst}.{rs.field}")
        values.append(v)
    return values


def apply_table(cfg, ctx, table, site=None, depth=0):
    """Apply a table: first matching entry in descending priority order wins;
    otherwise the installed default action, otherwise an explicit miss."""
    site = site or f"apply({table})"
    info = cfg.program.tables[table]
    values = read_table_keys(cfg, info, site)
    for rs in info.reads:
        ctx.hit(f"match.{rs.kind}")
    chosen = None
    for entry in cfg.entries[table]:
        if entry_matches(cfg, ctx, entry, info, values, site):
            chosen = entry
            break
    if chosen is not None:
        ctx.hit("table.hit")
        cfg.table_status[table] = "hit"
        exec_action(cfg, ctx, chosen.action, list(chosen.args),
                    f"{site}/{chosen.action}", depth)
        _update_direct(cfg, ctx, info, chosen.entry_id, site)
    elif table in cfg.defaults:
        ctx.hit("table.default")
        cfg.table_status[table] = "miss"
        name, args = cfg.defaults[table]
        exec_action(cfg, ctx, name, list(args), f"{site}/{name}", depth)
    else:
        ctx.hit("table.miss")
        cfg.table_status[table] = "miss"


def _update_direct(cfg, ctx, info, entry_id, site):
    bound = info.direct
    if not bound:
        return
    order = bound
    if len(bound) > 1:
        perms = list(itertools.permutations(range(len(bound))))
        pick = ctx.choose("stateful-update-order", site,
                          [",".join(bound[i] for i in p) for p in perms])
        order = [bound[i] for i in perms[pick]]
    for name in order:
        kind = cfg.program.statefuls[name].kind
        if kind == "counter":
            ctx.hit("table.direct_counter")
            cfg.count_increment(name, entry_id, cfg.packet_len_bytes, site)
        elif kind == "meter":
            ctx.hit("table.direct_meter")
            cfg.meter_execute(name, entry_id, site)
        # direct registers are accessed explicitly, never auto-updated
