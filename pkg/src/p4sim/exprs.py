"""Expression evaluation over a Config, shared by the packet parser, action
bodies, control-flow conditions, and calculated-field conditions.

Symbolic operands flow through derived atoms; boolean evaluation of a
symbolic condition forks the path through the exploration context."""

from __future__ import annotations

from . import syntax as S
from .errors import StuckError, UNDEF_IN_EXPR
from .values import (Concrete, Symbolic, UNDEF, is_undef, apply_binop,
                     infer_const_width, eq_constraint, neq_constraint,
                     range_constraint)


class ParserEnv:
    """Parser-only evaluation hooks: `latest` and `current(off, width)`."""

    def __init__(self, cfg):
        self.cfg = cfg

    def latest_instance(self):
        return self.cfg.latest

    def read_current(self, off, width):
        v = self.cfg.packet_in.read(self.cfg.parse_offset + off, width,
                                    self.cfg.atoms)
        return v  # None signals out-of-packet; caller raises the exception


def resolve_instref(cfg, ref: S.InstRef, parser_env=None):
    """Resolve an instance reference to an element name, or None when a
    dynamic reference (latest / [last] / [next]) has no current target."""
    if ref.base == "latest":
        return parser_env.latest_instance() if parser_env else None
    if ref.index is None or isinstance(ref.index, int):
        return ref.render()
    elems = cfg.program.elements_of(ref.base)
    if ref.index == "last":
        live = [e for e in elems if cfg.is_valid(e)]
        return live[-1] if live else None
    # "next": lowest-index invalid element
    for e in elems:
        if not cfg.is_valid(e):
            return e
    return None


def read_field(cfg, fr: S.FieldRef, parser_env=None):
    elem = resolve_instref(cfg, fr.ref, parser_env)
    if elem is None:
        return UNDEF
    return cfg.get_field(elem, fr.field)


def eval_expr(cfg, ctx, e, frame=None, parser_env=None, site="expr"):
    """Evaluate to a Value (Concrete, Symbolic, or UNDEF)."""
    if isinstance(e, S.Const):
        return infer_const_width(e.value, e.negative, e.width, e.signed)
    if isinstance(e, S.Ident):
        assert frame is not None and e.name in frame, f"unbound {e.name!r}"
        bound = frame[e.name]
        if isinstance(bound, tuple) and bound and bound[0] == "ref":
            return cfg.get_field(bound[1], bound[2])
        return bound
    if isinstance(e, S.FieldRef):
        return read_field(cfg, e, parser_env)
    if isinstance(e, S.BinOp):
        a = eval_expr(cfg, ctx, e.left, frame, parser_env, site)
        b = eval_expr(cfg, ctx, e.right, frame, parser_env, site)
        ctx.hit(f"op.{e.op}")
        return apply_binop(e.op, a, b, cfg.atoms, site)
    if isinstance(e, S.UnaryNeg):
        v = eval_expr(cfg, ctx, e.operand, frame, parser_env, site)
        if is_undef(v):
            raise StuckError(UNDEF_IN_EXPR, site, "negating undefined value")
        ctx.hit("op.neg")
        zero = Concrete(v.width, 0, getattr(v, "signed", False))
        return apply_binop("-", zero, v, cfg.atoms, site)
    if isinstance(e, S.ValidCall):
        elem = resolve_instref(cfg, e.ref, parser_env)
        flag = bool(elem) and cfg.is_valid(elem)
        return Concrete(1, int(flag))
    if isinstance(e, S.CurrentCall):
        off = eval_expr(cfg, ctx, e.offset, frame, parser_env, site)
        width = eval_expr(cfg, ctx, e.width, frame, parser_env, site)
        if not (isinstance(off, Concrete) and isinstance(width, Concrete)):
            raise StuckError(UNDEF_IN_EXPR, site,
                             "current() needs concrete offset and width")
        v = parser_env.read_current(off.as_int(), width.as_int())
        if v is None:
            from .errors import ParserException
            raise ParserException(ParserException.TOO_SHORT, site)
        return v
    if isinstance(e, (S.NotOp, S.BoolOp)):
        return Concrete(1, int(eval_bool(cfg, ctx, e, frame, parser_env, site)))
    raise AssertionError(f"cannot evaluate {e!r}")


def _sym_cmp_branches(op, sym: Symbolic, cv: int):
    """Constraint pair (true_cs, false_cs) for unsigned sym-vs-const compare,
    or a decided bool when the constant is out of range."""
    top = (1 << sym.width) - 1
    if op == "==":
        if cv > top:
            return False
        return ([eq_constraint(sym, cv)], [neq_constraint(sym, cv)])
    if op == "!=":
        if cv > top:
            return True
        return ([neq_constraint(sym, cv)], [eq_constraint(sym, cv)])
    if op == "<":
        if cv == 0:
            return False
        if cv > top:
            return True
        return ([range_constraint(sym, 0, cv - 1)],
                [range_constraint(sym, cv, top)])
    if op == "<=":
        if cv >= top:
            return True
        return ([range_constraint(sym, 0, cv)],
                [range_constraint(sym, cv + 1, top)])
    if op == ">":
        if cv >= top:
            return False
        return ([range_constraint(sym, cv + 1, top)],
                [range_constraint(sym, 0, cv)])
    if op == ">=":
        if cv == 0:
            return True
        if cv > top:
            return False
        return ([range_constraint(sym, cv, top)],
                [range_constraint(sym, 0, cv - 1)])
    raise AssertionError(op)


def _fork_bool(ctx, site, true_cs, false_cs) -> bool:
    picked = ctx.fork_constraints("symbolic-branch", site,
                                  [("true", true_cs), ("false", false_cs)])
    return picked == 0


def truthy(cfg, ctx, v, site) -> bool:
    if is_undef(v):
        raise StuckError(UNDEF_IN_EXPR, site, "undefined condition")
    if isinstance(v, Concrete):
        return v.bits != 0
    if v.width == 1:
        return _fork_bool(ctx, site, [eq_constraint(v, 1)],
                          [eq_constraint(v, 0)])
    return _fork_bool(ctx, site, [neq_constraint(v, 0)],
                      [eq_constraint(v, 0)])


def compare_eq(cfg, ctx, a, b, site) -> bool:
    """Equality of two values; symbolic operands fork the path."""
    if is_undef(a) or is_undef(b):
        raise StuckError(UNDEF_IN_EXPR, site, "comparing undefined value")
    if isinstance(a, Concrete) and isinstance(b, Concrete):
        return apply_binop("==", a, b).bits == 1
    if isinstance(a, Symbolic) and isinstance(b, Concrete):
        sym, con = a, b
    elif isinstance(b, Symbolic) and isinstance(a, Concrete):
        sym, con = b, a
    else:
        d = apply_binop("==", a, b, cfg.atoms, site)
        return _fork_bool(ctx, site, [eq_constraint(d, 1)],
                          [eq_constraint(d, 0)])
    branches = _sym_cmp_branches("==", sym, con.bits)
    if isinstance(branches, bool):
        return branches
    return _fork_bool(ctx, site, *branches)


def eval_bool(cfg, ctx, e, frame=None, parser_env=None, site="cond") -> bool:
    if isinstance(e, S.BoolOp):
        left = eval_bool(cfg, ctx, e.left, frame, parser_env, site)
        if e.op == "and":
            return left and eval_bool(cfg, ctx, e.right, frame, parser_env, site)
        return left or eval_bool(cfg, ctx, e.right, frame, parser_env, site)
    if isinstance(e, S.NotOp):
        return not eval_bool(cfg, ctx, e.operand, frame, parser_env, site)
    if isinstance(e, S.BinOp) and e.op in ("==", "!=", "<", "<=", ">", ">="):
        a = eval_expr(cfg, ctx, e.left, frame, parser_env, site)
        b = eval_expr(cfg, ctx, e.right, frame, parser_env, site)
        ctx.hit(f"op.{e.op}")
        sym, con, op = None, None, e.op
        if isinstance(a, Symbolic) and isinstance(b, Concrete):
            sym, con = a, b
        elif isinstance(b, Symbolic) and isinstance(a, Concrete):
            flip = {"<": ">", ">": "<", "<=": ">=", ">=": "<="}
            sym, con, op = b, a, flip.get(e.op, e.op)
        if sym is not None and not sym.signed and not con.signed:
            branches = _sym_cmp_branches(op, sym, con.bits)
            if isinstance(branches, bool):
                return branches
            return _fork_bool(ctx, site, *branches)
        v = apply_binop(e.op, a, b, cfg.atoms, site)
        return truthy(cfg, ctx, v, site)
    v = eval_expr(cfg, ctx, e, frame, parser_env, site)
    return truthy(cfg, ctx, v, site)
