"""Elaboration: turn a SyntaxTree into a resolved, checked Program.

Covers name resolution, static well-formedness checks, header-stack
expansion, parse-graph construction, and deparse-order inference.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import syntax as S
from .errors import ElaborationError
from .hashes import ALGORITHMS

STANDARD_METADATA = "standard_metadata"
STANDARD_METADATA_FIELDS = (
    ("ingress_port", 16),
    ("packet_length", 32),
    ("egress_spec", 16),
    ("egress_port", 16),
)


def _err(code, msg, span=None):
    raise ElaborationError(code, msg, span)


@dataclass(frozen=True)
class FieldInfo:
    name: str
    width: int | None  # None for the varbit field
    signed: bool = False
    saturating: bool = False

    @property
    def varbit(self):
        return self.width is None


@dataclass
class HeaderTypeInfo:
    name: str
    fields: tuple
    length_expr: object = None
    max_length: int | None = None

    def __post_init__(self):
        self.by_name = {f.name: f for f in self.fields}
        self.fixed_bits = sum(f.width for f in self.fields if not f.varbit)
        varbits = [f.name for f in self.fields if f.varbit]
        self.varbit_name = varbits[0] if varbits else None

    def __eq__(self, other):
        return (isinstance(other, HeaderTypeInfo)
                and (self.name, self.fields, self.length_expr, self.max_length)
                == (other.name, other.fields, other.length_expr, other.max_length))


@dataclass(frozen=True)
class InstanceInfo:
    name: str
    htype: HeaderTypeInfo
    metadata: bool
    stack_base: str | None = None
    stack_index: int | None = None


@dataclass(frozen=True)
class ReadSpec:
    inst: str
    field: str | None  # None for valid-kind reads on an instance
    kind: str
    width: int | None = None  # match width (validity reads have width 1)


@dataclass(frozen=True)
class TableInfo:
    name: str
    reads: tuple
    actions: tuple
    direct: tuple = ()  # names of directly bound statefuls, binding order


@dataclass(frozen=True)
class ActionInfo:
    name: str
    params: tuple
    body: tuple


@dataclass(frozen=True)
class StateInfo:
    name: str
    stmts: tuple
    ret: object


@dataclass(frozen=True)
class HandlerInfo:
    name: str
    stmts: tuple
    action: str


@dataclass(frozen=True)
class CalcInfo:
    name: str
    inputs: tuple
    algorithm: str
    output_width: int


@dataclass(frozen=True)
class CalcClauseInfo:
    inst: str
    field: str
    kind: str
    calc: str
    cond: object = None


@dataclass(frozen=True)
class StatefulInfo:
    name: str
    kind: str  # counter | meter | register
    width: int = 32
    instance_count: int = 0  # 0 when direct
    direct: str | None = None
    unit: str = "packets"  # counters/meters: packets | bytes


@dataclass
class ParseGraph:
    """Parser state machine viewed as a graph.

    `extracts` maps state -> ordered tuple of collapsed instance names
    (stack elements collapse to their base).  `succ` maps state -> set of
    successor parser states; terminal targets (ingress, exceptions) are not
    included.  `edges` keeps the full labelled edge list for debugging.
    """

    extracts: dict
    succ: dict
    edges: list
    decl_pos: dict
    stacks: dict


class DeparseConflict(ElaborationError):
    def __init__(self, msg):
        super().__init__("DEPARSE_ORDER_CONFLICT", msg)


@dataclass
class DeparseOrders:
    """Admissible serialization orders, as a precedence DAG over collapsed
    instance names plus stack expansion by index."""

    nodes: tuple
    edges: frozenset  # (before, after) pairs
    decl_pos: dict
    stacks: dict

    def _preds(self):
        preds = {n: set() for n in self.nodes}
        for a, b in self.edges:
            preds[b].add(a)
        return preds

    def canonical_order(self) -> tuple:
        """Topological order taking the least declaration position first."""
        preds = self._preds()
        remaining = set(self.nodes)
        out = []
        while remaining:
            ready = [n for n in remaining if not (preds[n] & remaining)]
            ready.sort(key=lambda n: self.decl_pos[n])
            out.append(ready[0])
            remaining.discard(ready[0])
        return tuple(out)

    def all_orders(self, limit: int = 64) -> list:
        preds = self._preds()
        out = []

        def rec(remaining, acc):
            if len(out) >= limit:
                return
            if not remaining:
                out.append(tuple(acc))
                return
            ready = sorted((n for n in remaining if not (preds[n] & remaining)),
                           key=lambda n: self.decl_pos[n])
            for n in ready:
                rec(remaining - {n}, acc + [n])

        rec(set(self.nodes), [])
        return out

    def expand(self, order) -> tuple:
        """Expand stack bases into their elements in index order."""
        out = []
        for name in order:
            size = self.stacks.get(name)
            if size is None:
                out.append(name)
            else:
                out.extend(f"{name}[{i}]" for i in range(size))
        return tuple(out)

    def dot(self) -> str:
        lines = ["digraph deparse {"]
        for n in self.nodes:
            lines.append(f'  "{n}";')
        for a, b in sorted(self.edges):
            lines.append(f'  "{a}" -> "{b}";')
        lines.append("}")
        return "\n".join(lines)


@dataclass
class Program:
    header_types: dict
    instances: dict  # element-level: name -> InstanceInfo
    stacks: dict  # base -> size
    parser_states: dict
    handlers: dict
    actions: dict
    tables: dict
    controls: dict  # name -> tuple of control statements
    field_lists: dict
    calcs: dict
    calc_clauses: tuple  # CalcClauseInfo, source order
    statefuls: dict
    decl_pos: dict  # instance base name -> declaration index
    deparse: DeparseOrders
    graph: ParseGraph = field(compare=False, default=None)
    warnings: tuple = ()

    @property
    def has_egress(self):
        return "egress" in self.controls

    def instance(self, name) -> InstanceInfo:
        return self.instances[name]

    def is_instance(self, name) -> bool:
        return name in self.instances or name in self.stacks

    def elements_of(self, base) -> list:
        size = self.stacks.get(base)
        if size is None:
            return [base]
        return [f"{base}[{i}]" for i in range(size)]

    def field_info(self, inst, fld) -> FieldInfo:
        return self.instances[inst].htype.by_name[fld]

    def field_width(self, inst, fld):
        return self.field_info(inst, fld).width

    def clauses_for(self, kind):
        return [c for c in self.calc_clauses if c.kind == kind]


# -- field list flattening ---------------------------------------------------


def flatten_field_list(program: Program, name: str) -> list:
    """Expand a field list depth-first into field refs and constants.

    Items are ("field", inst, fld) or ("const", width, bits).
    """
    out = []
    active = []

    def expand(list_name):
        if list_name in active:
            _err("FIELD_LIST_CYCLE",
                 f"field list {list_name!r} expands through itself")
        active.append(list_name)
        for item in program.field_lists[list_name]:
            if isinstance(item, S.FieldRef):
                out.append(("field", item.ref.render(), item.field))
            elif isinstance(item, (S.Ident, S.InstRef)):
                nm = item.name if isinstance(item, S.Ident) else item.render()
                if nm in program.field_lists:
                    expand(nm)
                else:
                    inst = program.instances[nm]
                    for f in inst.htype.fields:
                        out.append(("field", nm, f.name))
            else:  # Const
                from .values import infer_const_width
                v = infer_const_width(item.value, item.negative, item.width,
                                      item.signed)
                out.append(("const", v.width, v.bits))
        active.pop()

    expand(name)
    return out


# -- parse graph and deparse order -------------------------------------------


def build_parse_graph(program: Program) -> ParseGraph:
    extracts = {}
    succ = {}
    edges = []
    for name, st in program.parser_states.items():
        seq = []
        for stmt in st.stmts:
            if isinstance(stmt, S.ExtractStmt):
                seq.append(stmt.target.base)
        extracts[name] = tuple(seq)
        succ[name] = set()
        targets = []
        if isinstance(st.ret, S.ReturnDirect):
            targets.append(("", st.ret.target))
        else:
            for case in st.ret.cases:
                if case.value is None:
                    label = "default"
                elif case.mask is not None:
                    label = f"{case.value.value:#x} mask {case.mask.value:#x}"
                else:
                    label = f"{case.value.value:#x}"
                targets.append((label, case.target))
        for label, (tkind, tname) in targets:
            if tkind == "state":
                succ[name].add(tname)
                edges.append((name, label, tname))
            elif tkind == "ingress":
                edges.append((name, label, "ingress"))
            else:
                edges.append((name, label, f"parse_error {tname}"))
    return ParseGraph(extracts, succ, edges, dict(program.decl_pos),
                      dict(program.stacks))


def infer_deparse_orders(graph: ParseGraph) -> DeparseOrders:
    """Derive the admissible deparse orders from extraction paths.

    A precedes B when some path extracts A strictly before B; pairs
    witnessed in both directions are a conflict (stack elements collapse to
    their base, so single-stack recursion is fine).
    """
    # transitive closure of the successor relation
    reach = {s: set(nxt) for s, nxt in graph.succ.items()}
    changed = True
    while changed:
        changed = False
        for s in reach:
            add = set()
            for t in reach[s]:
                add |= reach.get(t, set())
            if not add <= reach[s]:
                reach[s] |= add
                changed = True

    before = set()
    for s, seq in graph.extracts.items():
        for i, a in enumerate(seq):
            for b in seq[i + 1:]:
                if a != b:
                    before.add((a, b))
        for t in reach.get(s, ()):
            for a in seq:
                for b in graph.extracts.get(t, ()):
                    if a != b:
                        before.add((a, b))

    nodes = tuple(sorted({n for s in graph.extracts.values() for n in s},
                         key=lambda n: graph.decl_pos[n]))
    edges = set()
    for a, b in before:
        if (b, a) in before:
            if graph.decl_pos[a] < graph.decl_pos[b]:
                raise DeparseConflict(
                    f"instances {a!r} and {b!r} are extracted in both orders "
                    "on different paths")
        else:
            edges.add((a, b))

    orders = DeparseOrders(nodes, frozenset(edges), dict(graph.decl_pos),
                           dict(graph.stacks))
    # a cyclic precedence relation admits no order at all
    try:
        orders.canonical_order()
    except IndexError:
        raise DeparseConflict("cyclic extraction precedence without a "
                              "common header stack") from None
    return orders


# -- elaboration --------------------------------------------------------------


class _Elaborator:
    def __init__(self, tree: S.SyntaxTree):
        self.tree = tree
        self.header_types = {}
        self.instances = {}
        self.stacks = {}
        self.parser_states = {}
        self.handlers = {}
        self.actions = {}
        self.tables = {}
        self.controls = {}
        self.field_lists = {}
        self.calcs = {}
        self.calc_clauses = []
        self.statefuls = {}
        self.decl_pos = {}
        self.warnings = []

    def run(self) -> Program:
        self._inject_standard_metadata()
        self._collect()
        self._check_field_lists()
        self._check_calcs()
        self._check_statefuls()
        self._check_actions()
        self._check_tables()
        self._check_parser()
        self._check_controls()
        program = Program(
            header_types=self.header_types,
            instances=self.instances,
            stacks=self.stacks,
            parser_states=self.parser_states,
            handlers=self.handlers,
            actions=self.actions,
            tables=self.tables,
            controls=self.controls,
            field_lists=self.field_lists,
            calcs=self.calcs,
            calc_clauses=tuple(self.calc_clauses),
            statefuls=self.statefuls,
            decl_pos=self.decl_pos,
            deparse=None,
            warnings=tuple(self.warnings),
        )
        for name in self.field_lists:
            flatten_field_list(program, name)  # surfaces cycles eagerly
        graph = build_parse_graph(program)
        program.graph = graph
        program.deparse = infer_deparse_orders(graph)
        return program

    def _inject_standard_metadata(self):
        fields = tuple(FieldInfo(n, w) for n, w in STANDARD_METADATA_FIELDS)
        ht = HeaderTypeInfo("standard_metadata_t", fields)
        self.header_types[ht.name] = ht
        self.instances[STANDARD_METADATA] = InstanceInfo(
            STANDARD_METADATA, ht, metadata=True)
        self.decl_pos[STANDARD_METADATA] = -1

    def _dup(self, table, name, what, span):
        if name in table:
            _err("DUPLICATE_NAME", f"{what} {name!r} declared twice", span)

    def _collect(self):
        pos = 0
        for d in self.tree.decls:
            if isinstance(d, S.HeaderTypeDecl):
                self._header_type(d)
            elif isinstance(d, S.InstanceDecl):
                pos = self._instance(d, pos)
            elif isinstance(d, S.ParserStateDecl):
                self._dup(self.parser_states, d.name, "parser state", d.span)
                self.parser_states[d.name] = StateInfo(d.name, d.stmts, d.ret)
            elif isinstance(d, S.ParserExceptionDecl):
                self._dup(self.handlers, d.name, "parser_exception", d.span)
                self.handlers[d.name] = HandlerInfo(d.name, d.stmts, d.action)
            elif isinstance(d, S.ActionDecl):
                self._dup(self.actions, d.name, "action", d.span)
                self.actions[d.name] = ActionInfo(d.name, d.params, d.body)
            elif isinstance(d, S.TableDecl):
                self._dup(self.tables, d.name, "table", d.span)
                self.tables[d.name] = d  # re-built in _check_tables
            elif isinstance(d, S.ControlDecl):
                self._dup(self.controls, d.name, "control", d.span)
                self.controls[d.name] = d.body
            elif isinstance(d, S.FieldListDecl):
                self._dup(self.field_lists, d.name, "field_list", d.span)
                self.field_lists[d.name] = d.items
            elif isinstance(d, S.FieldListCalcDecl):
                self._dup(self.calcs, d.name, "field_list_calculation", d.span)
                self.calcs[d.name] = CalcInfo(d.name, d.inputs, d.algorithm,
                                              d.output_width)
            elif isinstance(d, S.CalculatedFieldDecl):
                for c in d.clauses:
                    self.calc_clauses.append(CalcClauseInfo(
                        d.target.ref.render(), d.target.field, c.kind, c.calc,
                        c.cond))
            elif isinstance(d, S.StatefulDecl):
                self._stateful(d)
            else:
                raise AssertionError(d)

    def _header_type(self, d: S.HeaderTypeDecl):
        self._dup(self.header_types, d.name, "header_type", d.span)
        infos = []
        seen = set()
        for i, f in enumerate(d.fields):
            if f.name in seen:
                _err("DUPLICATE_NAME", f"field {f.name!r} in {d.name!r}", f.span)
            seen.add(f.name)
            if f.width == "*":
                if i != len(d.fields) - 1:
                    _err("VARBIT_MISPLACED",
                         f"variable-length field {f.name!r} must be last "
                         f"in {d.name!r}", f.span)
                if d.length is None:
                    _err("VARBIT_MISPLACED",
                         f"{d.name!r} has a variable-length field but no "
                         "length attribute", d.span)
                width = None
            else:
                if f.width <= 0:
                    _err("VARBIT_MISPLACED",
                         f"field {f.name!r} has width {f.width}", f.span)
                width = f.width
            signed = "signed" in f.attrs
            saturating = "saturating" in f.attrs
            if saturating:
                self.warnings.append(
                    f"field {d.name}.{f.name}: saturating arithmetic is "
                    "treated as wrap-around")
            infos.append(FieldInfo(f.name, width, signed, saturating))
        if not infos:
            _err("VARBIT_MISPLACED", f"header_type {d.name!r} has no fields",
                 d.span)
        ht = HeaderTypeInfo(d.name, tuple(infos), d.length, d.max_length)
        if ht.varbit_name is not None and d.length is not None:
            self._check_length_expr(ht, d)
        self.header_types[d.name] = ht

    def _check_length_expr(self, ht: HeaderTypeInfo, d):
        varbit_pos = [i for i, f in enumerate(ht.fields) if f.varbit][0]
        allowed = {f.name for f in ht.fields[:varbit_pos]}

        def walk(e):
            if isinstance(e, S.Ident):
                if e.name not in allowed:
                    _err("VARBIT_MISPLACED",
                         f"length expression of {ht.name!r} references "
                         f"{e.name!r}, which does not precede the "
                         "variable-length field", e.span)
            elif isinstance(e, S.BinOp):
                walk(e.left)
                walk(e.right)
            elif isinstance(e, S.UnaryNeg):
                walk(e.operand)
            elif isinstance(e, S.Const):
                pass
            else:
                _err("VARBIT_MISPLACED",
                     f"length expression of {ht.name!r} may only use its own "
                     "leading fields and constants", d.span)

        walk(d.length)

    def _instance(self, d: S.InstanceDecl, pos):
        ht = self.header_types.get(d.type_name)
        if ht is None:
            _err("UNRESOLVED_NAME", f"header type {d.type_name!r}", d.span)
        if d.name in self.instances or d.name in self.stacks:
            _err("DUPLICATE_NAME", f"instance {d.name!r} declared twice", d.span)
        metadata = d.kind == "metadata"
        if d.stack_size is not None:
            if metadata:
                _err("VARBIT_MISPLACED", "metadata cannot form a stack", d.span)
            if d.stack_size <= 0:
                _err("VARBIT_MISPLACED",
                     f"stack {d.name!r} has size {d.stack_size}", d.span)
            self.stacks[d.name] = d.stack_size
            for i in range(d.stack_size):
                nm = f"{d.name}[{i}]"
                self.instances[nm] = InstanceInfo(nm, ht, False, d.name, i)
        else:
            self.instances[d.name] = InstanceInfo(d.name, ht, metadata)
        self.decl_pos[d.name] = pos
        return pos + 1

    def _stateful(self, d: S.StatefulDecl):
        self._dup(self.statefuls, d.name, d.kind, d.span)
        attrs = dict(d.attrs)
        direct = attrs.get("direct")
        count = attrs.get("instance_count", 0)
        width = attrs.get("width", 32)
        unit = attrs.get("type", "packets")
        if d.kind == "register":
            if not isinstance(width, int) or width <= 0:
                _err("UNRESOLVED_NAME",
                     f"register {d.name!r} needs an integer width", d.span)
        elif unit not in ("packets", "bytes"):
            _err("UNRESOLVED_NAME",
                 f"{d.kind} {d.name!r}: type must be packets or bytes", d.span)
        if direct is None and (not isinstance(count, int) or count <= 0):
            _err("UNRESOLVED_NAME",
                 f"{d.kind} {d.name!r} needs instance_count or direct", d.span)
        self.statefuls[d.name] = StatefulInfo(
            d.name, d.kind, width if isinstance(width, int) else 32,
            count if direct is None else 0, direct, unit)

    # -- reference resolution helpers ------------------------------------

    def _resolve_instref(self, ref: S.InstRef, *, allow_latest=False,
                         allow_dynamic=False) -> str | None:
        """Return the element name, or None for dynamic refs (latest, next,
        last) that resolve at runtime."""
        if ref.base == "latest":
            if not allow_latest:
                _err("UNRESOLVED_NAME", "latest is only meaningful in parser "
                     "states", ref.span)
            return None
        if ref.base in self.stacks:
            size = self.stacks[ref.base]
            if ref.index is None:
                _err("UNRESOLVED_NAME",
                     f"stack {ref.base!r} needs an element index", ref.span)
            if isinstance(ref.index, int):
                if not 0 <= ref.index < size:
                    _err("UNRESOLVED_NAME",
                         f"{ref.render()} is outside the stack (size {size})",
                         ref.span)
                return ref.render()
            if not allow_dynamic:
                _err("UNRESOLVED_NAME",
                     f"{ref.render()}: dynamic stack indices are only "
                     "meaningful in parser states", ref.span)
            return None
        if ref.base not in self.instances:
            _err("UNRESOLVED_NAME", f"instance {ref.base!r}", ref.span)
        if ref.index is not None:
            _err("UNRESOLVED_NAME", f"{ref.base!r} is not a header stack",
                 ref.span)
        return ref.base

    def _check_fieldref(self, fr: S.FieldRef, *, allow_latest=False,
                        allow_dynamic=False):
        elem = self._resolve_instref(fr.ref, allow_latest=allow_latest,
                                     allow_dynamic=allow_dynamic)
        if elem is None:
            if fr.ref.base in self.stacks:
                ht = self.header_types[
                    self.instances[f"{fr.ref.base}[0]"].htype.name]
                if fr.field not in ht.by_name:
                    _err("UNRESOLVED_NAME", f"field {fr.render()!r}", fr.span)
            return  # latest.<f> checked at runtime
        ht = self.instances[elem].htype
        if fr.field not in ht.by_name:
            _err("UNRESOLVED_NAME", f"field {fr.render()!r}", fr.span)

    def _check_expr(self, e, *, params=(), parser_ctx=False):
        if isinstance(e, S.Const):
            return
        if isinstance(e, S.Ident):
            if e.name in params:
                return
            if e.name in self.instances or e.name in self.stacks:
                _err("UNRESOLVED_NAME",
                     f"{e.name!r} is an instance, not a value", e.span)
            _err("UNRESOLVED_NAME", f"{e.name!r}", e.span)
        if isinstance(e, S.FieldRef):
            self._check_fieldref(e, allow_latest=parser_ctx,
                                 allow_dynamic=parser_ctx)
            return
        if isinstance(e, S.InstRef):
            _err("UNRESOLVED_NAME",
                 f"{e.render()!r} is an instance, not a value", e.span)
        if isinstance(e, (S.BinOp, S.BoolOp)):
            self._check_expr(e.left, params=params, parser_ctx=parser_ctx)
            self._check_expr(e.right, params=params, parser_ctx=parser_ctx)
            return
        if isinstance(e, (S.UnaryNeg, S.NotOp)):
            self._check_expr(e.operand, params=params, parser_ctx=parser_ctx)
            return
        if isinstance(e, S.ValidCall):
            self._resolve_instref(e.ref, allow_latest=parser_ctx,
                                  allow_dynamic=parser_ctx)
            return
        if isinstance(e, S.CurrentCall):
            if not parser_ctx:
                _err("UNRESOLVED_NAME",
                     "current(...) is only meaningful in parser states", e.span)
            self._check_expr(e.offset, params=params, parser_ctx=parser_ctx)
            self._check_expr(e.width, params=params, parser_ctx=parser_ctx)
            return
        raise AssertionError(e)

    # -- per-construct checks ---------------------------------------------

    def _check_field_lists(self):
        for name, items in self.field_lists.items():
            for item in items:
                if isinstance(item, S.PayloadItem):
                    _err("PAYLOAD_UNSUPPORTED",
                         f"field list {name!r} uses `payload`, which has no "
                         "defined semantics", item.span)
                elif isinstance(item, S.FieldRef):
                    self._check_fieldref(item)
                elif isinstance(item, (S.Ident, S.InstRef)):
                    nm = item.name if isinstance(item, S.Ident) else item.render()
                    if nm in self.field_lists:
                        continue
                    if nm in self.stacks:
                        _err("UNRESOLVED_NAME",
                             f"field list {name!r}: name a stack element, "
                             f"not the stack {nm!r}", item.span)
                    if nm not in self.instances:
                        _err("UNRESOLVED_NAME",
                             f"field list {name!r} references {nm!r}",
                             item.span)
                elif isinstance(item, S.Const):
                    if item.width is None and item.negative:
                        _err("UNRESOLVED_NAME",
                             f"field list {name!r}: negative constants need "
                             "an explicit width", item.span)

    def _check_calcs(self):
        for c in self.calcs.values():
            if c.algorithm not in ALGORITHMS:
                _err("UNRESOLVED_NAME",
                     f"unknown hash algorithm {c.algorithm!r} in {c.name!r}")
            if c.output_width <= 0:
                _err("UNRESOLVED_NAME",
                     f"{c.name!r}: output_width must be positive")
            for inp in c.inputs:
                if inp not in self.field_lists:
                    _err("UNRESOLVED_NAME",
                         f"{c.name!r} input {inp!r} is not a field list")
        for cl in self.calc_clauses:
            if cl.inst not in self.instances:
                _err("UNRESOLVED_NAME",
                     f"calculated_field target instance {cl.inst!r}")
            if cl.field not in self.instances[cl.inst].htype.by_name:
                _err("UNRESOLVED_NAME",
                     f"calculated_field target {cl.inst}.{cl.field}")
            if cl.calc not in self.calcs:
                _err("UNRESOLVED_NAME",
                     f"calculated_field uses unknown calculation {cl.calc!r}")
            if cl.cond is not None:
                self._check_expr(cl.cond)

    def _check_statefuls(self):
        for s in self.statefuls.values():
            if s.direct is not None and s.direct not in self.tables:
                _err("UNRESOLVED_NAME",
                     f"{s.kind} {s.name!r} is direct-bound to unknown table "
                     f"{s.direct!r}")

    def _check_actions(self):
        from .actions import PRIMITIVES
        for a in self.actions.values():
            if len(set(a.params)) != len(a.params):
                _err("DUPLICATE_NAME", f"action {a.name!r} repeats a parameter")
            for call in a.body:
                if call.name in self.actions:
                    callee = self.actions[call.name]
                    if len(call.args) != len(callee.params):
                        _err("UNRESOLVED_NAME",
                             f"{a.name!r} calls {call.name!r} with "
                             f"{len(call.args)} args, needs "
                             f"{len(callee.params)}", call.span)
                    for arg in call.args:
                        self._check_expr(arg, params=a.params)
                    continue
                prim = PRIMITIVES.get(call.name)
                if prim is None:
                    _err("UNRESOLVED_NAME",
                         f"{a.name!r} calls unknown action {call.name!r}",
                         call.span)
                if not prim.min_args <= len(call.args) <= prim.max_args:
                    _err("UNRESOLVED_NAME",
                         f"{call.name} takes {prim.min_args}..{prim.max_args} "
                         f"args, got {len(call.args)}", call.span)
                for role, arg in zip(prim.roles, call.args):
                    self._check_prim_arg(a, call, role, arg)

    def _check_prim_arg(self, act, call, role, arg):
        span = call.span
        if role == "field":
            if isinstance(arg, S.FieldRef):
                self._check_fieldref(arg)
            elif isinstance(arg, S.Ident) and arg.name in act.params:
                pass  # bound at call time; must be a field ref then
            else:
                _err("UNRESOLVED_NAME",
                     f"{call.name}: argument must be a field", span)
        elif role == "inst":
            if isinstance(arg, S.Ident):
                if arg.name not in self.instances:
                    _err("UNRESOLVED_NAME", f"instance {arg.name!r}", span)
                if self.instances[arg.name].metadata:
                    _err("UNRESOLVED_NAME",
                         f"{call.name}: {arg.name!r} is metadata", span)
            elif isinstance(arg, S.InstRef):
                self._resolve_instref(arg)
            else:
                _err("UNRESOLVED_NAME",
                     f"{call.name}: argument must be a header instance", span)
        elif role == "stack":
            if not (isinstance(arg, S.Ident) and arg.name in self.stacks):
                _err("UNRESOLVED_NAME",
                     f"{call.name}: argument must be a header stack", span)
        elif role in ("register", "counter", "meter"):
            ok = (isinstance(arg, S.Ident) and arg.name in self.statefuls
                  and self.statefuls[arg.name].kind == role)
            if not ok:
                _err("UNRESOLVED_NAME",
                     f"{call.name}: argument must be a {role}", span)
        elif role == "field_list":
            if not (isinstance(arg, S.Ident) and arg.name in self.field_lists):
                _err("UNRESOLVED_NAME",
                     f"{call.name}: argument must be a field list", span)
        elif role == "calc":
            if not (isinstance(arg, S.Ident) and arg.name in self.calcs):
                _err("UNRESOLVED_NAME",
                     f"{call.name}: argument must be a field list "
                     "calculation", span)
        else:  # "val"
            self._check_expr(arg, params=act.params)

    def _check_tables(self):
        direct_bind = {}
        for s in self.statefuls.values():
            if s.direct is not None:
                direct_bind.setdefault(s.direct, []).append(s.name)
        for name, d in list(self.tables.items()):
            reads = []
            for r in d.reads:
                if isinstance(r.target, S.FieldRef):
                    self._check_fieldref(r.target)
                    elem = r.target.ref.render()
                    if r.kind == "valid":
                        reads.append(ReadSpec(elem, None, "valid", 1))
                    else:
                        w = self.instances[elem].htype.by_name[r.target.field].width
                        if w is None:
                            _err("UNRESOLVED_NAME",
                                 f"table {name!r} cannot match on variable-"
                                 f"length field {r.target.render()}", r.span)
                        reads.append(ReadSpec(elem, r.target.field, r.kind, w))
                else:
                    elem = self._resolve_instref(r.target)
                    if r.kind != "valid":
                        _err("UNRESOLVED_NAME",
                             f"table {name!r} reads instance {elem!r} without "
                             "a field; only valid matches apply", r.span)
                    reads.append(ReadSpec(elem, None, "valid", 1))
            if not d.actions:
                _err("UNRESOLVED_NAME", f"table {name!r} lists no actions",
                     d.span)
            for a in d.actions:
                if a not in self.actions:
                    _err("UNRESOLVED_NAME",
                         f"table {name!r} lists unknown action {a!r}", d.span)
            self.tables[name] = TableInfo(
                name, tuple(reads), tuple(d.actions),
                tuple(direct_bind.get(name, ())))

    def _check_parser(self):
        if self.parser_states and "start" not in self.parser_states:
            _err("UNRESOLVED_NAME", "parser has no start state")
        for st in self.parser_states.values():
            for stmt in st.stmts:
                if isinstance(stmt, S.ExtractStmt):
                    ref = stmt.target
                    elem = self._resolve_instref(ref, allow_dynamic=True)
                    if elem is not None:
                        if self.instances[elem].metadata:
                            _err("UNRESOLVED_NAME",
                                 f"cannot extract into metadata {elem!r}",
                                 stmt.span)
                else:
                    base = stmt.target.ref.base
                    if base == "latest" or base in self.stacks:
                        _err("UNRESOLVED_NAME",
                             "set_metadata must target a metadata field",
                             stmt.span)
                    self._check_fieldref(stmt.target)
                    if not self.instances[base].metadata:
                        _err("UNRESOLVED_NAME",
                             "set_metadata targets a header instance "
                             f"{base!r}", stmt.span)
                    self._check_expr(stmt.value, parser_ctx=True)
            self._check_return(st.ret)

    def _check_return(self, ret):
        if isinstance(ret, S.ReturnDirect):
            self._check_target(ret.target, ret.span)
            return
        for op in ret.operands:
            self._check_expr(op, parser_ctx=True)
        seen_default = False
        for case in ret.cases:
            if case.value is None:
                seen_default = True
            self._check_target(case.target, case.span)
        _ = seen_default  # a missing default is legal; it can stick at runtime

    def _check_target(self, target, span):
        kind, name = target
        if kind == "state" and name not in self.parser_states:
            _err("UNRESOLVED_NAME", f"parser state {name!r}", span)
        if kind == "error" and name not in self.handlers:
            _err("UNRESOLVED_NAME", f"parser_exception {name!r}", span)

    def _check_controls(self):
        if "ingress" not in self.controls:
            _err("NO_INGRESS", "program declares no `control ingress`")

        def walk(body):
            for st in body:
                if isinstance(st, S.ApplyStmt):
                    if st.table not in self.tables:
                        _err("UNRESOLVED_NAME", f"table {st.table!r}", st.span)
                elif isinstance(st, S.CallControlStmt):
                    if st.name not in self.controls:
                        _err("UNRESOLVED_NAME", f"control {st.name!r}", st.span)
                else:
                    self._check_expr(st.cond)
                    walk(st.then_body)
                    walk(st.else_body)

        for body in self.controls.values():
            walk(body)


def elaborate(tree: S.SyntaxTree) -> Program:
    """Resolve and check a SyntaxTree, producing an immutable Program."""
    return _Elaborator(tree).run()


def all_paths_precedence_oracle(graph: ParseGraph, max_paths=100000):
    """Brute-force precedence witness set by enumerating acyclic paths.

    Test oracle for deparse inference on small graphs: walks every path from
    every state without revisiting a state, collecting (A, B) pairs where A
    is extracted strictly before B on some path.
    """
    before = set()

    def walk(state, seq, visited):
        seq = seq + list(graph.extracts.get(state, ()))
        nxt = [t for t in graph.succ.get(state, ()) if t not in visited]
        for i, a in enumerate(seq):
            for b in seq[i + 1:]:
                if a != b:
                    before.add((a, b))
        for t in nxt:
            walk(t, seq, visited | {t})

    for s in graph.extracts:
        walk(s, [], {s})
    return before


def topo_orders_oracle(nodes, before, limit=10000):
    """All total orders consistent with the two-sided witness relation."""
    edges = {(a, b) for (a, b) in before if (b, a) not in before}
    out = []
    for perm in itertools.permutations(sorted(nodes)):
        pos = {n: i for i, n in enumerate(perm)}
        if all(pos[a] < pos[b] for a, b in edges):
            out.append(perm)
            if len(out) >= limit:
                break
    return out
