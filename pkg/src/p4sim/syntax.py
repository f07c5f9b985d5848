"""Syntax tree for P4_14 programs, plus the canonical pretty-printer.

Node equality ignores spans so a pretty-printed and re-parsed tree compares
equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field

Span = tuple  # (line, col)


def _span():
    return field(default=(0, 0), compare=False)


# -- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class Const:
    """Integer constant.  `negative` marks a negative literal (e.g. -5),
    which is distinct from unary negation of a positive literal."""
    value: int
    width: int | None = None
    signed: bool = False
    negative: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class InstRef:
    """Reference to an instance: `h`, `stk[2]`, `stk[next]`, `stk[last]`,
    or the parser-only `latest`."""
    base: str
    index: int | str | None = None  # int, "next", "last", or None
    span: Span = _span()

    def render(self) -> str:
        if self.index is None:
            return self.base
        return f"{self.base}[{self.index}]"


@dataclass(frozen=True)
class FieldRef:
    ref: InstRef
    field: str
    span: Span = _span()

    def render(self) -> str:
        return f"{self.ref.render()}.{self.field}"


@dataclass(frozen=True)
class Ident:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    span: Span = _span()


@dataclass(frozen=True)
class UnaryNeg:
    operand: object
    span: Span = _span()


@dataclass(frozen=True)
class NotOp:
    operand: object
    span: Span = _span()


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    left: object
    right: object
    span: Span = _span()


@dataclass(frozen=True)
class ValidCall:
    ref: InstRef
    span: Span = _span()


@dataclass(frozen=True)
class CurrentCall:
    offset: object
    width: object
    span: Span = _span()


# -- parser declarations ----------------------------------------------------


@dataclass(frozen=True)
class ExtractStmt:
    target: InstRef
    span: Span = _span()


@dataclass(frozen=True)
class SetMetaStmt:
    target: FieldRef
    value: object
    span: Span = _span()


@dataclass(frozen=True)
class ReturnDirect:
    # target: ("state", name) | ("ingress", None) | ("error", name)
    target: tuple
    span: Span = _span()


@dataclass(frozen=True)
class SelectCase:
    value: Const | None  # None = default
    mask: Const | None
    target: tuple  # same shape as ReturnDirect.target
    span: Span = _span()


@dataclass(frozen=True)
class ReturnSelect:
    operands: tuple
    cases: tuple
    span: Span = _span()


@dataclass(frozen=True)
class ParserStateDecl:
    name: str
    stmts: tuple
    ret: object
    span: Span = _span()


@dataclass(frozen=True)
class ParserExceptionDecl:
    name: str
    stmts: tuple  # SetMetaStmt only
    action: str  # "ingress" | "drop"
    span: Span = _span()


# -- other declarations ------------------------------------------------------


@dataclass(frozen=True)
class FieldDecl:
    name: str
    width: int | str  # int or "*" for varbit
    attrs: tuple = ()
    span: Span = _span()


@dataclass(frozen=True)
class HeaderTypeDecl:
    name: str
    fields: tuple
    length: object = None
    max_length: int | None = None
    span: Span = _span()


@dataclass(frozen=True)
class InstanceDecl:
    kind: str  # "header" | "metadata"
    type_name: str
    name: str
    stack_size: int | None = None
    span: Span = _span()


@dataclass(frozen=True)
class CallStmt:
    name: str
    args: tuple
    span: Span = _span()


@dataclass(frozen=True)
class ActionDecl:
    name: str
    params: tuple
    body: tuple  # CallStmt
    span: Span = _span()


@dataclass(frozen=True)
class ReadDecl:
    target: object  # FieldRef | InstRef
    kind: str  # exact | ternary | lpm | range | valid
    span: Span = _span()


@dataclass(frozen=True)
class TableDecl:
    name: str
    reads: tuple
    actions: tuple
    attrs: tuple = ()  # (name, value) pairs, e.g. ("size", 1024); kept, unused
    span: Span = _span()


@dataclass(frozen=True)
class ApplyStmt:
    table: str
    span: Span = _span()


@dataclass(frozen=True)
class IfStmt:
    cond: object
    then_body: tuple
    else_body: tuple
    span: Span = _span()


@dataclass(frozen=True)
class CallControlStmt:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class ControlDecl:
    name: str
    body: tuple
    span: Span = _span()


@dataclass(frozen=True)
class PayloadItem:
    span: Span = _span()


@dataclass(frozen=True)
class FieldListDecl:
    name: str
    items: tuple  # FieldRef | Ident | Const | PayloadItem
    span: Span = _span()


@dataclass(frozen=True)
class FieldListCalcDecl:
    name: str
    inputs: tuple
    algorithm: str
    output_width: int
    span: Span = _span()


@dataclass(frozen=True)
class CalcClause:
    kind: str  # "verify" | "update"
    calc: str
    cond: object = None
    span: Span = _span()


@dataclass(frozen=True)
class CalculatedFieldDecl:
    target: FieldRef
    clauses: tuple
    span: Span = _span()


@dataclass(frozen=True)
class StatefulDecl:
    kind: str  # "counter" | "meter" | "register"
    name: str
    attrs: tuple  # (name, value) pairs; value is int or str
    span: Span = _span()


@dataclass(frozen=True)
class SyntaxTree:
    decls: tuple
    span: Span = _span()


# -- pretty printer ----------------------------------------------------------


def pretty_expr(e) -> str:
    if isinstance(e, Const):
        if e.width is not None:
            s = "s" if e.signed else "w"
            return f"{e.width}'{s}{e.value:#x}" if e.value >= 0 else f"{e.width}'{s}{e.value}"
        if e.negative:
            return str(e.value)  # renders as -N, adjacent
        return str(e.value)
    if isinstance(e, InstRef):
        return e.render()
    if isinstance(e, FieldRef):
        return e.render()
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, BinOp):
        return f"({pretty_expr(e.left)} {e.op} {pretty_expr(e.right)})"
    if isinstance(e, UnaryNeg):
        return f"-({pretty_expr(e.operand)})"
    if isinstance(e, NotOp):
        return f"(not {pretty_expr(e.operand)})"
    if isinstance(e, BoolOp):
        return f"({pretty_expr(e.left)} {e.op} {pretty_expr(e.right)})"
    if isinstance(e, ValidCall):
        return f"valid({e.ref.render()})"
    if isinstance(e, CurrentCall):
        return f"current({pretty_expr(e.offset)}, {pretty_expr(e.width)})"
    raise AssertionError(f"unknown expr {e!r}")


def _target_text(target) -> str:
    kind, name = target
    if kind == "ingress":
        return "ingress"
    if kind == "state":
        return name
    return f"parse_error {name}"


def _pretty_control_body(body, indent) -> list:
    pad = "    " * indent
    out = []
    for st in body:
        if isinstance(st, ApplyStmt):
            out.append(f"{pad}apply({st.table});")
        elif isinstance(st, CallControlStmt):
            out.append(f"{pad}{st.name}();")
        elif isinstance(st, IfStmt):
            out.append(f"{pad}if ({pretty_expr(st.cond)}) {{")
            out.extend(_pretty_control_body(st.then_body, indent + 1))
            if st.else_body:
                out.append(pad + "} else {")
                out.extend(_pretty_control_body(st.else_body, indent + 1))
            out.append(pad + "}")
        else:
            raise AssertionError(st)
    return out


def pretty(tree: SyntaxTree) -> str:
    """Canonical source form; parsing it back yields an equal tree."""
    out = []
    for d in tree.decls:
        if isinstance(d, HeaderTypeDecl):
            out.append(f"header_type {d.name} {{")
            out.append("    fields {")
            for f in d.fields:
                w = "*" if f.width == "*" else str(f.width)
                attrs = f" ({', '.join(f.attrs)})" if f.attrs else ""
                out.append(f"        {f.name} : {w}{attrs};")
            out.append("    }")
            if d.length is not None:
                out.append(f"    length : {pretty_expr(d.length)};")
            if d.max_length is not None:
                out.append(f"    max_length : {d.max_length};")
            out.append("}")
        elif isinstance(d, InstanceDecl):
            stack = f"[{d.stack_size}]" if d.stack_size is not None else ""
            out.append(f"{d.kind} {d.type_name} {d.name}{stack};")
        elif isinstance(d, ParserStateDecl):
            out.append(f"parser {d.name} {{")
            for st in d.stmts:
                if isinstance(st, ExtractStmt):
                    out.append(f"    extract({st.target.render()});")
                else:
                    out.append(f"    set_metadata({st.target.render()}, "
                               f"{pretty_expr(st.value)});")
            if isinstance(d.ret, ReturnDirect):
                if d.ret.target[0] == "error":
                    out.append(f"    parse_error {d.ret.target[1]};")
                else:
                    out.append(f"    return {_target_text(d.ret.target)};")
            else:
                ops = ", ".join(pretty_expr(o) for o in d.ret.operands)
                out.append(f"    return select({ops}) {{")
                for c in d.ret.cases:
                    if c.value is None:
                        lhs = "default"
                    elif c.mask is not None:
                        lhs = f"{pretty_expr(c.value)} mask {pretty_expr(c.mask)}"
                    else:
                        lhs = pretty_expr(c.value)
                    out.append(f"        {lhs} : {_target_text(c.target)};")
                out.append("    }")
            out.append("}")
        elif isinstance(d, ParserExceptionDecl):
            out.append(f"parser_exception {d.name} {{")
            for st in d.stmts:
                out.append(f"    set_metadata({st.target.render()}, "
                           f"{pretty_expr(st.value)});")
            out.append("    return ingress;" if d.action == "ingress"
                       else "    parser_drop;")
            out.append("}")
        elif isinstance(d, ActionDecl):
            params = ", ".join(d.params)
            out.append(f"action {d.name}({params}) {{")
            for c in d.body:
                args = ", ".join(pretty_expr(a) for a in c.args)
                out.append(f"    {c.name}({args});")
            out.append("}")
        elif isinstance(d, TableDecl):
            out.append(f"table {d.name} {{")
            if d.reads:
                out.append("    reads {")
                for r in d.reads:
                    out.append(f"        {r.target.render()} : {r.kind};")
                out.append("    }")
            out.append("    actions {")
            for a in d.actions:
                out.append(f"        {a};")
            out.append("    }")
            for name, val in d.attrs:
                out.append(f"    {name} : {val};")
            out.append("}")
        elif isinstance(d, ControlDecl):
            out.append(f"control {d.name} {{")
            out.extend(_pretty_control_body(d.body, 1))
            out.append("}")
        elif isinstance(d, FieldListDecl):
            out.append(f"field_list {d.name} {{")
            for it in d.items:
                if isinstance(it, PayloadItem):
                    out.append("    payload;")
                else:
                    out.append(f"    {pretty_expr(it)};")
            out.append("}")
        elif isinstance(d, FieldListCalcDecl):
            out.append(f"field_list_calculation {d.name} {{")
            out.append("    input {")
            for name in d.inputs:
                out.append(f"        {name};")
            out.append("    }")
            out.append(f"    algorithm : {d.algorithm};")
            out.append(f"    output_width : {d.output_width};")
            out.append("}")
        elif isinstance(d, CalculatedFieldDecl):
            out.append(f"calculated_field {d.target.render()} {{")
            for c in d.clauses:
                cond = f" if ({pretty_expr(c.cond)})" if c.cond is not None else ""
                out.append(f"    {c.kind} {c.calc}{cond};")
            out.append("}")
        elif isinstance(d, StatefulDecl):
            out.append(f"{d.kind} {d.name} {{")
            for name, val in d.attrs:
                out.append(f"    {name} : {val};")
            out.append("}")
        else:
            raise AssertionError(d)
    return "\n".join(out) + ("\n" if out else "")
