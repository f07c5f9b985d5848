"""Recursive-descent parser producing a SyntaxTree.

Reports the first syntax violation as a ParseError carrying the offending
span and the expected-token set; no error recovery.
"""

from __future__ import annotations

from .errors import ParseError
from .lexer import (Token, tokenize, KIND_IDENT, KIND_INT, KIND_WINT,
                    KIND_KW, KIND_PUNCT, KIND_EOF)
from . import syntax as S

MATCH_KINDS = ("exact", "ternary", "lpm", "range", "valid")


def classify_minus(prev_is_operand: bool, minus: Token, nxt: Token) -> str:
    """Disambiguate a '-' token.

    Infix position (directly after an operand) is binary subtraction.  In
    prefix position, a '-' immediately adjacent to an integer literal is a
    negative literal; anything else is unary negation.
    """
    if prev_is_operand:
        return "binary-minus"
    if (nxt.kind == KIND_INT and nxt.line == minus.line
            and minus.end_pos() == nxt.pos):
        return "negative-literal"
    return "unary-negation"


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != KIND_EOF:
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != KIND_EOF

    def accept(self, text: str):
        if self.at(text):
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        if self.at(text):
            return self.next()
        self.fail({text})

    def expect_kind(self, kind: str) -> Token:
        t = self.peek()
        if t.kind == kind:
            return self.next()
        self.fail({kind})

    def fail(self, expected):
        t = self.peek()
        got = t.text if t.kind != KIND_EOF else "<end of input>"
        raise ParseError(f"unexpected {got!r}", t.span, expected)

    # -- atoms ----------------------------------------------------------

    def ident(self) -> Token:
        return self.expect_kind(KIND_IDENT)

    def integer(self) -> int:
        return self.expect_kind(KIND_INT).value

    def const(self) -> S.Const:
        t = self.peek()
        if t.kind == KIND_WINT:
            self.next()
            return S.Const(t.value, width=t.width, signed=t.signed, span=t.span)
        if t.kind == KIND_INT:
            self.next()
            return S.Const(t.value, span=t.span)
        if t.text == "-":
            minus = self.next()
            nxt = self.peek()
            if classify_minus(False, minus, nxt) == "negative-literal":
                self.next()
                return S.Const(-nxt.value, negative=True, span=minus.span)
            self.fail({"integer-literal"})
        self.fail({"integer-literal"})

    def instref(self) -> S.InstRef:
        t = self.peek()
        if t.text == "latest":
            self.next()
            return S.InstRef("latest", span=t.span)
        name = self.ident()
        index = None
        if self.accept("["):
            it = self.peek()
            if it.kind == KIND_INT:
                self.next()
                index = it.value
            elif it.kind == KIND_IDENT and it.text in ("next", "last"):
                self.next()
                index = it.text
            else:
                self.fail({"integer-literal", "next", "last"})
            self.expect("]")
        return S.InstRef(name.text, index, span=name.span)

    def fieldref(self) -> S.FieldRef:
        ref = self.instref()
        self.expect(".")
        fld = self.ident()
        return S.FieldRef(ref, fld.text, span=ref.span)

    # -- expressions ------------------------------------------------------

    def expr(self):
        return self.or_expr()

    def or_expr(self):
        e = self.and_expr()
        while self.at("or"):
            t = self.next()
            e = S.BoolOp("or", e, self.and_expr(), span=t.span)
        return e

    def and_expr(self):
        e = self.not_expr()
        while self.at("and"):
            t = self.next()
            e = S.BoolOp("and", e, self.not_expr(), span=t.span)
        return e

    def not_expr(self):
        if self.at("not"):
            t = self.next()
            return S.NotOp(self.not_expr(), span=t.span)
        return self.cmp_expr()

    def cmp_expr(self):
        e = self.bitor_expr()
        t = self.peek()
        if t.text in ("==", "!=", "<", "<=", ">", ">="):
            self.next()
            return S.BinOp(t.text, e, self.bitor_expr(), span=t.span)
        return e

    def _binary_level(self, ops, sub):
        e = sub()
        while self.peek().text in ops and self.peek().kind == KIND_PUNCT:
            t = self.next()
            e = S.BinOp(t.text, e, sub(), span=t.span)
        return e

    def bitor_expr(self):
        return self._binary_level(("|",), self.bitxor_expr)

    def bitxor_expr(self):
        return self._binary_level(("^",), self.bitand_expr)

    def bitand_expr(self):
        return self._binary_level(("&",), self.shift_expr)

    def shift_expr(self):
        return self._binary_level(("<<", ">>"), self.add_expr)

    def add_expr(self):
        return self._binary_level(("+", "-"), self.mul_expr)

    def mul_expr(self):
        return self._binary_level(("*",), self.unary_expr)

    def unary_expr(self):
        t = self.peek()
        if t.text == "-" and t.kind == KIND_PUNCT:
            minus = self.next()
            kind = classify_minus(False, minus, self.peek())
            if kind == "negative-literal":
                lit = self.next()
                return S.Const(-lit.value, negative=True, span=minus.span)
            return S.UnaryNeg(self.unary_expr(), span=minus.span)
        return self.primary()

    def primary(self):
        t = self.peek()
        if t.kind in (KIND_INT, KIND_WINT):
            return self.const()
        if t.text == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.text == "valid":
            self.next()
            self.expect("(")
            ref = self.instref()
            self.expect(")")
            return S.ValidCall(ref, span=t.span)
        if t.text == "current":
            self.next()
            self.expect("(")
            off = self.expr()
            self.expect(",")
            width = self.expr()
            self.expect(")")
            return S.CurrentCall(off, width, span=t.span)
        if t.text == "latest":
            ref = self.instref()
            self.expect(".")
            return S.FieldRef(ref, self.ident().text, span=t.span)
        if t.kind == KIND_IDENT:
            ref = self.instref()
            if self.accept("."):
                return S.FieldRef(ref, self.ident().text, span=ref.span)
            if ref.index is not None:
                return ref
            return S.Ident(ref.base, span=ref.span)
        self.fail({"expression"})

    # -- declarations ------------------------------------------------------

    def program(self) -> S.SyntaxTree:
        decls = []
        dispatch = {
            "header_type": self.header_type_decl,
            "header": self.instance_decl,
            "metadata": self.instance_decl,
            "parser": self.parser_decl,
            "parser_exception": self.parser_exception_decl,
            "action": self.action_decl,
            "table": self.table_decl,
            "control": self.control_decl,
            "field_list": self.field_list_decl,
            "field_list_calculation": self.flc_decl,
            "calculated_field": self.calculated_field_decl,
            "counter": self.stateful_decl,
            "meter": self.stateful_decl,
            "register": self.stateful_decl,
        }
        while self.peek().kind != KIND_EOF:
            fn = dispatch.get(self.peek().text)
            if fn is None:
                self.fail(set(dispatch))
            decls.append(fn())
        return S.SyntaxTree(tuple(decls), span=(1, 1))

    def header_type_decl(self):
        t = self.expect("header_type")
        name = self.ident().text
        self.expect("{")
        self.expect("fields")
        self.expect("{")
        fields = []
        while not self.at("}"):
            fname = self.ident().text
            fspan = self.tokens[self.i - 1].span
            self.expect(":")
            if self.accept("*"):
                width = "*"
            else:
                width = self.integer()
            attrs = ()
            if self.accept("("):
                lst = [self.ident().text]
                while self.accept(","):
                    lst.append(self.ident().text)
                self.expect(")")
                attrs = tuple(lst)
            self.expect(";")
            fields.append(S.FieldDecl(fname, width, attrs, span=fspan))
        self.expect("}")
        length = None
        max_length = None
        while not self.at("}"):
            key = self.ident()
            self.expect(":")
            if key.text == "length":
                length = self.expr()
            elif key.text == "max_length":
                max_length = self.integer()
            else:
                self.fail({"length", "max_length"})
            self.expect(";")
        self.expect("}")
        return S.HeaderTypeDecl(name, tuple(fields), length, max_length,
                                span=t.span)

    def instance_decl(self):
        t = self.next()  # header | metadata
        type_name = self.ident().text
        name = self.ident().text
        stack = None
        if self.accept("["):
            stack = self.integer()
            self.expect("]")
        self.expect(";")
        return S.InstanceDecl(t.text, type_name, name, stack, span=t.span)

    def _return_target(self) -> tuple:
        if self.accept("ingress"):
            return ("ingress", None)
        if self.accept("parse_error"):
            return ("error", self.ident().text)
        return ("state", self.ident().text)

    def parser_decl(self):
        t = self.expect("parser")
        name = self.ident().text
        self.expect("{")
        stmts = []
        ret = None
        while ret is None:
            if self.at("extract"):
                s = self.next()
                self.expect("(")
                target = self.instref()
                self.expect(")")
                self.expect(";")
                stmts.append(S.ExtractStmt(target, span=s.span))
            elif self.at("set_metadata"):
                s = self.next()
                self.expect("(")
                target = self.fieldref()
                self.expect(",")
                value = self.expr()
                self.expect(")")
                self.expect(";")
                stmts.append(S.SetMetaStmt(target, value, span=s.span))
            elif self.at("parse_error"):
                s = self.next()
                exc = self.ident().text
                self.expect(";")
                ret = S.ReturnDirect(("error", exc), span=s.span)
            elif self.at("return"):
                s = self.next()
                if self.at("select"):
                    self.next()
                    self.expect("(")
                    operands = [self.expr()]
                    while self.accept(","):
                        operands.append(self.expr())
                    self.expect(")")
                    self.expect("{")
                    cases = []
                    while not self.at("}"):
                        cspan = self.peek().span
                        if self.accept("default"):
                            value = mask = None
                        else:
                            value = self.const()
                            mask = self.const() if self.accept("mask") else None
                        self.expect(":")
                        target = self._return_target()
                        self.expect(";")
                        cases.append(S.SelectCase(value, mask, target, span=cspan))
                    self.expect("}")
                    if not cases:
                        self.fail({"select case"})
                    ret = S.ReturnSelect(tuple(operands), tuple(cases), span=s.span)
                else:
                    ret = S.ReturnDirect(self._return_target(), span=s.span)
                    self.expect(";")
            else:
                self.fail({"extract", "set_metadata", "return", "parse_error"})
        self.expect("}")
        return S.ParserStateDecl(name, tuple(stmts), ret, span=t.span)

    def parser_exception_decl(self):
        t = self.expect("parser_exception")
        name = self.ident().text
        self.expect("{")
        stmts = []
        action = None
        while action is None:
            if self.at("set_metadata"):
                s = self.next()
                self.expect("(")
                target = self.fieldref()
                self.expect(",")
                value = self.expr()
                self.expect(")")
                self.expect(";")
                stmts.append(S.SetMetaStmt(target, value, span=s.span))
            elif self.at("return"):
                self.next()
                self.expect("ingress")
                self.expect(";")
                action = "ingress"
            elif self.at("parser_drop"):
                self.next()
                self.expect(";")
                action = "drop"
            else:
                self.fail({"set_metadata", "return ingress", "parser_drop"})
        self.expect("}")
        return S.ParserExceptionDecl(name, tuple(stmts), action, span=t.span)

    def action_decl(self):
        t = self.expect("action")
        name = self.ident().text
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.ident().text)
            while self.accept(","):
                params.append(self.ident().text)
        self.expect(")")
        self.expect("{")
        body = []
        while not self.at("}"):
            cname = self.ident()
            self.expect("(")
            args = []
            if not self.at(")"):
                args.append(self.expr())
                while self.accept(","):
                    args.append(self.expr())
            self.expect(")")
            self.expect(";")
            body.append(S.CallStmt(cname.text, tuple(args), span=cname.span))
        self.expect("}")
        return S.ActionDecl(name, tuple(params), tuple(body), span=t.span)

    def table_decl(self):
        t = self.expect("table")
        name = self.ident().text
        self.expect("{")
        reads = []
        if self.accept("reads"):
            self.expect("{")
            while not self.at("}"):
                ref = self.instref()
                target = S.FieldRef(ref, self.ident().text, span=ref.span) \
                    if self.accept(".") else ref
                self.expect(":")
                kt = self.peek()
                if kt.text not in MATCH_KINDS:
                    self.fail(set(MATCH_KINDS))
                self.next()
                self.expect(";")
                reads.append(S.ReadDecl(target, kt.text, span=ref.span))
            self.expect("}")
        self.expect("actions")
        self.expect("{")
        actions = []
        while not self.at("}"):
            actions.append(self.ident().text)
            self.expect(";")
        self.expect("}")
        attrs = []
        while not self.at("}"):
            key = self.ident().text
            self.expect(":")
            vt = self.peek()
            if vt.kind == KIND_INT:
                self.next()
                attrs.append((key, vt.value))
            else:
                attrs.append((key, self.ident().text))
            self.expect(";")
        self.expect("}")
        return S.TableDecl(name, tuple(reads), tuple(actions), tuple(attrs),
                           span=t.span)

    def control_decl(self):
        t = self.expect("control")
        if self.at("ingress"):
            name = self.next().text
        else:
            name = self.ident().text
        body = self._control_block()
        return S.ControlDecl(name, body, span=t.span)

    def _control_block(self) -> tuple:
        self.expect("{")
        body = []
        while not self.at("}"):
            body.append(self._control_stmt())
        self.expect("}")
        return tuple(body)

    def _control_stmt(self):
        t = self.peek()
        if self.accept("apply"):
            self.expect("(")
            table = self.ident().text
            self.expect(")")
            self.expect(";")
            return S.ApplyStmt(table, span=t.span)
        if self.accept("if"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then_body = self._control_block()
            else_body = ()
            if self.accept("else"):
                if self.at("if"):
                    else_body = (self._control_stmt(),)
                else:
                    else_body = self._control_block()
            return S.IfStmt(cond, then_body, else_body, span=t.span)
        name = self.ident().text
        self.expect("(")
        self.expect(")")
        self.expect(";")
        return S.CallControlStmt(name, span=t.span)

    def field_list_decl(self):
        t = self.expect("field_list")
        name = self.ident().text
        self.expect("{")
        items = []
        while not self.at("}"):
            it = self.peek()
            if self.accept("payload"):
                items.append(S.PayloadItem(span=it.span))
            elif it.kind in (KIND_INT, KIND_WINT) or it.text == "-":
                items.append(self.const())
            else:
                ref = self.instref()
                if self.accept("."):
                    items.append(S.FieldRef(ref, self.ident().text, span=ref.span))
                elif ref.index is not None:
                    items.append(ref)
                else:
                    items.append(S.Ident(ref.base, span=ref.span))
            self.expect(";")
        self.expect("}")
        return S.FieldListDecl(name, tuple(items), span=t.span)

    def flc_decl(self):
        t = self.expect("field_list_calculation")
        name = self.ident().text
        self.expect("{")
        inp = self.ident()
        if inp.text != "input":
            self.fail({"input"})
        self.expect("{")
        inputs = []
        while not self.at("}"):
            inputs.append(self.ident().text)
            self.expect(";")
        self.expect("}")
        algo_kw = self.ident()
        if algo_kw.text != "algorithm":
            self.fail({"algorithm"})
        self.expect(":")
        algorithm = self.ident().text
        self.expect(";")
        ow_kw = self.ident()
        if ow_kw.text != "output_width":
            self.fail({"output_width"})
        self.expect(":")
        output_width = self.integer()
        self.expect(";")
        self.expect("}")
        return S.FieldListCalcDecl(name, tuple(inputs), algorithm,
                                   output_width, span=t.span)

    def calculated_field_decl(self):
        t = self.expect("calculated_field")
        target = self.fieldref()
        self.expect("{")
        clauses = []
        while not self.at("}"):
            kt = self.ident()
            if kt.text not in ("verify", "update"):
                self.fail({"verify", "update"})
            calc = self.ident().text
            cond = None
            if self.accept("if"):
                self.expect("(")
                cond = self.expr()
                self.expect(")")
            self.expect(";")
            clauses.append(S.CalcClause(kt.text, calc, cond, span=kt.span))
        self.expect("}")
        return S.CalculatedFieldDecl(target, tuple(clauses), span=t.span)

    def stateful_decl(self):
        t = self.next()  # counter | meter | register
        name = self.ident().text
        self.expect("{")
        attrs = []
        while not self.at("}"):
            key = self.ident().text
            self.expect(":")
            vt = self.peek()
            if vt.kind == KIND_INT:
                self.next()
                val = vt.value
            else:
                val = self.ident().text
                if self.accept("."):
                    val = f"{val}.{self.ident().text}"
            attrs.append((key, val))
            self.expect(";")
        self.expect("}")
        return S.StatefulDecl(t.text, name, tuple(attrs), span=t.span)


def parse_program(tokens: list[Token]) -> S.SyntaxTree:
    return _Parser(tokens).program()


def parse_source(source: str) -> S.SyntaxTree:
    return parse_program(tokenize(source))
