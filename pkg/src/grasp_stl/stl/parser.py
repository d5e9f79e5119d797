"""Textual STL grammar, parser and pretty printer.

Grammar::

    formula := or ; or := and ("|" and)* ; and := unary ("&" unary)* ;
    unary   := "!" unary | "G[" int "," int "]" unary | "F[" int "," int "]" unary
             | "(" formula ")" | "TRUE" | ident

``&`` binds tighter than ``|`` and unary operators bind tightest. Chains of the same
binary operator become one n-ary node; a parenthesized group stays a separate node.
"""

from typing import List

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from ..models.formula import (
    Always,
    And,
    Eventually,
    Not,
    Or,
    Predicate,
    StlFormula,
    TrueLiteral,
)

GRAMMAR = r"""
?start: disj

?disj: conj ("|" conj)*

?conj: unary ("&" unary)*

?unary: "!" unary                           -> neg
      | ALWAYS INT "," INT "]" unary        -> always
      | EVENTUALLY INT "," INT "]" unary    -> eventually
      | "(" disj ")"                        -> group
      | TRUE                                -> true
      | IDENT                               -> pred

ALWAYS.2: /G\s*\[/
EVENTUALLY.2: /F\s*\[/
TRUE.2: /TRUE(?![A-Za-z0-9_])/
IDENT: /[a-zA-Z_][a-zA-Z0-9_]*/
INT: /[0-9]+/

%import common.WS
%ignore WS
"""


class FormulaSyntaxError(ValueError):
    """Raised for text outside the grammar or with invalid temporal bounds.

    Attributes:
        offset: Byte offset of the offending position in the UTF-8 encoded input
    """

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class _BoundsError(Exception):
    def __init__(self, message: str, char_pos: int) -> None:
        super().__init__(message)
        self.char_pos = char_pos


@v_args(inline=True)
class _ToFormula(Transformer):
    """Builds the frozen syntax tree from the lark parse tree."""

    def disj(self, *children: StlFormula) -> StlFormula:
        return Or(tuple(children))

    def conj(self, *children: StlFormula) -> StlFormula:
        return And(tuple(children))

    def neg(self, child: StlFormula) -> StlFormula:
        return Not(child)

    def always(self, op: Token, a: Token, b: Token, child: StlFormula) -> StlFormula:
        lo, hi = self._bounds(op, a, b)
        return Always(lo, hi, child)

    def eventually(self, op: Token, a: Token, b: Token, child: StlFormula) -> StlFormula:
        lo, hi = self._bounds(op, a, b)
        return Eventually(lo, hi, child)

    def group(self, child: StlFormula) -> StlFormula:
        return child

    def true(self, _token: Token) -> StlFormula:
        return TrueLiteral()

    def pred(self, token: Token) -> StlFormula:
        return Predicate(str(token))

    @staticmethod
    def _bounds(op: Token, a: Token, b: Token) -> tuple:
        lo, hi = int(a), int(b)
        if lo > hi:
            raise _BoundsError(f"Temporal bound a > b in [{lo},{hi}]", op.start_pos or 0)
        return lo, hi


_PARSER = Lark(GRAMMAR, parser="lalr", start="start")


def _byte_offset(text: str, char_pos: int) -> int:
    char_pos = max(0, min(char_pos, len(text)))
    return len(text[:char_pos].encode("utf-8"))


def parse_formula(text: str) -> StlFormula:
    """Parse formula text into a syntax tree.

    Args:
        text: Formula in the grammar above, e.g. ``"G[0,10](!p4) & F[2,6] p2"``

    Returns:
        The parsed formula

    Raises:
        FormulaSyntaxError: On grammar violations, negative bounds or bounds with a > b
    """
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as e:
        pos = getattr(e, "pos_in_stream", None)
        if pos is None or pos < 0:
            pos = len(text)
        raise FormulaSyntaxError("Syntax error", _byte_offset(text, pos)) from e

    try:
        return _ToFormula().transform(tree)
    except VisitError as e:
        orig = e.orig_exc
        if isinstance(orig, _BoundsError):
            raise FormulaSyntaxError(str(orig), _byte_offset(text, orig.char_pos)) from orig
        raise


def _is_nary(phi: StlFormula) -> bool:
    return isinstance(phi, (And, Or))


def format_formula(phi: StlFormula) -> str:
    """Render a formula in the textual grammar.

    The output reparses to a structurally identical tree: parentheses are emitted exactly
    where precedence or n-ary grouping requires them.
    """
    if isinstance(phi, TrueLiteral):
        return "TRUE"
    if isinstance(phi, Predicate):
        return phi.id
    if isinstance(phi, Not):
        return "!" + _operand(phi.child)
    if isinstance(phi, Always):
        return f"G[{phi.a},{phi.b}] " + _operand(phi.child)
    if isinstance(phi, Eventually):
        return f"F[{phi.a},{phi.b}] " + _operand(phi.child)
    if isinstance(phi, And):
        parts: List[str] = [
            f"({format_formula(c)})" if _is_nary(c) else format_formula(c) for c in phi.children
        ]
        return " & ".join(parts)
    if isinstance(phi, Or):
        parts = [
            f"({format_formula(c)})" if isinstance(c, Or) else format_formula(c)
            for c in phi.children
        ]
        return " | ".join(parts)
    raise TypeError(f"Not a formula node: {phi!r}")


def _operand(child: StlFormula) -> str:
    text = format_formula(child)
    return f"({text})" if _is_nary(child) else text
