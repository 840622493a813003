"""
Quantifier-free temporal formulas: tokenizer, recursive-descent parser,
evaluation on orbits, conversion to relations and entailment.

Grammar (precedence ! > & > |):

    formula     := conjunction ('|' conjunction)*
    conjunction := unary ('&' unary)*
    unary       := '!' unary | '(' formula ')' | 'true' | 'false' | VAR CMP VAR
    CMP         := '<' | '<=' | '=' | '!=' | '>' | '>='

The unicode forms of <=, >= and != are accepted as aliases.
"""

import logging
import operator
import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from solver_errors import FormulaSyntaxError, UnboundVariableError
from temporal_model import (TemporalRelation, WeakOrder, check_arity,
                            enumerate_weak_orders, representative)

logger = logging.getLogger(__name__)

COMPARISONS: Dict[str, Callable] = {
    '<': operator.lt,
    '<=': operator.le,
    '=': operator.eq,
    '!=': operator.ne,
    '>': operator.gt,
    '>=': operator.ge,
}
CMP_ALIASES = {'≤': '<=', '≥': '>=', '≠': '!='}
KEYWORDS = {'true', 'false'}

IDENT_PATTERN = r'[A-Za-z_][A-Za-z0-9_]*'
TOKEN_PATTERN = re.compile(
    r'(?P<ws>\s+)'
    rf'|(?P<ident>{IDENT_PATTERN})'
    r'|(?P<cmp>[<>=!≤≥≠]+)'
    r'|(?P<punct>:=|[&|(),:])'
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    position: int


def tokenize(text: str) -> List[Token]:
    """Split text into tokens; a lone '!' is negation, not a comparison."""
    tokens = []
    position = 0
    while position < len(text):
        match = TOKEN_PATTERN.match(text, position)
        if not match:
            raise FormulaSyntaxError(f"unexpected character {text[position]!r}", position)
        kind = match.lastgroup
        value = match.group()
        if kind == 'cmp':
            if value == '!':
                kind = 'punct'
            else:
                value = CMP_ALIASES.get(value, value)
        if kind != 'ws':
            tokens.append(Token(kind, value, position))
        position = match.end()
    tokens.append(Token('end', '', len(text)))
    return tokens


# --- AST -----------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    left: str
    op: str
    right: str

    def evaluate(self, values: Mapping) -> bool:
        return COMPARISONS[self.op](lookup(values, self.left), lookup(values, self.right))

    def variables(self) -> List[str]:
        return [self.left, self.right]

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Const:
    value: bool

    def evaluate(self, values: Mapping) -> bool:
        return self.value

    def variables(self) -> List[str]:
        return []

    def __str__(self):
        return 'true' if self.value else 'false'


@dataclass(frozen=True)
class Not:
    operand: object

    def evaluate(self, values: Mapping) -> bool:
        return not self.operand.evaluate(values)

    def variables(self) -> List[str]:
        return self.operand.variables()

    def __str__(self):
        return f"!{wrap(self.operand, (And, Or))}"


@dataclass(frozen=True)
class And:
    operands: Tuple

    def evaluate(self, values: Mapping) -> bool:
        return all(part.evaluate(values) for part in self.operands)

    def variables(self) -> List[str]:
        return [v for part in self.operands for v in part.variables()]

    def __str__(self):
        return ' & '.join(wrap(part, (Or,)) for part in self.operands)


@dataclass(frozen=True)
class Or:
    operands: Tuple

    def evaluate(self, values: Mapping) -> bool:
        return any(part.evaluate(values) for part in self.operands)

    def variables(self) -> List[str]:
        return [v for part in self.operands for v in part.variables()]

    def __str__(self):
        return ' | '.join(str(part) for part in self.operands)


def wrap(node, needs_parens: tuple) -> str:
    return f"({node})" if isinstance(node, needs_parens) else str(node)


def lookup(values: Mapping, var: str):
    try:
        return values[var]
    except KeyError:
        raise UnboundVariableError(var) from None


def first_appearance(names: Sequence[str]) -> Tuple[str, ...]:
    return tuple(dict.fromkeys(names))


@dataclass(frozen=True)
class QFFormula:
    """A parsed formula together with its ordered variable list."""

    root: object
    variables: Tuple[str, ...]

    def evaluate(self, values: Mapping) -> bool:
        return self.root.evaluate(values)

    def __str__(self):
        return str(self.root)


# --- Parser --------------------------------------------------------------

class TokenStream:
    """Cursor over a token list with the recursive-descent formula rules."""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def at(self, kind: str, value: Optional[str] = None) -> bool:
        token = self.current
        return token.kind == kind and (value is None or token.value == value)

    def advance(self) -> Token:
        token = self.current
        if token.kind != 'end':
            self.index += 1
        return token

    def expect(self, kind: str, value: Optional[str] = None, what: str = None) -> Token:
        if not self.at(kind, value):
            token = self.current
            found = 'end of input' if token.kind == 'end' else repr(token.value)
            raise FormulaSyntaxError(f"expected {what or value or kind}, found {found}", token.position)
        return self.advance()

    def expect_end(self):
        self.expect('end', what='end of input')

    def parse_formula(self):
        parts = [self.parse_conjunction()]
        while self.at('punct', '|'):
            self.advance()
            parts.append(self.parse_conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_conjunction(self):
        parts = [self.parse_unary()]
        while self.at('punct', '&'):
            self.advance()
            parts.append(self.parse_unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_unary(self):
        if self.at('punct', '!'):
            self.advance()
            return Not(self.parse_unary())
        if self.at('punct', '('):
            self.advance()
            node = self.parse_formula()
            self.expect('punct', ')')
            return node
        if self.at('ident') and self.current.value in KEYWORDS:
            return Const(self.advance().value == 'true')
        return self.parse_comparison()

    def parse_comparison(self) -> Atom:
        left = self.expect_variable()
        token = self.current
        if token.kind != 'cmp':
            found = 'end of input' if token.kind == 'end' else repr(token.value)
            raise FormulaSyntaxError(f"expected comparison operator after '{left}', found {found}",
                                     token.position)
        if token.value not in COMPARISONS:
            raise FormulaSyntaxError(f"unknown comparison operator '{token.value}'", token.position)
        self.advance()
        right = self.expect_variable()
        return Atom(left, token.value, right)

    def expect_variable(self) -> str:
        token = self.expect('ident', what='variable')
        if token.value in KEYWORDS:
            raise FormulaSyntaxError(f"'{token.value}' cannot be used as a variable", token.position)
        return token.value


def parse_formula(text: str, variables: Optional[Sequence[str]] = None) -> QFFormula:
    """
    Parse a quantifier-free temporal formula.

    Args:
        text: Formula text
        variables: Declared variable order; when omitted, variables are
            ordered by first appearance

    Returns:
        QFFormula: AST plus variable list
    """
    stream = TokenStream(tokenize(text))
    root = stream.parse_formula()
    stream.expect_end()
    used = first_appearance(root.variables())
    if variables is None:
        return QFFormula(root, used)
    declared = tuple(variables)
    for var in used:
        if var not in declared:
            raise UnboundVariableError(var)
    return QFFormula(root, declared)


# --- Semantics -----------------------------------------------------------

def eval_formula(formula: QFFormula, orbit: WeakOrder, variables: Optional[Sequence[str]] = None) -> bool:
    """Truth value of the formula on the representative of an orbit."""
    names = tuple(variables) if variables is not None else formula.variables
    if orbit.arity != len(names):
        missing = names[orbit.arity] if orbit.arity < len(names) else None
        if missing is not None:
            raise UnboundVariableError(missing)
        raise ValueError(f"orbit of arity {orbit.arity} given for {len(names)} variables")
    return formula.evaluate(dict(zip(names, representative(orbit))))


def relation_of_formula(formula: QFFormula, variables: Optional[Sequence[str]] = None) -> TemporalRelation:
    """The relation defined by a formula over the given coordinate order."""
    names = tuple(variables) if variables is not None else formula.variables
    for var in first_appearance(formula.root.variables()):
        if var not in names:
            raise UnboundVariableError(var)
    check_arity(len(names))
    orbits = tuple(w for w in enumerate_weak_orders(len(names))
                   if formula.evaluate(dict(zip(names, representative(w)))))
    return TemporalRelation(len(names), orbits)


def entails(relation: TemporalRelation, formula: QFFormula, variables: Optional[Sequence[str]] = None) -> bool:
    """True iff every orbit of the relation satisfies the formula."""
    names = tuple(variables) if variables is not None else formula.variables
    if len(names) != relation.arity:
        raise ValueError(f"{len(names)} names given for a relation of arity {relation.arity}")
    return all(formula.evaluate(dict(zip(names, representative(w)))) for w in relation)


def orbit_formula(orbit: WeakOrder, variables: Sequence[str]):
    """Conjunction of '=' and '<' atoms defining exactly this orbit."""
    atoms = []
    previous = None
    for level in orbit.level_sets():
        names = [variables[i] for i in level]
        if previous is not None:
            atoms.append(Atom(previous, '<', names[0]))
        atoms.extend(Atom(names[0], '=', other) for other in names[1:])
        previous = names[0]
    if not atoms:
        # a single coordinate, or arity 0
        return Const(True) if not variables else Atom(variables[0], '=', variables[0])
    return atoms[0] if len(atoms) == 1 else And(tuple(atoms))


def relation_to_formula(relation: TemporalRelation, variables: Sequence[str]) -> QFFormula:
    """Print a relation as the disjunction of its orbit formulas."""
    if len(variables) != relation.arity:
        raise ValueError(f"{len(variables)} names given for a relation of arity {relation.arity}")
    parts = [orbit_formula(w, variables) for w in relation]
    if not parts:
        root = Const(False)
    elif len(parts) == 1:
        root = parts[0]
    else:
        root = Or(tuple(parts))
    return QFFormula(root, tuple(variables))
