"""
Instance files: relation declarations plus one CSP or QCSP problem line.

    # comment
    rel NAME(v1,...,vk) := FORMULA
    csp ATOM (& ATOM)*
    qcsp (forall VAR | exists VAR)+ : ATOM (& ATOM)*

    ATOM ::= NAME(VAR,...,VAR) | VAR CMP VAR
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from formula_parser import TokenStream, first_appearance, parse_formula, relation_of_formula, tokenize
from solver_config import ARITY_CAP
from solver_errors import ArityCapExceeded, FormulaSyntaxError, InstanceError, UnboundVariableError
from temporal_model import TemporalRelation, dualize, orbit_of_tuple

logger = logging.getLogger(__name__)

REVERSED_OPS = {'<': '>', '<=': '>=', '=': '=', '!=': '!=', '>=': '<=', '>': '<'}


class Quantifier(Enum):
    FORALL = 'forall'
    EXISTS = 'exists'


@dataclass(frozen=True)
class Constraint:
    """A relation applied to a tuple of variables (variables may repeat)."""

    relation: TemporalRelation
    args: Tuple[str, ...]
    label: str = ''
    comparison: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'args', tuple(self.args))
        if len(self.args) != self.relation.arity:
            raise InstanceError(f"constraint {self.label or '?'} has {len(self.args)} arguments, "
                                f"relation arity is {self.relation.arity}")

    def holds(self, values: Mapping) -> bool:
        return orbit_of_tuple([values[a] for a in self.args]) in self.relation

    def dualized(self) -> 'Constraint':
        """Same arguments over the reversed relation; comparison labels flip their operator."""
        label = self.label
        if self.comparison:
            left, op, right = label.split(' ')
            label = f"{left} {REVERSED_OPS[op]} {right}"
        return Constraint(dualize(self.relation), self.args, label, self.comparison)

    def __str__(self):
        if self.comparison:
            return self.label
        return f"{self.label or 'R'}({','.join(self.args)})"


@dataclass(frozen=True)
class CSPInstance:
    variables: Tuple[str, ...]
    constraints: Tuple[Constraint, ...]

    @classmethod
    def from_constraints(cls, constraints: Sequence[Constraint],
                         variables: Optional[Sequence[str]] = None) -> 'CSPInstance':
        used = first_appearance([a for c in constraints for a in c.args])
        names = tuple(variables) if variables is not None else used
        for var in used:
            if var not in names:
                raise InstanceError(f"variable '{var}' is not declared")
        return cls(names, tuple(constraints))

    def holds(self, values: Mapping) -> bool:
        return all(c.holds(values) for c in self.constraints)


@dataclass(frozen=True)
class QCSPInstance:
    prefix: Tuple[Tuple[Quantifier, str], ...]
    constraints: Tuple[Constraint, ...]

    def __post_init__(self):
        object.__setattr__(self, 'prefix', tuple((Quantifier(q), v) for q, v in self.prefix))
        names = [v for _, v in self.prefix]
        seen = set()
        for var in names:
            if var in seen:
                raise InstanceError(f"duplicate prefix variable '{var}'")
            seen.add(var)
        for constraint in self.constraints:
            for var in constraint.args:
                if var not in seen:
                    raise InstanceError(f"variable '{var}' is not quantified")

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(v for _, v in self.prefix)

    def kernel(self) -> CSPInstance:
        """The quantifier-free part as a CSP over all prefix variables."""
        return CSPInstance(self.variables, self.constraints)

    def __str__(self):
        prefix = ' '.join(f"{q.value} {v}" for q, v in self.prefix)
        return f"qcsp {prefix} : " + ' & '.join(str(c) for c in self.constraints)


Instance = Union[CSPInstance, QCSPInstance]


@dataclass
class InstanceDocument:
    """Everything declared in one instance file."""

    relations: Dict[str, Tuple[Tuple[str, ...], TemporalRelation, str]] = field(default_factory=dict)
    problem: Optional[Instance] = None

    def relation(self, name: str) -> TemporalRelation:
        try:
            return self.relations[name][1]
        except KeyError:
            raise InstanceError(f"relation '{name}' is not declared") from None

    def relation_variables(self, name: str) -> Tuple[str, ...]:
        self.relation(name)
        return self.relations[name][0]


class InstanceParser:
    """Line-oriented parser; relation names resolve against earlier `rel` lines."""

    def __init__(self):
        self.document = InstanceDocument()

    def parse(self, text: str) -> InstanceDocument:
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            try:
                self._parse_line(line, line_no)
            except (FormulaSyntaxError, UnboundVariableError, ArityCapExceeded) as e:
                raise InstanceError(str(e), line_no) from e
            except InstanceError as e:
                if e.line is None:
                    raise InstanceError(str(e), line_no) from e
                raise
        return self.document

    def _parse_line(self, line: str, line_no: int):
        parts = line.split(None, 1)
        keyword, rest = parts[0], (parts[1] if len(parts) > 1 else '')
        if keyword == 'rel':
            self._parse_relation(rest)
        elif keyword in ('csp', 'qcsp'):
            if self.document.problem is not None:
                raise InstanceError("only one csp/qcsp line is allowed per file")
            if keyword == 'csp':
                self.document.problem = self._parse_csp(rest)
            else:
                self.document.problem = self._parse_qcsp(rest)
            logger.debug(f"line {line_no}: parsed {keyword} with "
                         f"{len(self.document.problem.constraints)} constraints")
        else:
            raise InstanceError(f"unknown statement '{keyword}'")

    def _parse_relation(self, text: str):
        head, sep, body = text.partition(':=')
        if not sep:
            raise InstanceError("relation declaration needs ':='")
        stream = TokenStream(tokenize(head))
        name = stream.expect('ident', what='relation name').value
        variables = self._parse_argument_list(stream)
        stream.expect_end()
        if name in self.document.relations:
            raise InstanceError(f"relation '{name}' is declared twice")
        if len(set(variables)) != len(variables):
            raise InstanceError(f"relation '{name}' repeats a variable in its declaration")
        if not variables:
            raise InstanceError(f"relation '{name}' needs at least one variable")
        if len(variables) > ARITY_CAP:
            raise ArityCapExceeded(len(variables), ARITY_CAP)
        formula = parse_formula(body.strip(), variables)
        relation = relation_of_formula(formula, variables)
        self.document.relations[name] = (variables, relation, body.strip())
        logger.debug(f"declared {name}/{len(variables)} with {len(relation)} orbits")

    def _parse_argument_list(self, stream: TokenStream) -> Tuple[str, ...]:
        stream.expect('punct', '(')
        names = [stream.expect_variable()]
        while stream.at('punct', ','):
            stream.advance()
            names.append(stream.expect_variable())
        stream.expect('punct', ')')
        return tuple(names)

    def _parse_constraints(self, stream: TokenStream) -> List[Constraint]:
        constraints = [self._parse_atom(stream)]
        while stream.at('punct', '&'):
            stream.advance()
            constraints.append(self._parse_atom(stream))
        stream.expect_end()
        return constraints

    def _parse_atom(self, stream: TokenStream) -> Constraint:
        if stream.at('ident') and stream.tokens[stream.index + 1].value == '(':
            name = stream.advance().value
            args = self._parse_argument_list(stream)
            relation = self.document.relation(name)
            if len(args) != relation.arity:
                raise InstanceError(f"relation '{name}' has arity {relation.arity}, "
                                    f"applied to {len(args)} arguments")
            return Constraint(relation, args, name)
        atom = stream.parse_comparison()
        text = f"{atom.left} {atom.op} {atom.right}"
        local = ('a', 'b')
        relation = relation_of_formula(parse_formula(f"a {atom.op} b"), local)
        return Constraint(relation, (atom.left, atom.right), text, comparison=True)

    def _parse_csp(self, text: str) -> CSPInstance:
        stream = TokenStream(tokenize(text))
        return CSPInstance.from_constraints(self._parse_constraints(stream))

    def _parse_qcsp(self, text: str) -> QCSPInstance:
        stream = TokenStream(tokenize(text))
        prefix = []
        while not stream.at('punct', ':'):
            token = stream.expect('ident', what="'forall', 'exists' or ':'")
            if token.value not in ('forall', 'exists'):
                raise FormulaSyntaxError(f"expected 'forall' or 'exists', found {token.value!r}",
                                         token.position)
            prefix.append((Quantifier(token.value), stream.expect_variable()))
        if not prefix:
            raise InstanceError("qcsp needs at least one quantified variable")
        stream.advance()
        return QCSPInstance(tuple(prefix), tuple(self._parse_constraints(stream)))


def parse_document(text: str) -> InstanceDocument:
    return InstanceParser().parse(text)


def parse_instance(text: str) -> Instance:
    """Parse an instance file's text and return its CSP or QCSP problem."""
    document = parse_document(text)
    if document.problem is None:
        raise InstanceError("no csp or qcsp line found")
    return document.problem


def load_document(file_path: str) -> InstanceDocument:
    path = Path(file_path)
    logger.info(f"Loading instance file: {path}")
    return parse_document(path.read_text(encoding='utf-8'))
