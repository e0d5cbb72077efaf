"""Canonical clause-component form for the Spider-style SQL subset.

A query is parsed into sets of clause components (select items, tables,
join conditions, WHERE conjuncts, ...) so that two queries compare equal
exactly when their logical forms match, regardless of whitespace, case,
conjunct order, select-item order, join order, or table aliasing.

Grammar scope: SELECT / FROM / JOIN ... ON / WHERE / GROUP BY / HAVING /
ORDER BY / LIMIT, nested subqueries in conditions, and UNION / EXCEPT /
INTERSECT. Outside that subset (CTEs, window functions, outer joins,
derived tables in FROM, arithmetic expressions, CASE) parsing raises
UnsupportedSqlError rather than guessing.

Canonicalization rules:
  - identifiers lower-cased; string literals keep their case
  - table aliases resolved to base table names
  - numeric literals stripped of trailing zeros (1.50 == 1.5, 1.0 == 1)
  - symmetric comparisons (=, !=) and join pairs stored side-sorted;
    literal-left comparisons mirrored so the column lands on the left
  - IN lists compared as sets; BETWEEN bounds stay ordered
  - a chain of ORs is one WHERE conjunct holding a set of disjuncts
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Tuple, Union

HARDNESS_RULES_VERSION = "hardness-v1"

AGGREGATE_FUNCS = ("count", "sum", "avg", "min", "max")

_RESERVED = {
    "select", "from", "where", "group", "by", "having", "order", "limit",
    "join", "on", "as", "and", "or", "not", "in", "like", "between",
    "exists", "union", "except", "intersect", "distinct", "asc", "desc",
}

# Recognized but out of grammar scope; rejected with a distinct error.
_UNSUPPORTED_WORDS = {
    "with", "case", "over", "left", "right", "full", "outer", "cross",
    "natural", "cast", "is", "all", "window", "offset",
}


class SqlParseError(ValueError):
    """Syntax error; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnsupportedSqlError(SqlParseError):
    """Syntactically recognizable construct outside the supported subset."""


class Hardness(enum.IntEnum):
    EASY = 1
    MEDIUM = 2
    HARD = 3
    EXTRA = 4

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "Hardness":
        return cls[label.upper()]


# ---------------------------------------------------------------------------
# Canonical value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnRef:
    """A (possibly table-qualified) column name, or *."""

    name: str


@dataclass(frozen=True)
class Literal:
    kind: str  # "num" | "str"
    value: str


@dataclass(frozen=True)
class AggRef:
    func: str
    column: str
    distinct: bool


Operand = Union[ColumnRef, Literal, AggRef, "CanonicalQuery"]


@dataclass(frozen=True)
class Condition:
    """One atomic predicate.

    `right` is a Literal, ColumnRef, AggRef, nested CanonicalQuery,
    a frozenset of Literals (IN list) or an ordered pair (BETWEEN).
    EXISTS has no left operand.
    """

    left: Optional[Operand]
    operator: str
    right: object


@dataclass(frozen=True)
class Disjunction:
    """An OR chain; one WHERE/HAVING conjunct with multiple disjuncts."""

    disjuncts: FrozenSet[Condition]


@dataclass(frozen=True)
class SelectItem:
    aggregate: str  # "none" or one of AGGREGATE_FUNCS
    column: str
    distinct: bool


@dataclass(frozen=True)
class CanonicalQuery:
    select_items: FrozenSet[SelectItem]
    from_tables: FrozenSet[str]
    join_conditions: FrozenSet[Tuple[str, str]]
    where_conjuncts: FrozenSet[Union[Condition, Disjunction]]
    group_by: FrozenSet[str]
    having: FrozenSet[Union[Condition, Disjunction]]
    order_by: Tuple[Tuple[Operand, str], ...]
    limit: Optional[int]
    set_op: Optional[Tuple[str, "CanonicalQuery"]]


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TWO_CHAR_OPS = ("<=", ">=", "!=", "<>")
_ONE_CHAR_OPS = "(),.*=<>"


@dataclass
class _Token:
    kind: str  # word | number | string | op | eof
    value: str
    offset: int


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "'\"":
            quote = ch
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise SqlParseError("unterminated string literal", i)
                if text[j] == quote:
                    if j + 1 < n and text[j + 1] == quote:  # doubled-quote escape
                        buf.append(quote)
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            tokens.append(_Token("string", "".join(buf), i))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(_Token("number", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("word", text[i:j], i))
            i = j
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(_Token("op", "!=" if two == "<>" else two, i))
            i += 2
            continue
        if ch in _ONE_CHAR_OPS or ch in "+-":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        if ch == ";":
            # Trailing semicolons are tolerated; anything after is an error.
            rest = text[i + 1:].strip()
            if rest:
                raise SqlParseError("unexpected text after ';'", i + 1)
            break
        raise SqlParseError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("eof", "", n))
    return tokens


def _canonical_number(raw: str) -> str:
    s = raw
    if s.startswith("."):
        s = "0" + s
    if "." in s:
        s = s.rstrip("0").rstrip(".")
        if s in ("", "-"):
            s += "0"
    return s


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, tokens: List[_Token]):
        self.text = text
        self.tokens = tokens
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, ahead: int = 0) -> _Token:
        idx = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[idx]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at_word(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "word" and tok.value.lower() in words

    def take_word(self, *words: str) -> bool:
        if self.at_word(*words):
            self.next()
            return True
        return False

    def expect_word(self, word: str) -> None:
        tok = self.peek()
        if not self.at_word(word):
            raise SqlParseError(f"expected {word.upper()}, found {tok.value!r}", tok.offset)
        self.next()

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.value in ops

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if not self.at_op(op):
            found = tok.value if tok.kind != "eof" else "end of input"
            raise SqlParseError(f"expected {op!r}, found {found}", tok.offset)
        self.next()

    def reject_unsupported(self) -> None:
        tok = self.peek()
        if tok.kind == "word" and tok.value.lower() in _UNSUPPORTED_WORDS:
            raise UnsupportedSqlError(
                f"unsupported construct {tok.value.upper()!r}", tok.offset
            )

    # -- entry points -------------------------------------------------------

    def parse_query(self, aliases: dict) -> CanonicalQuery:
        self.reject_unsupported()
        if self.at_op("("):
            # Parenthesized set-op operand: ( SELECT ... ) UNION ...
            save = self.pos
            self.next()
            if self.at_word("select"):
                left = self.parse_query(dict(aliases))
                self.expect_op(")")
                return self._maybe_set_op(left, aliases)
            self.pos = save
        left = self.parse_select_block(aliases)
        return self._maybe_set_op(left, aliases)

    def _maybe_set_op(self, left: CanonicalQuery, aliases: dict) -> CanonicalQuery:
        if self.at_word("union", "except", "intersect"):
            op = self.next().value.lower()
            if self.at_word("all"):
                tok = self.peek()
                raise UnsupportedSqlError(f"unsupported construct '{op.upper()} ALL'", tok.offset)
            right = self.parse_query(dict(aliases))
            return _replace_set_op(left, (op, right))
        return left

    # -- SELECT block -------------------------------------------------------

    def parse_select_block(self, aliases: dict) -> CanonicalQuery:
        self.reject_unsupported()
        tok = self.peek()
        if not self.at_word("select"):
            found = tok.value if tok.kind != "eof" else "end of input"
            raise SqlParseError(f"expected SELECT, found {found!r}", tok.offset)
        self.next()
        select_distinct = self.take_word("distinct")

        raw_items = [self.parse_select_item()]
        while self.at_op(","):
            self.next()
            raw_items.append(self.parse_select_item())

        from_tables: FrozenSet[str] = frozenset()
        join_conds: List[Tuple[str, str]] = []
        extra_where: List[Union[Condition, Disjunction]] = []
        if self.at_word("from"):
            self.next()
            from_tables, join_conds, extra_where = self.parse_from_clause(aliases)

        # Aliases are known only after FROM; resolve deferred references now.
        select_items = frozenset(
            SelectItem(
                aggregate=item.aggregate,
                column=self._resolve(item.column, aliases),
                distinct=item.distinct or (select_distinct and item.aggregate == "none"),
            )
            for item in raw_items
        )

        where: List[Union[Condition, Disjunction]] = list(extra_where)
        if self.take_word("where"):
            where.extend(self.parse_condition_list(aliases))

        group_by: FrozenSet[str] = frozenset()
        if self.at_word("group"):
            self.next()
            self.expect_word("by")
            cols = [self.parse_column_name(aliases)]
            while self.at_op(","):
                self.next()
                cols.append(self.parse_column_name(aliases))
            group_by = frozenset(cols)

        having: List[Union[Condition, Disjunction]] = []
        if self.take_word("having"):
            having = self.parse_condition_list(aliases)

        order_by: List[Tuple[Operand, str]] = []
        if self.at_word("order"):
            self.next()
            self.expect_word("by")
            order_by.append(self.parse_order_item(aliases))
            while self.at_op(","):
                self.next()
                order_by.append(self.parse_order_item(aliases))

        limit: Optional[int] = None
        if self.take_word("limit"):
            tok = self.peek()
            if tok.kind != "number" or "." in tok.value:
                raise SqlParseError("LIMIT requires an integer", tok.offset)
            self.next()
            limit = int(tok.value)

        return CanonicalQuery(
            select_items=select_items,
            from_tables=from_tables,
            join_conditions=frozenset(join_conds),
            where_conjuncts=frozenset(where),
            group_by=group_by,
            having=frozenset(having),
            order_by=tuple(order_by),
            limit=limit,
            set_op=None,
        )

    def parse_select_item(self) -> SelectItem:
        self.reject_unsupported()
        tok = self.peek()
        if self.at_op("*"):
            self.next()
            return SelectItem("none", "*", False)
        if tok.kind != "word":
            raise SqlParseError(f"expected select expression, found {tok.value!r}", tok.offset)
        agg = self._try_parse_aggregate()
        if agg is not None:
            item = SelectItem(agg.func, agg.column, agg.distinct)
        else:
            name = self._parse_dotted_name()
            item = SelectItem("none", name, False)
        self._check_no_arithmetic()
        if self.take_word("as"):
            alias_tok = self.next()
            if alias_tok.kind != "word":
                raise SqlParseError("expected alias after AS", alias_tok.offset)
            # Select aliases do not affect the logical form; dropped.
        return item

    def _check_no_arithmetic(self) -> None:
        tok = self.peek()
        if tok.kind == "op" and tok.value in "+-":
            raise UnsupportedSqlError("unsupported arithmetic expression", tok.offset)
        if tok.kind == "op" and tok.value == "*" and self.peek(1).kind in ("word", "number"):
            raise UnsupportedSqlError("unsupported arithmetic expression", tok.offset)

    def _try_parse_aggregate(self) -> Optional[AggRef]:
        tok = self.peek()
        if (
            tok.kind == "word"
            and tok.value.lower() in AGGREGATE_FUNCS
            and self.peek(1).kind == "op"
            and self.peek(1).value == "("
        ):
            func = self.next().value.lower()
            self.next()  # (
            distinct = self.take_word("distinct")
            if self.at_op("*"):
                self.next()
                column = "*"
            else:
                column = self._parse_dotted_name()
            self.expect_op(")")
            if self.at_word("over"):
                raise UnsupportedSqlError("unsupported construct 'OVER'", self.peek().offset)
            return AggRef(func, column, distinct)
        return None

    def _parse_dotted_name(self) -> str:
        tok = self.peek()
        if tok.kind != "word":
            raise SqlParseError(f"expected identifier, found {tok.value!r}", tok.offset)
        if tok.value.lower() in _RESERVED:
            raise SqlParseError(f"unexpected keyword {tok.value!r}", tok.offset)
        self.next()
        name = tok.value.lower()
        if self.at_op("."):
            self.next()
            if self.at_op("*"):
                self.next()
                return f"{name}.*"
            col = self.peek()
            if col.kind != "word":
                raise SqlParseError("expected column name after '.'", col.offset)
            self.next()
            name = f"{name}.{col.value.lower()}"
        return name

    def _resolve(self, name: str, aliases: dict) -> str:
        """Replace an alias qualifier with its base table name."""
        if "." in name:
            head, tail = name.split(".", 1)
            head = aliases.get(head, head)
            return f"{head}.{tail}"
        return name

    def parse_column_name(self, aliases: dict) -> str:
        return self._resolve(self._parse_dotted_name(), aliases)

    # -- FROM clause --------------------------------------------------------

    def parse_from_clause(self, aliases: dict):
        tables: List[str] = []
        join_conds: List[Tuple[str, str]] = []
        deferred_on: List[object] = []  # raw condition groups, resolved after all aliases known

        def parse_table_item():
            self.reject_unsupported()
            tok = self.peek()
            if self.at_op("("):
                raise UnsupportedSqlError("unsupported derived table in FROM", tok.offset)
            if tok.kind != "word":
                found = tok.value if tok.kind != "eof" else "end of input"
                raise SqlParseError(f"expected table name, found {found!r}", tok.offset)
            self.next()
            table = tok.value.lower()
            tables.append(table)
            if self.take_word("as"):
                alias_tok = self.next()
                if alias_tok.kind != "word":
                    raise SqlParseError("expected alias after AS", alias_tok.offset)
                aliases[alias_tok.value.lower()] = table
            elif (
                self.peek().kind == "word"
                and self.peek().value.lower() not in _RESERVED
                and self.peek().value.lower() not in _UNSUPPORTED_WORDS
            ):
                alias_tok = self.next()
                aliases[alias_tok.value.lower()] = table

        parse_table_item()
        while True:
            if self.at_word("left", "right", "full", "cross", "natural", "outer"):
                raise UnsupportedSqlError(
                    f"unsupported join type {self.peek().value.upper()!r}",
                    self.peek().offset,
                )
            if self.at_op(","):
                self.next()
                parse_table_item()
            elif self.at_word("inner"):
                self.next()
                self.expect_word("join")
                parse_table_item()
                if self.take_word("on"):
                    deferred_on.append(self._parse_raw_condition_tokens(aliases))
            elif self.at_word("join"):
                self.next()
                parse_table_item()
                if self.take_word("on"):
                    deferred_on.append(self._parse_raw_condition_tokens(aliases))
            else:
                break

        # ON conditions were captured as token spans; aliases declared later in
        # the FROM clause are visible to earlier ON clauses, so resolve last.
        extra_where: List[Union[Condition, Disjunction]] = []
        for span in deferred_on:
            for conjunct in self._parse_condition_span(span, aliases):
                pair = _as_join_pair(conjunct)
                if pair is not None:
                    join_conds.append(pair)
                else:
                    extra_where.append(conjunct)
        return frozenset(tables), join_conds, extra_where

    def _parse_raw_condition_tokens(self, aliases: dict):
        """Capture the token span of an ON condition without resolving it."""
        start = self.pos
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.kind == "op" and tok.value == "(":
                depth += 1
            elif tok.kind == "op" and tok.value == ")":
                if depth == 0:
                    break
                depth -= 1
            elif depth == 0 and tok.kind == "word":
                w = tok.value.lower()
                if w in ("join", "inner", "where", "group", "having", "order",
                         "limit", "union", "except", "intersect"):
                    break
                if w == "on":
                    break
            elif depth == 0 and tok.kind == "op" and tok.value == ",":
                break
            self.next()
        return (start, self.pos)

    def _parse_condition_span(self, span, aliases: dict):
        saved = self.pos
        self.pos = span[0]
        conds = self.parse_condition_list(aliases, stop=span[1])
        self.pos = saved
        return conds

    # -- conditions ---------------------------------------------------------

    def parse_condition_list(self, aliases: dict, stop: Optional[int] = None):
        """Parse an AND/OR condition into a list of conjuncts.

        OR binds looser than AND. An OR chain over atomic predicates becomes
        a single Disjunction conjunct; AND nested inside OR is outside the
        supported subset.
        """
        first = self._parse_or_group(aliases, stop)
        conjuncts: List[Union[Condition, Disjunction]] = [first]
        while self._more(stop) and self.at_word("and"):
            self.next()
            conjuncts.append(self._parse_or_group(aliases, stop))
        return conjuncts

    def _more(self, stop: Optional[int]) -> bool:
        return stop is None or self.pos < stop

    def _parse_or_group(self, aliases: dict, stop: Optional[int]):
        start = self.peek().offset
        first = self._parse_atom(aliases, stop)
        if not (self._more(stop) and self.at_word("or")):
            return first
        disjuncts = [first]
        while self._more(stop) and self.at_word("or"):
            self.next()
            disjuncts.append(self._parse_atom(aliases, stop))
        flat: List[Condition] = []
        for d in disjuncts:
            if isinstance(d, _Conjunction):
                raise UnsupportedSqlError("unsupported AND group inside OR", start)
            if isinstance(d, Disjunction):
                flat.extend(d.disjuncts)
            else:
                flat.append(d)
        return Disjunction(frozenset(flat))

    def _parse_atom(self, aliases: dict, stop: Optional[int]):
        self.reject_unsupported()
        tok = self.peek()
        if self.at_word("not"):
            nxt = self.peek(1)
            if nxt.kind == "op" and nxt.value == "(":
                raise UnsupportedSqlError("unsupported NOT over a group", tok.offset)
            if nxt.kind == "word" and nxt.value.lower() == "exists":
                self.next()
                return self._parse_exists(aliases, negate=True)
            return self._parse_predicate(aliases, negate=True)
        if self.at_word("exists"):
            return self._parse_exists(aliases, negate=False)
        if self.at_op("("):
            # Either a grouped condition or a scalar subquery comparison.
            if self.peek(1).kind == "word" and self.peek(1).value.lower() == "select":
                return self._parse_predicate(aliases, negate=False)
            self.next()
            inner = self.parse_condition_list(aliases)
            self.expect_op(")")
            if len(inner) > 1:
                # (a AND b) inside a larger condition; only legal standalone.
                if self._more(stop) and self.at_word("or"):
                    raise UnsupportedSqlError(
                        "unsupported AND group inside OR", tok.offset
                    )
                return _Conjunction(inner)
            return inner[0]
        return self._parse_predicate(aliases, negate=False)

    def _parse_exists(self, aliases: dict, negate: bool) -> Condition:
        self.expect_word("exists")
        self.expect_op("(")
        sub = self.parse_query(dict(aliases))
        self.expect_op(")")
        return Condition(None, "not_exists" if negate else "exists", sub)

    def _parse_predicate(self, aliases: dict, negate: bool) -> Condition:
        if negate:
            self.expect_word("not")
        left = self._parse_operand(aliases)

        if self.at_word("not"):
            self.next()
            if self.at_word("in"):
                self.next()
                return self._finish_in(left, aliases, negated=not negate)
            if self.at_word("like"):
                self.next()
                return self._finish_like(left, negated=not negate)
            if self.at_word("between"):
                self.next()
                return self._finish_between(left, aliases, negated=not negate)
            raise SqlParseError("expected IN, LIKE or BETWEEN after NOT", self.peek().offset)
        if self.at_word("in"):
            self.next()
            return self._finish_in(left, aliases, negated=negate)
        if self.at_word("like"):
            self.next()
            return self._finish_like(left, negated=negate)
        if self.at_word("between"):
            self.next()
            return self._finish_between(left, aliases, negated=negate)

        tok = self.peek()
        if tok.kind == "op" and tok.value in ("=", "!=", "<", "<=", ">", ">="):
            self.next()
            op = tok.value
            if negate:
                op = _NEGATED_COMPARISON[op]
            right = self._parse_operand(aliases)
            return _orient_comparison(left, op, right)
        if tok.kind == "word" and tok.value.lower() in _UNSUPPORTED_WORDS:
            raise UnsupportedSqlError(
                f"unsupported construct {tok.value.upper()!r}", tok.offset
            )
        found = tok.value if tok.kind != "eof" else "end of input"
        raise SqlParseError(f"expected comparison operator, found {found!r}", tok.offset)

    def _finish_in(self, left: Operand, aliases: dict, negated: bool) -> Condition:
        self.expect_op("(")
        op = "not_in" if negated else "in"
        if self.at_word("select") or (self.at_op("(") and self.peek(1).value.lower() == "select"):
            sub = self.parse_query(dict(aliases))
            self.expect_op(")")
            return Condition(left, op, sub)
        items = [self._parse_literal()]
        while self.at_op(","):
            self.next()
            items.append(self._parse_literal())
        self.expect_op(")")
        return Condition(left, op, frozenset(items))

    def _finish_like(self, left: Operand, negated: bool) -> Condition:
        pattern = self._parse_literal()
        return Condition(left, "not_like" if negated else "like", pattern)

    def _finish_between(self, left: Operand, aliases: dict, negated: bool) -> Condition:
        low = self._parse_operand(aliases)
        self.expect_word("and")
        high = self._parse_operand(aliases)
        return Condition(left, "not_between" if negated else "between", (low, high))

    def _parse_literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "string":
            self.next()
            return Literal("str", tok.value)
        sign = ""
        if tok.kind == "op" and tok.value in "+-":
            sign = tok.value
            self.next()
            tok = self.peek()
        if tok.kind == "number":
            self.next()
            value = _canonical_number(tok.value)
            if sign == "-" and value != "0":
                value = "-" + value
            return Literal("num", value)
        raise SqlParseError(f"expected literal, found {tok.value!r}", tok.offset)

    def _parse_operand(self, aliases: dict) -> Operand:
        self.reject_unsupported()
        tok = self.peek()
        if tok.kind in ("string", "number") or (tok.kind == "op" and tok.value in "+-"):
            return self._parse_literal()
        if tok.kind == "op" and tok.value == "(":
            if self.peek(1).kind == "word" and self.peek(1).value.lower() == "select":
                self.next()
                sub = self.parse_query(dict(aliases))
                self.expect_op(")")
                return sub
            raise SqlParseError("expected scalar subquery", tok.offset)
        if tok.kind == "word":
            agg = self._try_parse_aggregate()
            if agg is not None:
                return AggRef(agg.func, self._resolve(agg.column, aliases), agg.distinct)
            name = self.parse_column_name(aliases)
            self._check_no_arithmetic()
            return ColumnRef(name)
        found = tok.value if tok.kind != "eof" else "end of input"
        raise SqlParseError(f"expected operand, found {found!r}", tok.offset)

    # -- ORDER BY -----------------------------------------------------------

    def parse_order_item(self, aliases: dict) -> Tuple[Operand, str]:
        agg = self._try_parse_aggregate()
        if agg is not None:
            expr: Operand = AggRef(agg.func, self._resolve(agg.column, aliases), agg.distinct)
        else:
            expr = ColumnRef(self.parse_column_name(aliases))
        direction = "asc"
        if self.at_word("asc", "desc"):
            direction = self.next().value.lower()
        return expr, direction


class _Conjunction:
    """Transient holder for a parenthesized AND group (flattened upward)."""

    def __init__(self, conjuncts):
        self.conjuncts = conjuncts


_NEGATED_COMPARISON = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
_MIRRORED_COMPARISON = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


def _operand_sort_key(op: object):
    if isinstance(op, Literal):
        return ("0lit", op.kind, op.value)
    if isinstance(op, ColumnRef):
        return ("1col", op.name)
    if isinstance(op, AggRef):
        return ("2agg", op.func, op.column, str(op.distinct))
    if isinstance(op, CanonicalQuery):
        return ("3sub", render(op))
    if isinstance(op, frozenset):
        return ("4set",) + tuple(sorted(_operand_sort_key(x) for x in op))
    if isinstance(op, tuple):
        return ("5pair",) + tuple(_operand_sort_key(x) for x in op)
    if op is None:
        return ("6none",)
    raise TypeError(f"unexpected operand {op!r}")


def _orient_comparison(left: Operand, op: str, right: Operand) -> Condition:
    """Canonical operand orientation for comparisons.

    Literal-left forms are mirrored (1 < age  ->  age > 1); symmetric
    operators over two columns store the sides sorted.
    """
    if isinstance(left, Literal) and not isinstance(right, Literal):
        left, right = right, left
        op = _MIRRORED_COMPARISON[op]
    if op in ("=", "!=") and not isinstance(left, Literal) and not isinstance(right, Literal):
        if _operand_sort_key(left) > _operand_sort_key(right):
            left, right = right, left
    return Condition(left, op, right)


def _as_join_pair(conjunct) -> Optional[Tuple[str, str]]:
    """A join condition is an equality of qualified columns of two tables."""
    if not isinstance(conjunct, Condition) or conjunct.operator != "=":
        return None
    left, right = conjunct.left, conjunct.right
    if not (isinstance(left, ColumnRef) and isinstance(right, ColumnRef)):
        return None
    if "." not in left.name or "." not in right.name:
        return None
    if left.name.split(".", 1)[0] == right.name.split(".", 1)[0]:
        return None
    a, b = sorted((left.name, right.name))
    return (a, b)


def _replace_set_op(q: CanonicalQuery, set_op) -> CanonicalQuery:
    return CanonicalQuery(
        select_items=q.select_items,
        from_tables=q.from_tables,
        join_conditions=q.join_conditions,
        where_conjuncts=q.where_conjuncts,
        group_by=q.group_by,
        having=q.having,
        order_by=q.order_by,
        limit=q.limit,
        set_op=set_op,
    )


@functools.lru_cache(maxsize=8192)
def _parse_cached(text: str) -> CanonicalQuery:
    parser = _Parser(text, _tokenize(text))
    query = parser.parse_query({})
    tok = parser.peek()
    if tok.kind != "eof":
        if tok.kind == "word" and tok.value.lower() in _UNSUPPORTED_WORDS:
            raise UnsupportedSqlError(
                f"unsupported construct {tok.value.upper()!r}", tok.offset
            )
        raise SqlParseError(f"unexpected trailing input {tok.value!r}", tok.offset)
    # Parenthesized AND groups flatten into the enclosing conjunct set; a
    # bare "(a AND b)" at statement level arrives here as a _Conjunction.
    return _flatten(query)


def _flatten(q: CanonicalQuery) -> CanonicalQuery:
    def flatten_set(items):
        out = []
        for item in items:
            if isinstance(item, _Conjunction):
                out.extend(item.conjuncts)
            else:
                out.append(item)
        return frozenset(out)

    return CanonicalQuery(
        select_items=q.select_items,
        from_tables=q.from_tables,
        join_conditions=q.join_conditions,
        where_conjuncts=flatten_set(q.where_conjuncts),
        group_by=q.group_by,
        having=flatten_set(q.having),
        order_by=q.order_by,
        limit=q.limit,
        set_op=(q.set_op[0], _flatten(q.set_op[1])) if q.set_op else None,
    )


def parse_sql(text: str) -> CanonicalQuery:
    """Parse SQL text into its canonical clause-component form."""
    if not isinstance(text, str):
        raise SqlParseError("input is not a string", 0)
    return _parse_cached(text)


def equivalent(a: str, b: str) -> bool:
    """Logical-form equivalence: canonical forms compare equal.

    Raises SqlParseError when either side does not parse; callers choose
    the policy (labeling marks such candidates not-gold).
    """
    return parse_sql(a) == parse_sql(b)


# ---------------------------------------------------------------------------
# Hardness classification (rule table "hardness-v1")
# ---------------------------------------------------------------------------
#
# c1 (breadth): #WHERE conjuncts + [GROUP BY] + [ORDER BY] + [LIMIT]
#               + #join conditions + #extra OR branches + #LIKE operators
#               + #aggregate occurrences + (#select items - 1),
#               summed over every block in the query tree.
#               An OR chain counts once as a conjunct plus (branches - 1).
# c2 (nesting): #nested subqueries + #set operators, over the whole tree.
#
#   easy    c2 == 0 and c1 <= 1
#   medium  c2 == 0 and 2 <= c1 <= 3
#   hard    (c2 == 0 and c1 >= 4) or (c2 == 1 and c1 <= 1)
#   extra   everything else

def _walk_conditions(conjuncts):
    for item in conjuncts:
        if isinstance(item, Disjunction):
            yield from item.disjuncts
        else:
            yield item


def _operand_counts(op: object):
    """(aggregate occurrences, subquery count, nested c1) for an operand."""
    if isinstance(op, AggRef):
        return 1, 0, 0
    if isinstance(op, CanonicalQuery):
        c1, c2 = _component_counts(op)
        return 0, c2 + 1, c1
    if isinstance(op, tuple):
        aggs = subs = c1 = 0
        for item in op:
            a, s, c = _operand_counts(item)
            aggs, subs, c1 = aggs + a, subs + s, c1 + c
        return aggs, subs, c1
    return 0, 0, 0


def _component_counts(q: CanonicalQuery) -> Tuple[int, int]:
    c1 = len(q.where_conjuncts)
    c1 += 1 if q.group_by else 0
    c1 += 1 if q.order_by else 0
    c1 += 1 if q.limit is not None else 0
    c1 += len(q.join_conditions)
    c1 += len(q.select_items) - 1
    c2 = 0

    for item in q.select_items:
        if item.aggregate != "none":
            c1 += 1

    for conjunct in list(q.where_conjuncts) + list(q.having):
        if isinstance(conjunct, Disjunction):
            c1 += len(conjunct.disjuncts) - 1

    for cond in list(_walk_conditions(q.where_conjuncts)) + list(_walk_conditions(q.having)):
        if cond.operator in ("like", "not_like"):
            c1 += 1
        for side in (cond.left, cond.right):
            aggs, subs, nested_c1 = _operand_counts(side)
            c1 += aggs + nested_c1
            c2 += subs

    for expr, _direction in q.order_by:
        aggs, subs, nested_c1 = _operand_counts(expr)
        c1 += aggs + nested_c1
        c2 += subs

    if q.set_op is not None:
        sub_c1, sub_c2 = _component_counts(q.set_op[1])
        c1 += sub_c1
        c2 += sub_c2 + 1
    return c1, c2


def hardness(q: CanonicalQuery) -> Hardness:
    """Four-way difficulty bucket from the query's feature counts."""
    c1, c2 = _component_counts(q)
    if c2 == 0 and c1 <= 1:
        return Hardness.EASY
    if c2 == 0 and 2 <= c1 <= 3:
        return Hardness.MEDIUM
    if (c2 == 0 and c1 >= 4) or (c2 == 1 and c1 <= 1):
        return Hardness.HARD
    return Hardness.EXTRA


def hardness_of_sql(text: str) -> Hardness:
    return hardness(parse_sql(text))


# ---------------------------------------------------------------------------
# Rendering and debug output
# ---------------------------------------------------------------------------

def _render_literal(lit: Literal) -> str:
    if lit.kind == "num":
        return lit.value
    return "'" + lit.value.replace("'", "''") + "'"


def _render_operand(op: object) -> str:
    if isinstance(op, Literal):
        return _render_literal(op)
    if isinstance(op, ColumnRef):
        return op.name
    if isinstance(op, AggRef):
        inner = ("distinct " if op.distinct else "") + op.column
        return f"{op.func}({inner})"
    if isinstance(op, CanonicalQuery):
        return "(" + render(op) + ")"
    raise TypeError(f"cannot render operand {op!r}")


_OP_TEXT = {
    "=": "=", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">=",
    "like": "like", "not_like": "not like",
}


def _render_condition(cond: Condition) -> str:
    op = cond.operator
    if op in ("exists", "not_exists"):
        kw = "exists" if op == "exists" else "not exists"
        return f"{kw} {_render_operand(cond.right)}"
    left = _render_operand(cond.left)
    if op in ("in", "not_in"):
        kw = "in" if op == "in" else "not in"
        if isinstance(cond.right, CanonicalQuery):
            return f"{left} {kw} {_render_operand(cond.right)}"
        items = sorted(cond.right, key=_operand_sort_key)
        return f"{left} {kw} ({', '.join(_render_literal(x) for x in items)})"
    if op in ("between", "not_between"):
        kw = "between" if op == "between" else "not between"
        low, high = cond.right
        return f"{left} {kw} {_render_operand(low)} and {_render_operand(high)}"
    return f"{left} {_OP_TEXT[op]} {_render_operand(cond.right)}"


def _conjunct_sort_key(conjunct):
    if isinstance(conjunct, Disjunction):
        return ("1or",) + tuple(sorted(_condition_sort_key(c) for c in conjunct.disjuncts))
    return ("0",) + _condition_sort_key(conjunct)


def _condition_sort_key(cond: Condition):
    return (cond.operator, _operand_sort_key(cond.left), _operand_sort_key(cond.right))


def _render_conjunct(conjunct) -> str:
    if isinstance(conjunct, Disjunction):
        parts = sorted(conjunct.disjuncts, key=_condition_sort_key)
        return "(" + " or ".join(_render_condition(c) for c in parts) + ")"
    return _render_condition(conjunct)


def _select_item_text(item: SelectItem) -> str:
    if item.aggregate == "none":
        return item.column
    inner = ("distinct " if item.distinct else "") + item.column
    return f"{item.aggregate}({inner})"


def render(q: CanonicalQuery) -> str:
    """Deterministic canonical SQL text; re-parsing yields `q` again."""
    items = sorted(q.select_items, key=lambda i: (i.aggregate, i.column, i.distinct))
    select_distinct = any(i.aggregate == "none" and i.distinct for i in items)
    parts = ["select"]
    if select_distinct:
        parts.append("distinct")
    parts.append(", ".join(_select_item_text(i) for i in items))

    if q.from_tables:
        tables = sorted(q.from_tables)
        remaining = sorted(q.join_conditions)
        from_text = tables[0]
        emitted = {tables[0]}
        for table in tables[1:]:
            conds = []
            for pair in list(remaining):
                pair_tables = {pair[0].split(".", 1)[0], pair[1].split(".", 1)[0]}
                if table in pair_tables and pair_tables <= emitted | {table}:
                    conds.append(pair)
                    remaining.remove(pair)
            emitted.add(table)
            if conds:
                on_text = " and ".join(f"{a} = {b}" for a, b in conds)
                from_text += f" join {table} on {on_text}"
            else:
                from_text += f", {table}"
        parts.append("from " + from_text)

    if q.where_conjuncts:
        conjuncts = sorted(q.where_conjuncts, key=_conjunct_sort_key)
        parts.append("where " + " and ".join(_render_conjunct(c) for c in conjuncts))
    if q.group_by:
        parts.append("group by " + ", ".join(sorted(q.group_by)))
    if q.having:
        conjuncts = sorted(q.having, key=_conjunct_sort_key)
        parts.append("having " + " and ".join(_render_conjunct(c) for c in conjuncts))
    if q.order_by:
        items_text = ", ".join(
            f"{_render_operand(expr)} {direction}" for expr, direction in q.order_by
        )
        parts.append("order by " + items_text)
    if q.limit is not None:
        parts.append(f"limit {q.limit}")
    text = " ".join(parts)
    if q.set_op is not None:
        op, right = q.set_op
        text += f" {op} " + render(right)
    return text


def format_tree(q: CanonicalQuery, indent: int = 0) -> str:
    """Indented text tree of the canonical form (debug output)."""
    pad = "  " * indent
    lines = [f"{pad}query:"]
    pad2 = "  " * (indent + 1)
    for item in sorted(q.select_items, key=lambda i: (i.aggregate, i.column, i.distinct)):
        lines.append(f"{pad2}select: {_select_item_text(item)}"
                     + (" [distinct]" if item.distinct and item.aggregate == "none" else ""))
    for table in sorted(q.from_tables):
        lines.append(f"{pad2}from: {table}")
    for a, b in sorted(q.join_conditions):
        lines.append(f"{pad2}join: {a} = {b}")
    for conjunct in sorted(q.where_conjuncts, key=_conjunct_sort_key):
        lines.append(f"{pad2}where: {_render_conjunct(conjunct)}")
        lines.extend(_subquery_trees(conjunct, indent + 2))
    for col in sorted(q.group_by):
        lines.append(f"{pad2}group by: {col}")
    for conjunct in sorted(q.having, key=_conjunct_sort_key):
        lines.append(f"{pad2}having: {_render_conjunct(conjunct)}")
        lines.extend(_subquery_trees(conjunct, indent + 2))
    for expr, direction in q.order_by:
        lines.append(f"{pad2}order by: {_render_operand(expr)} {direction}")
    if q.limit is not None:
        lines.append(f"{pad2}limit: {q.limit}")
    if q.set_op is not None:
        lines.append(f"{pad2}set op: {q.set_op[0]}")
        lines.append(format_tree(q.set_op[1], indent + 2))
    return "\n".join(lines)


def _subquery_trees(conjunct, indent: int) -> List[str]:
    out: List[str] = []
    for cond in ([conjunct] if isinstance(conjunct, Condition) else list(conjunct.disjuncts)):
        for side in (cond.left, cond.right):
            if isinstance(side, CanonicalQuery):
                out.append(format_tree(side, indent))
    return out
