"""Random SQL generator over the supported grammar, for fuzz properties.

Everything produced here must parse; the generator is deliberately
narrower than the parser. `shuffled_variant` builds a second string for
the same logical form with conjuncts/select items permuted and keyword
case flipped, for invariance checks.
"""

import random

SCHEMAS = {
    "singer": ["id", "name", "age", "country"],
    "concert": ["id", "singer_id", "year", "venue"],
    "album": ["id", "singer_id", "title", "sales"],
}

# (left table, left col, right table, right col) pairs used for joins
JOINS = [
    ("singer", "id", "concert", "singer_id"),
    ("singer", "id", "album", "singer_id"),
]

AGG_FUNCS = ["count", "sum", "avg", "min", "max"]
COMPARISONS = ["=", "!=", "<", "<=", ">", ">="]
WORDS = ["US", "jp", "Rock", "Blue", "Ana"]


class QueryGen:
    def __init__(self, seed=0):
        self.rng = random.Random(seed)

    def _literal(self):
        r = self.rng
        roll = r.random()
        if roll < 0.5:
            return str(r.randint(0, 500))
        if roll < 0.7:
            return f"{r.randint(0, 50)}.{r.randint(1, 99)}"
        return "'" + r.choice(WORDS) + "'"

    def _condition(self, cols, depth):
        r = self.rng
        col = r.choice(cols)
        roll = r.random()
        if roll < 0.45:
            return f"{col} {r.choice(COMPARISONS)} {self._literal()}"
        if roll < 0.6:
            return f"{col} LIKE '{r.choice(['A', 'b', 'x'])}%'"
        if roll < 0.7:
            lo, hi = sorted((r.randint(0, 100), r.randint(0, 100)))
            return f"{col} BETWEEN {lo} AND {hi}"
        if roll < 0.8:
            items = ", ".join(str(r.randint(0, 20)) for _ in range(r.randint(1, 3)))
            return f"{col} IN ({items})"
        if roll < 0.88 and depth == 0:
            table = r.choice(list(SCHEMAS))
            inner_col = r.choice(SCHEMAS[table])
            sub = self._simple_query(table, depth=1)
            return f"{col} IN (SELECT {inner_col} FROM {table}{sub})"
        a = f"{col} {r.choice(COMPARISONS)} {self._literal()}"
        b = f"{r.choice(cols)} {r.choice(COMPARISONS)} {self._literal()}"
        # Parenthesized so the OR stays one conjunct inside an AND chain.
        return f"({a} OR {b})"

    def _simple_query(self, table, depth):
        r = self.rng
        if r.random() < 0.5:
            cond = self._condition(SCHEMAS[table], depth)
            return f" WHERE {cond}"
        return ""

    def parts(self, depth=0):
        """Structured pieces of one random query."""
        r = self.rng
        use_join = depth == 0 and r.random() < 0.3
        if use_join:
            lt, lc, rt, rc = r.choice(JOINS)
            from_clause = f"{lt} AS T1 JOIN {rt} AS T2 ON T1.{lc} = T2.{rc}"
            cols = [f"T1.{c}" for c in SCHEMAS[lt]] + [f"T2.{c}" for c in SCHEMAS[rt]]
        else:
            table = r.choice(list(SCHEMAS))
            from_clause = table
            cols = list(SCHEMAS[table])

        items = []
        for _ in range(r.randint(1, 3)):
            if r.random() < 0.3:
                func = r.choice(AGG_FUNCS)
                inner = "*" if func == "count" and r.random() < 0.5 else r.choice(cols)
                distinct = "DISTINCT " if r.random() < 0.2 else ""
                items.append(f"{func}({distinct}{inner})")
            else:
                items.append(r.choice(cols))

        conjuncts = [
            self._condition(cols, depth) for _ in range(r.randint(0, 3))
        ]

        tail = []
        if r.random() < 0.25:
            tail.append(f"GROUP BY {r.choice(cols)}")
            if r.random() < 0.5:
                tail.append(f"HAVING count(*) {r.choice(['>', '>='])} {r.randint(1, 5)}")
        if r.random() < 0.3:
            direction = r.choice(["ASC", "DESC", ""])
            expr = r.choice(cols) if r.random() < 0.7 else "count(*)"
            tail.append(f"ORDER BY {expr} {direction}".rstrip())
        if r.random() < 0.3:
            tail.append(f"LIMIT {r.randint(1, 10)}")

        return {
            "distinct": r.random() < 0.15,
            "items": items,
            "from": from_clause,
            "conjuncts": conjuncts,
            "tail": tail,
        }

    @staticmethod
    def assemble(parts, item_order=None, conjunct_order=None, upper=False):
        items = list(parts["items"])
        conjuncts = list(parts["conjuncts"])
        if item_order is not None:
            items = [items[i] for i in item_order]
        if conjunct_order is not None:
            conjuncts = [conjuncts[i] for i in conjunct_order]
        sql = "SELECT "
        if parts["distinct"]:
            sql += "DISTINCT "
        sql += ", ".join(items)
        sql += " FROM " + parts["from"]
        if conjuncts:
            sql += " WHERE " + " AND ".join(conjuncts)
        for clause in parts["tail"]:
            sql += " " + clause
        return sql.upper() if upper else sql

    def query(self, depth=0):
        parts = self.parts(depth)
        sql = self.assemble(parts)
        if depth == 0 and self.rng.random() < 0.12:
            op = self.rng.choice(["UNION", "EXCEPT", "INTERSECT"])
            sql = f"{sql} {op} {self.assemble(self.parts(depth=1))}"
        return sql

    def shuffled_variant(self, parts):
        """A logically identical rendering with permuted components."""
        r = self.rng
        item_order = list(range(len(parts["items"])))
        conjunct_order = list(range(len(parts["conjuncts"])))
        r.shuffle(item_order)
        r.shuffle(conjunct_order)
        # Keyword case flips only when no string literal could be affected.
        has_string = any("'" in c for c in parts["conjuncts"])
        upper = not has_string and r.random() < 0.5
        return self.assemble(
            parts, item_order=item_order, conjunct_order=conjunct_order, upper=upper
        )
