"""Tiny filter language mapped onto per-dimension restrictions.

    filter := clause (AND clause)*
    clause := NAME '=' INT
            | NAME 'IN' '[' INT ',' INT ']'
            | NAME 'IN' '{' INT (',' INT)* '}'

Values are dimension values; they are scattered onto the dimension's key
positions, so parsing needs the layout.  Rendering produces the canonical
spelling (parse -> render -> parse is a fixpoint).
"""

from __future__ import annotations

import re

from .errors import ContractError
from .layout import Layout
from .matcher import Filter, PointFilter, RangeFilter, SetFilter

_CLAUSE = re.compile(
    r"""^\s*(?P<name>\w+)\s*
        (?:
            =\s*(?P<point>-?\d+)
          | [iI][nN]\s*\[\s*(?P<lo>-?\d+)\s*,\s*(?P<hi>-?\d+)\s*\]
          | [iI][nN]\s*\{\s*(?P<set>-?\d+(?:\s*,\s*-?\d+)*)\s*\}
        )\s*$""",
    re.VERBOSE,
)


def parse_query(text: str, layout: Layout) -> list[Filter]:
    """Parse the filter text into restrictions on the layout's dimensions."""
    if not text.strip():
        raise ContractError("empty filter expression")
    filters: list[Filter] = []
    seen: set[str] = set()
    for chunk in re.split(r"\s+[aA][nN][dD]\s+", text.strip()):
        m = _CLAUSE.match(chunk)
        if not m:
            raise ContractError(f"cannot parse filter clause {chunk!r}")
        name = m.group("name")
        mask = layout.dim_mask(name)  # raises on unknown dimension
        if name in seen:
            raise ContractError(f"dimension {name!r} filtered twice")
        seen.add(name)
        if m.group("point") is not None:
            filters.append(PointFilter(mask, layout.scatter(name, int(m.group("point")))))
        elif m.group("lo") is not None:
            lo, hi = int(m.group("lo")), int(m.group("hi"))
            if lo > hi:
                raise ContractError(f"range for {name!r} has lo > hi")
            filters.append(RangeFilter(mask, layout.scatter(name, lo), layout.scatter(name, hi)))
        else:
            values = sorted({int(v) for v in m.group("set").split(",")})
            filters.append(SetFilter(mask, tuple(layout.scatter(name, v) for v in values)))
    return filters


def render_query(filters: list[Filter], layout: Layout) -> str:
    """Canonical text for restrictions that sit on whole dimensions."""
    by_mask = {layout.dim_mask(d.name).bits: d.name for d in layout.dimensions}
    clauses = []
    for f in filters:
        name = by_mask.get(f.mask.bits)
        if name is None:
            raise ContractError("filter mask is not a single dimension")
        if isinstance(f, PointFilter):
            clauses.append(f"{name}={layout.gather(name, f.pattern)}")
        elif isinstance(f, RangeFilter):
            clauses.append(f"{name} IN [{layout.gather(name, f.lo)},{layout.gather(name, f.hi)}]")
        else:
            vals = ",".join(str(layout.gather(name, v)) for v in f.values)
            clauses.append(f"{name} IN {{{vals}}}")
    return " AND ".join(clauses)
