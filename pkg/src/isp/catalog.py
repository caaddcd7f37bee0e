"""Item catalogs and the label x item incidence structure.

A catalog is an ordered list of items, each carrying labels grouped by
category (``genre:comedy``, ``language:en``). The incidence matrix has one
row per observed label, optionally extended with composite labels for
pairs of categories, and one column per item in catalog order.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateId, ParseError, UnknownCategory, UnknownItem

PAIR_SEP = "×"
VALUE_SEP = "|"


@dataclass(frozen=True, order=True)
class Label:
    category: str
    value: str

    def __post_init__(self):
        if not self.category or not self.value:
            raise ValueError("label category and value must be non-empty")

    def __str__(self):
        return f"{self.category}:{self.value}"


@dataclass(frozen=True)
class Item:
    id: str
    labels: frozenset = frozenset()
    text: str | None = None

    def values(self, category: str) -> list[str]:
        return sorted(lab.value for lab in self.labels if lab.category == category)


@dataclass(frozen=True)
class Catalog:
    items: tuple
    categories: tuple

    def __post_init__(self):
        seen = set()
        for item in self.items:
            if item.id in seen:
                raise DuplicateId(item.id)
            seen.add(item.id)

    def __len__(self):
        return len(self.items)

    @property
    def ids(self) -> list[str]:
        return [item.id for item in self.items]

    @cached_property
    def _index(self) -> dict:
        return {item.id: i for i, item in enumerate(self.items)}

    def index_of(self, item_id: str) -> int:
        try:
            return self._index[item_id]
        except KeyError:
            raise UnknownItem(item_id) from None

    def subset(self, indices: Iterable[int]) -> "Catalog":
        """Catalog restricted to ``indices``, kept in ascending catalog order."""
        return Catalog(tuple(self.items[i] for i in sorted(set(indices))), self.categories)


def _split_cell(cell: str) -> list[str]:
    return [v.strip() for v in cell.split(VALUE_SEP) if v.strip()]


def _load_csv(path: Path) -> Catalog:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        if "id" not in header:
            raise ParseError("header has no 'id' column", line=1)
        if len(set(header)) != len(header):
            raise ParseError("duplicate column in header", line=1)
        id_col = header.index("id")
        text_col = header.index("text") if "text" in header else None
        cat_cols = [i for i, h in enumerate(header) if i not in (id_col, text_col)]
        categories = tuple(header[i] for i in cat_cols)
        if any(not c for c in categories):
            raise ParseError("empty category name in header", line=1)

        items = []
        seen = set()
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line)
            item_id = row[id_col].strip()
            if not item_id:
                raise ParseError("missing id", line=line)
            if item_id in seen:
                raise DuplicateId(f"{item_id} (line {line})")
            seen.add(item_id)
            labels = frozenset(
                Label(header[i], v) for i in cat_cols for v in _split_cell(row[i])
            )
            text = row[text_col] if text_col is not None else None
            items.append(Item(item_id, labels, text or None))
    return Catalog(tuple(items), categories)


def _load_json(path: Path) -> Catalog:
    try:
        with open(path, encoding="utf-8") as fh:
            records = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(records, list):
        raise ParseError("top-level value must be an array", line=1)

    items = []
    categories: list[str] = []
    seen = set()
    for n, rec in enumerate(records, start=1):
        where = f"record {n}"
        if not isinstance(rec, dict):
            raise ParseError(f"{where}: expected an object")
        item_id = rec.get("id")
        if not isinstance(item_id, str) or not item_id:
            raise ParseError(f"{where}: missing or non-string id")
        if item_id in seen:
            raise DuplicateId(f"{item_id} ({where})")
        seen.add(item_id)
        text = rec.get("text")
        if text is not None and not isinstance(text, str):
            raise ParseError(f"{where}: text must be a string")
        raw = rec.get("labels", {}) or {}
        if not isinstance(raw, dict):
            raise ParseError(f"{where}: labels must be an object")
        labels = set()
        for cat, values in raw.items():
            if isinstance(values, str):
                values = [values]
            if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
                raise ParseError(f"{where}: labels[{cat!r}] must be a list of strings")
            if not cat:
                raise ParseError(f"{where}: empty category name")
            if cat not in categories:
                categories.append(cat)
            labels.update(Label(cat, v.strip()) for v in values if v.strip())
        items.append(Item(item_id, frozenset(labels), text or None))
    return Catalog(tuple(items), tuple(categories))


def load_catalog(path, format: str | None = None) -> Catalog:
    """Read a catalog from a CSV or JSON file.

    CSV files have a header ``id,text,<category>,...`` with multiple values
    in one cell separated by ``|``. JSON files hold an array of
    ``{"id", "text", "labels": {category: [values]}}`` objects. The format is
    inferred from the suffix when not given.
    """
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    if format == "csv":
        return _load_csv(path)
    if format == "json":
        return _load_json(path)
    raise ValueError(f"unknown catalog format {format!r}")


def write_catalog_csv(catalog: Catalog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "text", *catalog.categories])
        for item in catalog.items:
            writer.writerow(
                [item.id, item.text or ""]
                + [VALUE_SEP.join(item.values(c)) for c in catalog.categories]
            )


def pair_label(a: Label, b: Label) -> Label:
    return Label(f"{a.category}{PAIR_SEP}{b.category}", f"{a.value}{PAIR_SEP}{b.value}")


@dataclass(frozen=True)
class IncidenceMatrix:
    """Boolean coverage structure: ``cover[r, c]`` is true iff item ``c`` carries label ``r``.

    Rows are sorted by ``(category, value)``. Labels that no column covers
    are kept out of the rows and listed in ``uncoverable``.
    """

    labels: tuple
    item_ids: tuple
    cover: np.ndarray
    uncoverable: tuple = field(default=())

    def __post_init__(self):
        cover = np.asarray(self.cover, dtype=bool)
        if cover.shape != (len(self.labels), len(self.item_ids)):
            raise ValueError(
                f"cover shape {cover.shape} != ({len(self.labels)}, {len(self.item_ids)})"
            )
        cover.flags.writeable = False
        object.__setattr__(self, "cover", cover)

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def n_cols(self) -> int:
        return len(self.item_ids)

    @cached_property
    def column_masks(self) -> tuple:
        """Per-column row sets as Python int bitmasks (bit r set iff row r covered)."""
        masks = []
        for c in range(self.n_cols):
            m = 0
            for r in np.flatnonzero(self.cover[:, c]):
                m |= 1 << int(r)
            masks.append(m)
        return tuple(masks)

    @property
    def full_mask(self) -> int:
        return (1 << self.n_rows) - 1

    @cached_property
    def _col_index(self) -> dict:
        return {item_id: c for c, item_id in enumerate(self.item_ids)}

    def column(self, item_id: str) -> int:
        try:
            return self._col_index[item_id]
        except KeyError:
            raise UnknownItem(item_id) from None

    def columns(self, item_ids: Iterable[str]) -> list[int]:
        return [self.column(i) for i in item_ids]

    @property
    def row_categories(self) -> list[str]:
        return [lab.category for lab in self.labels]

    def covered_mask(self, columns: Iterable[int]) -> np.ndarray:
        cols = list(columns)
        if not cols:
            return np.zeros(self.n_rows, dtype=bool)
        return self.cover[:, cols].any(axis=1)

    def restrict(self, columns: Sequence[int]) -> "IncidenceMatrix":
        """Keep only ``columns`` (in the given order); rows left empty become uncoverable."""
        cols = list(columns)
        sub = self.cover[:, cols]
        keep = sub.any(axis=1)
        dropped = tuple(lab for lab, k in zip(self.labels, keep) if not k)
        return IncidenceMatrix(
            labels=tuple(lab for lab, k in zip(self.labels, keep) if k),
            item_ids=tuple(self.item_ids[c] for c in cols),
            cover=sub[keep],
            uncoverable=tuple(sorted(self.uncoverable + dropped)),
        )

    def to_report(self) -> dict:
        counts = self.cover.sum(axis=1)
        return {
            "rows": [str(lab) for lab in self.labels],
            "item_ids": list(self.item_ids),
            "row_coverage_counts": [int(c) for c in counts],
            "uncoverable": [str(lab) for lab in self.uncoverable],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_report(), sort_keys=True, ensure_ascii=False)


def build_incidence(
    catalog: Catalog,
    categories: Sequence[str] | None = None,
    pair_categories: Sequence[tuple] = (),
    universe: Iterable[Label] = (),
) -> IncidenceMatrix:
    """Build the label x item incidence matrix for ``catalog``.

    ``categories`` defaults to every catalog category. For each pair
    ``(a, b)`` in ``pair_categories`` a composite label ``a.v1 x b.v2`` is
    added for every combination carried jointly by at least one item.
    Labels listed in ``universe`` but carried by no item end up in
    ``uncoverable``.

    >>> cat = Catalog((Item("m1", frozenset({Label("genre", "action")})),
    ...                Item("m2", frozenset({Label("genre", "comedy"), Label("language", "en")}))),
    ...               ("genre", "language"))
    >>> m = build_incidence(cat, pair_categories=[("genre", "language")])
    >>> [str(l) for l in m.labels]
    ['genre:action', 'genre:comedy', 'genre×language:comedy×en', 'language:en']
    """
    if categories is None:
        categories = list(catalog.categories)
    known = set(catalog.categories)
    for c in list(categories) + [c for pair in pair_categories for c in pair]:
        if c not in known:
            raise UnknownCategory(c)
    wanted = set(categories)

    item_rows: list[set] = []
    for item in catalog.items:
        labs = {lab for lab in item.labels if lab.category in wanted}
        for a, b in pair_categories:
            left = sorted(lab for lab in item.labels if lab.category == a)
            right = sorted(lab for lab in item.labels if lab.category == b)
            labs.update(pair_label(x, y) for x in left for y in right)
        item_rows.append(labs)

    labels = tuple(sorted(set().union(*item_rows))) if item_rows else ()
    row_of = {lab: r for r, lab in enumerate(labels)}
    cover = np.zeros((len(labels), len(catalog.items)), dtype=bool)
    for c, labs in enumerate(item_rows):
        for lab in labs:
            cover[row_of[lab], c] = True
    uncoverable = tuple(sorted(set(universe) - set(labels)))
    return IncidenceMatrix(labels, tuple(catalog.ids), cover, uncoverable)
