"""
models.report module.

This module contains the result container every command returns and the
emitter writes: structured records, named tables and run metadata.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple


@dataclass
class Table:
    """Tabular series with a fixed column order."""

    columns: Tuple[str, ...]
    rows: List[Tuple[Any, ...]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(tuple(values))

    def column(self, name: str) -> List[Any]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


@dataclass
class ReportBundle:
    command: str
    records: Dict[str, Any] = field(default_factory=dict)
    tables: Dict[str, Table] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)
    failure: Optional[str] = None

    def table(self, name: str, columns: Sequence[str]) -> Table:
        t = Table(tuple(columns))
        self.tables[name] = t
        return t

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "failed": self.failure is not None,
            "failure": self.failure,
            "metadata": self.metadata,
            "records": self.records,
            "tables": {name: {"columns": list(t.columns), "rows": [list(r) for r in t.rows]}
                       for name, t in self.tables.items()},
        }
