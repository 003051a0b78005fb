"""Tabular scan output shared by the analysis and Moser modules.

A ScanTable is a named list of rows plus self-describing comment lines.  CSV
emission uses RFC-4180 quoting with the comments prefixed by '#', so the files
carry their own definitions; JSON emission mirrors the same content.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field


@dataclass
class ScanTable:
    columns: tuple
    rows: list = field(default_factory=list)
    comments: list = field(default_factory=list)

    def append(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} entries, got {len(row)}")
        self.rows.append(tuple(row))

    def column(self, name):
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.comments:
            buf.write(f"# {line}\r\n")
        writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"comments": list(self.comments), "columns": list(self.columns),
             "rows": [list(r) for r in self.rows]},
            sort_keys=True, indent=2) + "\n"
