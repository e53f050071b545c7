"""Monospace table formatting shared by the result and density reports."""

from __future__ import annotations


def format_grid(headers: list[str], rows: list[list[str]]) -> str:
    """Render rows under headers with two-space gutters.

    The first two columns are left-aligned labels, the rest right-aligned
    values; a dashed rule separates headers from data.
    """
    table = [headers] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]

    def fmt(row: list[str]) -> str:
        cells = []
        for i, cell in enumerate(row):
            if i < 2:
                cells.append(cell.ljust(widths[i]))
            else:
                cells.append(cell.rjust(widths[i]))
        return "  ".join(cells).rstrip()

    rule = "  ".join("-" * w for w in widths)
    lines = [fmt(headers), rule] + [fmt(row) for row in rows]
    return "\n".join(lines) + "\n"
