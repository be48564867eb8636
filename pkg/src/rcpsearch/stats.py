"""Per-query instrumentation counters.

A caller that wants instrumentation passes its own ``QueryStats`` object into
a query; the indexes never keep mutable state, so concurrent querying stays
safe as long as each caller uses its own stats object.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class QueryStats:
    canonical_nodes: int = 0
    heavy_nodes: int = 0
    light_points: int = 0
    crossing_classes: int = 0
    inside_classes: int = 0
    pa_sizes: list = field(default_factory=list)
    sum_m_a: int = 0
    touched: int = 0
    nodes_visited: int = 0
    conflict_len: int = 0
    cell_id: int = -1

    @property
    def pa_max(self) -> int:
        return max(self.pa_sizes) if self.pa_sizes else 0

    @property
    def pa_total(self) -> int:
        return sum(self.pa_sizes)
