"""Per-pipe staggered grids and the flattened array layout used by the kernels.

Densities live at cell centers and mass fluxes at cell edges; a pipe with
``n`` cells owns ``n + 1`` edges, the first and last sitting on its end nodes.
All pipes are concatenated into single arrays: pipe ``k`` owns cells
``cell_start[k]:cell_start[k+1]`` and edges ``cell_start[k]+k : cell_start[k+1]+k+1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Network, ValidationError


@dataclass(frozen=True)
class PipeGrid:
    pipe_id: int
    n_cells: int
    dx: float

    @property
    def length(self) -> float:
        return self.n_cells * self.dx

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx


def discretize(network: Network, target_dx: float) -> list[PipeGrid]:
    """``n_cells = max(2, round(L / target_dx))`` cells of equal width per pipe."""
    if not target_dx > 0:
        raise ValidationError("target_dx must be positive")
    grids = []
    for p in network.pipes:
        n = max(2, int(round(p.length / target_dx)))
        grids.append(PipeGrid(p.id, n, p.length / n))
    return grids


class Layout:
    """Flattened topology arrays shared by both kernel backends."""

    def __init__(self, network: Network, grids: list[PipeGrid]):
        if [g.pipe_id for g in grids] != [p.id for p in network.pipes]:
            raise ValidationError("grids do not match the network's pipe order")
        self.network = network
        self.grids = list(grids)
        nidx = network.node_index()
        n_pipes = len(grids)
        self.n_pipes = n_pipes
        self.n_nodes = len(network.nodes)

        counts = np.array([g.n_cells for g in grids], dtype=np.int64)
        self.cell_start = np.zeros(n_pipes + 1, dtype=np.int64)
        self.cell_start[1:] = np.cumsum(counts)
        self.n_cells = int(self.cell_start[-1])
        self.n_edges = self.n_cells + n_pipes

        self.dx = np.array([g.dx for g in grids])
        self.diameter = np.array([p.diameter for p in network.pipes])
        self.friction = np.array([p.friction for p in network.pipes])
        self.area = np.array([p.area for p in network.pipes])
        self.from_idx = np.array([nidx[p.from_node] for p in network.pipes], dtype=np.int64)
        self.to_idx = np.array([nidx[p.to_node] for p in network.pipes], dtype=np.int64)

        # node -> incident pipe ends (CSR); side 0 = pipe start, 1 = pipe end
        inc = [[] for _ in range(self.n_nodes)]
        for k in range(n_pipes):
            inc[self.from_idx[k]].append((k, 0))
            inc[self.to_idx[k]].append((k, 1))
        self.inc_ptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        self.inc_ptr[1:] = np.cumsum([len(v) for v in inc])
        flat = [e for v in inc for e in v]
        self.inc_pipe = np.array([e[0] for e in flat], dtype=np.int64)
        self.inc_side = np.array([e[1] for e in flat], dtype=np.int64)

        # per-cell / per-edge helpers for the vectorized backend
        self.cell_pipe = np.repeat(np.arange(n_pipes), counts)
        self.cell_left_edge = np.arange(self.n_cells) + self.cell_pipe
        interior, interior_pipe = [], []
        for k in range(n_pipes):
            e0 = self.cell_start[k] + k
            interior.extend(range(e0 + 1, e0 + counts[k]))
            interior_pipe.extend([k] * (counts[k] - 1))
        self.interior_edges = np.array(interior, dtype=np.int64)
        self.interior_pipe = np.array(interior_pipe, dtype=np.int64)
        # for edge e inside pipe k, its left cell is e - k - 1
        self.interior_left_cell = self.interior_edges - self.interior_pipe - 1

        self.inc_node = np.repeat(np.arange(self.n_nodes), np.diff(self.inc_ptr))
        start = self.inc_side == 0
        ip = self.inc_pipe
        self.inc_cell = np.where(start, self.cell_start[ip], self.cell_start[ip + 1] - 1)
        self.inc_edge = np.where(start, self.cell_start[ip] + ip, self.cell_start[ip + 1] + ip)
        self.inc_sign = np.where(start, 1.0, -1.0)

    def cell_slice(self, k: int) -> slice:
        return slice(int(self.cell_start[k]), int(self.cell_start[k + 1]))

    def edge_slice(self, k: int) -> slice:
        return slice(int(self.cell_start[k] + k), int(self.cell_start[k + 1] + k + 1))

    def cell_volume(self) -> np.ndarray:
        return (self.area * self.dx)[self.cell_pipe]
