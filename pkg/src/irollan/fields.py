"""Phenomenal fields: rows of (embedding, spherical position), similarity
metrics, and the conceptual-blending operation that combines two fields.

A field is the unit of perception, recollection, and imagination in the
engine. Every operation here is a pure function over immutable inputs;
randomness comes in only through an explicit ``random.Random`` handle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class FieldError(ValueError):
    """Base error for field operations."""


class DimensionMismatchError(FieldError):
    """Embedding dimensions of the operands differ."""


class EmptyFieldError(FieldError):
    """An operation that requires rows received an empty field."""


@dataclass(frozen=True)
class Position:
    """Spherical coordinate of one field row.

    theta in [0, pi], phi in [0, 2*pi), gamma >= 0.
    """

    theta: float
    phi: float
    gamma: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.theta <= math.pi):
            raise FieldError(f"theta out of range [0, pi]: {self.theta}")
        if not (0.0 <= self.phi < TWO_PI):
            raise FieldError(f"phi out of range [0, 2*pi): {self.phi}")
        if self.gamma < 0.0:
            raise FieldError(f"gamma must be nonnegative: {self.gamma}")


class FieldRow:
    """One row of a phenomenal field: semantic embedding plus position."""

    __slots__ = ("embedding", "position")

    def __init__(self, embedding: Sequence[float] | np.ndarray, position: Position):
        emb = np.asarray(embedding, dtype=np.float64)
        if emb.ndim != 1 or emb.size == 0:
            raise FieldError("embedding must be a nonempty 1-D vector")
        emb.setflags(write=False)
        self.embedding = emb
        self.position = position

    @property
    def dimension(self) -> int:
        return int(self.embedding.size)

    def flat(self) -> list[float]:
        """Serialize as [N_1..N_n, theta, phi, gamma]."""
        p = self.position
        return [*map(float, self.embedding), p.theta, p.phi, p.gamma]

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        p = self.position
        return f"FieldRow(dim={self.dimension}, theta={p.theta:.3f}, phi={p.phi:.3f}, gamma={p.gamma:.3f})"


class PhenomenalField:
    """An ordered, immutable sequence of field rows sharing one dimension."""

    __slots__ = ("rows", "_embeddings", "_positions")

    def __init__(self, rows: Iterable[FieldRow] = ()):
        rows = tuple(rows)
        dims = {r.dimension for r in rows}
        if len(dims) > 1:
            raise DimensionMismatchError(f"rows have mixed dimensions: {sorted(dims)}")
        self.rows = rows
        self._embeddings: np.ndarray | None = None
        self._positions: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __bool__(self) -> bool:
        return bool(self.rows)

    @property
    def dimension(self) -> int | None:
        """Embedding dimension, or None for an empty field."""
        return self.rows[0].dimension if self.rows else None

    @property
    def embeddings(self) -> np.ndarray:
        """Row embeddings stacked as a (k, n) matrix."""
        if self._embeddings is None:
            if not self.rows:
                raise EmptyFieldError("empty field has no embedding matrix")
            self._embeddings = np.vstack([r.embedding for r in self.rows])
        return self._embeddings

    @property
    def positions(self) -> np.ndarray:
        """Row positions stacked as a (k, 3) matrix of (theta, phi, gamma)."""
        if self._positions is None:
            if not self.rows:
                raise EmptyFieldError("empty field has no position matrix")
            self._positions = np.array(
                [(r.position.theta, r.position.phi, r.position.gamma) for r in self.rows],
                dtype=np.float64,
            )
        return self._positions

    def flat_rows(self) -> list[list[float]]:
        return [r.flat() for r in self.rows]

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"PhenomenalField(rows={len(self.rows)}, dim={self.dimension})"


@dataclass(frozen=True)
class BlendConfig:
    """Parameters of the similarity metrics and the blending algorithm."""

    similarity_threshold: float = 0.85
    blend_probability: float = 0.3
    weight_embedding: float = 0.7
    weight_position: float = 0.3
    weight_gamma: float = 1.0
    weight_theta: float = 1.0
    weight_phi: float = 1.0
    epsilon: float = 1e-9

    def __post_init__(self) -> None:
        # Thresholds above 1 are legal: they make matching unreachable.
        if self.similarity_threshold < 0.0:
            raise FieldError(f"similarity_threshold must be nonnegative: {self.similarity_threshold}")
        if not (0.0 <= self.blend_probability <= 1.0):
            raise FieldError(f"blend_probability out of [0, 1]: {self.blend_probability}")
        for name in ("weight_embedding", "weight_position", "weight_gamma", "weight_theta", "weight_phi"):
            if getattr(self, name) < 0.0:
                raise FieldError(f"{name} must be nonnegative")
        if abs(self.weight_embedding + self.weight_position - 1.0) > 1e-9:
            raise FieldError("weight_embedding + weight_position must equal 1")


def spherical_similarity(a: Position, b: Position, cfg: BlendConfig) -> float:
    """Similarity of two spherical positions.

    1 - (1/3) * (w_gamma*tanh(|dgamma|) + w_theta*|dtheta|/pi + w_phi*|dphi|/(2*pi)).
    With unit weights the value lies in [0, 1] and equals 1 iff a == b.
    """
    return 1.0 - (
        cfg.weight_gamma * math.tanh(abs(a.gamma - b.gamma))
        + cfg.weight_theta * abs(a.theta - b.theta) / math.pi
        + cfg.weight_phi * abs(a.phi - b.phi) / TWO_PI
    ) / 3.0


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero-norm vectors count as unrelated (0)."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def row_similarity(x: FieldRow, y: FieldRow, cfg: BlendConfig) -> float:
    """Weighted combination of embedding cosine and position similarity."""
    if x.dimension != y.dimension:
        raise DimensionMismatchError(f"row dimensions differ: {x.dimension} != {y.dimension}")
    return cfg.weight_embedding * cosine(x.embedding, y.embedding) + cfg.weight_position * spherical_similarity(
        x.position, y.position, cfg
    )


def row_similarity_matrix(x: PhenomenalField, y: PhenomenalField, cfg: BlendConfig) -> np.ndarray:
    """All-pairs row similarity as an (a, b) matrix (vectorized)."""
    if not x.rows or not y.rows:
        return np.zeros((len(x), len(y)))
    if x.dimension != y.dimension:
        raise DimensionMismatchError(f"field dimensions differ: {x.dimension} != {y.dimension}")
    ex, ey = x.embeddings, y.embeddings
    nx = np.linalg.norm(ex, axis=1)
    ny = np.linalg.norm(ey, axis=1)
    dots = ex @ ey.T
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = dots / np.outer(nx, ny)
    cos[~np.isfinite(cos)] = 0.0  # zero-norm rows are unrelated

    px, py = x.positions, y.positions
    dtheta = np.abs(px[:, 0:1] - py[None, :, 0])
    dphi = np.abs(px[:, 1:2] - py[None, :, 1])
    dgamma = np.abs(px[:, 2:3] - py[None, :, 2])
    sph = 1.0 - (
        cfg.weight_gamma * np.tanh(dgamma) + cfg.weight_theta * dtheta / math.pi + cfg.weight_phi * dphi / TWO_PI
    ) / 3.0
    return cfg.weight_embedding * cos + cfg.weight_position * sph


def greedy_pairs(sim: np.ndarray) -> list[tuple[int, int]]:
    """Globally greedy best-match pairing without reuse.

    Pairs are chosen in descending similarity order (ties by row then
    column index) until the smaller side is exhausted.
    """
    a, b = sim.shape
    if a == 0 or b == 0:
        return []
    ii, jj = np.meshgrid(np.arange(a), np.arange(b), indexing="ij")
    order = np.lexsort((jj.ravel(), ii.ravel(), -sim.ravel()))
    used_i: set[int] = set()
    used_j: set[int] = set()
    pairs: list[tuple[int, int]] = []
    want = min(a, b)
    for k in order:
        i, j = int(k) // b, int(k) % b
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        pairs.append((i, j))
        if len(pairs) == want:
            break
    return pairs


def field_similarity(x: PhenomenalField, y: PhenomenalField, cfg: BlendConfig) -> float:
    """Aggregate similarity of two fields.

    Greedy best-match pairing without reuse; the paired row similarities
    are summed and divided by max(a, b), so unmatched rows of the larger
    field penalize the score.
    """
    if not x.rows or not y.rows:
        raise EmptyFieldError("field_similarity requires nonempty fields")
    sim = row_similarity_matrix(x, y, cfg)
    total = sum(float(sim[i, j]) for i, j in greedy_pairs(sim))
    return total / float(max(len(x), len(y)))


def _mean_phi(p1: float, p2: float) -> float:
    """Circular mean on the shorter arc, wrapped into [0, 2*pi)."""
    d = math.fmod(p2 - p1 + math.pi, TWO_PI)
    if d < 0.0:
        d += TWO_PI
    d -= math.pi
    r = math.fmod(p1 + d / 2.0, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:
        r = 0.0
    return r


def average_rows(x: FieldRow, y: FieldRow) -> FieldRow:
    """Component-wise mean of two rows; phi averaged on the circle."""
    if x.dimension != y.dimension:
        raise DimensionMismatchError(f"row dimensions differ: {x.dimension} != {y.dimension}")
    emb = (x.embedding + y.embedding) / 2.0
    px, py = x.position, y.position
    theta = min(max((px.theta + py.theta) / 2.0, 0.0), math.pi)
    gamma = max((px.gamma + py.gamma) / 2.0, 0.0)
    return FieldRow(emb, Position(theta=theta, phi=_mean_phi(px.phi, py.phi), gamma=gamma))


class _RowSet:
    """Membership testing under epsilon-equality on all components."""

    def __init__(self, epsilon: float, capacity: int, width: int):
        self._epsilon = epsilon
        self._matrix = np.empty((max(capacity, 1), max(width, 1)))
        self._count = 0

    def contains(self, row: FieldRow) -> bool:
        if self._count == 0:
            return False
        v = np.asarray(row.flat())
        if v.size != self._matrix.shape[1]:
            return False
        taken = self._matrix[: self._count]
        return bool((np.abs(taken - v).max(axis=1) <= self._epsilon).any())

    def add(self, row: FieldRow) -> None:
        self._matrix[self._count] = row.flat()
        self._count += 1


def blend(x: PhenomenalField, y: PhenomenalField, cfg: BlendConfig, rng: Random) -> PhenomenalField:
    """Conceptual blending of two phenomenal fields.

    Scans row pairs (i, j) in order; the first partner j with similarity
    at or above the threshold settles row i: an (epsilon-)exact match
    contributes the component-wise average once, a near match contributes
    both rows (deduplicated). Rows that never found a partner are each
    admitted independently with the configured blend probability.
    """
    if x.rows and y.rows and x.dimension != y.dimension:
        raise DimensionMismatchError(f"field dimensions differ: {x.dimension} != {y.dimension}")

    eps = cfg.epsilon
    threshold = cfg.similarity_threshold
    width = (x.dimension or y.dimension or 1) + 3
    out: list[FieldRow] = []
    members = _RowSet(eps, capacity=len(x) + len(y), width=width)

    def admit(row: FieldRow) -> None:
        if not members.contains(row):
            members.add(row)
            out.append(row)

    sim = row_similarity_matrix(x, y, cfg)
    placed_x: set[int] = set()
    placed_y: set[int] = set()
    for i in range(len(x)):
        for j in range(len(y)):
            s = float(sim[i, j])
            if s < threshold:
                continue
            if abs(s - 1.0) <= eps:
                admit(average_rows(x.rows[i], y.rows[j]))
            else:
                admit(x.rows[i])
                admit(y.rows[j])
            placed_x.add(i)
            placed_y.add(j)
            break

    probability = cfg.blend_probability
    for rows, placed in ((x.rows, placed_x), (y.rows, placed_y)):
        for idx, row in enumerate(rows):
            if idx in placed or members.contains(row):
                continue
            if rng.random() < probability:
                members.add(row)
                out.append(row)

    return PhenomenalField(out)
