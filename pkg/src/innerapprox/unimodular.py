"""Step functions on the unit circle and the two range reductions.

Measurable sets are modelled as finite unions of arcs.  ``quantize_range``
replaces a sampled unitary-valued function by one with finitely many values
(the greedy ball cover), ``binary_factorize`` writes a finitely-valued
function as a pointwise product of functions taking at most two values.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import TWO_PI, as_matrix, canonical_angle, op_norm, unitary_defect
from .errors import DimensionMismatch, DomainError, NotFoundError

UNITARY_TOL = 1e-10
VALUE_MATCH_TOL = 1e-10
_SEAM_TOL = 1e-12


class ArcSet:
    """Finite union of disjoint arcs ``[start, end)`` in canonical form.

    Canonical form: arcs lie inside ``[0, 2*pi]``, are sorted, pairwise
    disjoint and not touching.  An arc crossing angle 0 is stored as two
    pieces ``[0, a)`` and ``[b, 2*pi)``.
    """

    __slots__ = ("_arcs",)

    def __init__(self, arcs=()):
        pieces = []
        for start, end in arcs:
            start, end = float(start), float(end)
            length = end - start
            if length < 0:
                raise DomainError(f"arc ({start}, {end}) has negative length")
            if length >= TWO_PI - _SEAM_TOL:
                pieces = [(0.0, TWO_PI)]
                break
            if length <= _SEAM_TOL:
                continue
            s = float(canonical_angle(start))
            if s < _SEAM_TOL or s > TWO_PI - _SEAM_TOL:
                s = 0.0
            e = s + length
            if abs(e - TWO_PI) < _SEAM_TOL:
                e = TWO_PI
            if e > TWO_PI:
                pieces.append((s, TWO_PI))
                pieces.append((0.0, e - TWO_PI))
            else:
                pieces.append((s, e))
        pieces.sort()
        merged = []
        for s, e in pieces:
            if merged and s <= merged[-1][1] + _SEAM_TOL:
                merged[-1] = (merged[-1][0], max(merged[-1][1], e))
            else:
                merged.append((s, e))
        self._arcs = tuple((s, e) for s, e in merged if e - s > _SEAM_TOL)

    @classmethod
    def full(cls):
        return cls([(0.0, TWO_PI)])

    @classmethod
    def around(cls, points, half_width):
        return cls([(p - half_width, p + half_width) for p in points])

    @property
    def arcs(self):
        return self._arcs

    def __iter__(self):
        return iter(self._arcs)

    def __len__(self):
        return len(self._arcs)

    def __eq__(self, other):
        if not isinstance(other, ArcSet) or len(self) != len(other):
            return False
        return all(
            abs(a[0] - b[0]) <= 1e-12 and abs(a[1] - b[1]) <= 1e-12
            for a, b in zip(self._arcs, other._arcs)
        )

    def __repr__(self):
        inner = ", ".join(f"[{s:.6g}, {e:.6g})" for s, e in self._arcs)
        return f"ArcSet({inner})"

    @property
    def is_empty(self):
        return not self._arcs

    @property
    def is_full(self):
        return len(self._arcs) == 1 and self._arcs[0][0] <= _SEAM_TOL and (
            self._arcs[0][1] >= TWO_PI - _SEAM_TOL
        )

    def measure(self):
        return float(sum(e - s for s, e in self._arcs))

    def contains(self, theta):
        t = canonical_angle(theta)
        out = np.zeros(np.shape(t), dtype=bool)
        for s, e in self._arcs:
            out |= (t >= s) & (t < e)
        return out

    def complement(self):
        if self.is_empty:
            return ArcSet.full()
        gaps = []
        cursor = 0.0
        for s, e in self._arcs:
            if s > cursor + _SEAM_TOL:
                gaps.append((cursor, s))
            cursor = e
        if cursor < TWO_PI - _SEAM_TOL:
            gaps.append((cursor, TWO_PI))
        return ArcSet(gaps)

    def union(self, other):
        return ArcSet(self._arcs + tuple(other))

    def boundary_points(self):
        """Angles in [0, 2*pi) where membership changes."""
        if not self._arcs:
            return np.zeros(0)
        # the seam at 0 is not a boundary when pieces touch it from both sides
        wrap = self._arcs[0][0] <= _SEAM_TOL and self._arcs[-1][1] >= TWO_PI - _SEAM_TOL
        pts = []
        for s, e in self._arcs:
            if not (wrap and s <= _SEAM_TOL):
                pts.append(s)
            if not (wrap and e >= TWO_PI - _SEAM_TOL):
                pts.append(e if e < TWO_PI else 0.0)
        return np.array(sorted(pts), dtype=float)

    def to_json(self):
        return [{"start": s, "end": e} for s, e in self._arcs]


def arc_measure(S):
    return S.measure()


@dataclass(frozen=True, eq=False)
class ArcPartition:
    """Breakpoints ``0 <= t_0 < ... < t_{m-1} < 2*pi``; arc j is
    ``[t_j, t_{j+1})`` and the last arc wraps around to ``t_0 + 2*pi``."""

    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.atleast_1d(np.asarray(self.breakpoints, dtype=float)).copy()
        if bp.size == 0:
            raise DomainError("a partition needs at least one breakpoint")
        if bp[0] < 0 or bp[-1] >= TWO_PI or np.any(np.diff(bp) <= 0):
            raise DomainError("breakpoints must be strictly increasing in [0, 2*pi)")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @property
    def size(self):
        return int(self.breakpoints.size)

    def arc_bounds(self, j):
        bp = self.breakpoints
        start = bp[j]
        end = bp[j + 1] if j + 1 < bp.size else bp[0] + TWO_PI
        return float(start), float(end)

    def arc_lengths(self):
        bp = self.breakpoints
        return np.diff(np.append(bp, bp[0] + TWO_PI))

    def arc_index(self, theta):
        t = canonical_angle(theta)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.where(idx < 0, self.size - 1, idx)


class StepFunction:
    """Matrix-valued step function: one N x N value per arc of a partition."""

    def __init__(self, partition, values):
        if not isinstance(partition, ArcPartition):
            partition = ArcPartition(partition)
        vals = np.asarray(values, dtype=complex)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1, 1)
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2]:
            raise DomainError(f"values must have shape (m, N, N), got {vals.shape}")
        if vals.shape[0] != partition.size:
            raise DomainError(
                f"{vals.shape[0]} values for a partition with {partition.size} arcs"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        self.partition = partition
        self.values = vals

    @property
    def dimension(self):
        return int(self.values.shape[1])

    @property
    def breakpoints(self):
        return self.partition.breakpoints

    def __call__(self, theta):
        return eval_step(self, theta)

    def distinct_values(self):
        """Distinct values in order of first appearance, and each arc's label."""
        reps = []
        labels = np.empty(self.partition.size, dtype=int)
        for j, v in enumerate(self.values):
            for k, u in enumerate(reps):
                if op_norm(v - u) < VALUE_MATCH_TOL:
                    labels[j] = k
                    break
            else:
                reps.append(v)
                labels[j] = len(reps) - 1
        return reps, labels

    def jump_points(self):
        """Breakpoints at which the value actually changes."""
        _, labels = self.distinct_values()
        m = labels.size
        keep = [j for j in range(m) if labels[j] != labels[j - 1]] if m > 1 else []
        return self.breakpoints[keep]

    def simplified(self):
        """Same function with adjacent equal arcs merged."""
        cls = type(self)
        reps, labels = self.distinct_values()
        m = labels.size
        keep = [j for j in range(m) if labels[j] != labels[j - 1]] if m > 1 else []
        if not keep:
            return cls(ArcPartition([0.0]), self.values[:1])
        return cls(ArcPartition(self.breakpoints[keep]), self.values[keep])

    def sup_norm(self):
        return float(np.max(op_norm(self.values)))

    def __repr__(self):
        return (
            f"{type(self).__name__}(arcs={self.partition.size}, "
            f"dimension={self.dimension})"
        )


class StepUnimodular(StepFunction):
    """Step function whose values are all unitary."""

    def __init__(self, partition, values):
        super().__init__(partition, values)
        defect = unitary_defect(self.values)
        if np.any(defect > UNITARY_TOL):
            raise DomainError(
                f"value {int(np.argmax(defect))} is not unitary "
                f"(defect {float(np.max(defect)):.3g})"
            )

    @classmethod
    def constant(cls, U):
        return cls(ArcPartition([0.0]), as_matrix(U)[None])

    @classmethod
    def two_valued(cls, E, T):
        """I on the arc set E, T on its complement."""
        T = as_matrix(T)
        eye = np.eye(T.shape[0], dtype=complex)
        if E.is_full:
            return cls.constant(eye)
        if E.is_empty:
            return cls.constant(T)
        bps = E.boundary_points()
        mids = bps + 0.5 * np.diff(np.append(bps, bps[0] + TWO_PI))
        inside = E.contains(mids)
        vals = np.array([eye if flag else T for flag in inside])
        return cls(ArcPartition(bps), vals)


def eval_step(f, theta):
    idx = f.partition.arc_index(theta)
    return f.values[idx]


def _check_samples(samples):
    thetas = np.array([float(t) for t, _ in samples])
    if thetas.size == 0:
        raise DomainError("samples must be non-empty")
    values = np.array([as_matrix(u) for _, u in samples])
    order = np.argsort(canonical_angle(thetas), kind="stable")
    thetas = canonical_angle(thetas)[order]
    values = values[order]
    if np.any(np.diff(thetas) <= 0):
        raise DomainError("sample angles must be distinct")
    return thetas, values


def greedy_cover(values, eps):
    """Greedy epsilon-ball cover in operator norm.

    Centers are chosen as the first sample not yet within ``eps`` of an
    existing center; each sample is assigned to the first center whose open
    ball contains it.  Returns (center indices, assignment).
    """
    centers = []
    assign = np.empty(len(values), dtype=int)
    for k, v in enumerate(values):
        for c_idx, c in enumerate(centers):
            if op_norm(v - values[c]) < eps:
                assign[k] = c_idx
                break
        else:
            centers.append(k)
            assign[k] = len(centers) - 1
    return centers, assign


def quantize_range(samples, eps):
    """Finitely-valued replacement of a sampled unitary-valued function.

    ``samples`` is a list of ``(theta, U)``; they are processed in increasing
    angle.  The output takes only sampled values, agrees with a center within
    ``eps`` at every sample, and has one arc per run of equal assignment
    starting at the run's first sample angle.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    thetas, values = _check_samples(samples)
    centers, assign = greedy_cover(values, eps)
    n = assign.size
    starts = [k for k in range(n) if k == 0 or assign[k] != assign[k - 1]]
    if len(starts) > 1 and assign[0] == assign[-1]:
        starts = starts[1:]
    if len(starts) == 1 and len(centers) == 1:
        return StepUnimodular(ArcPartition([0.0]), values[centers[0]][None])
    # first arc may begin after angle 0 when the last run wraps around
    starts.sort(key=lambda k: thetas[k])
    bps = thetas[starts]
    vals = np.array([values[centers[assign[k]]] for k in starts])
    return StepUnimodular(ArcPartition(bps), vals)


def binary_factorize(g):
    """Factors ``U_i`` on ``g^{-1}(U_i)`` and identity elsewhere.

    Identity-valued factors are dropped; a constant ``g`` returns ``[g]``.
    The factors have disjoint non-identity supports, so their pointwise
    product in any order equals ``g``.
    """
    reps, labels = g.distinct_values()
    eye = np.eye(g.dimension, dtype=complex)
    cls = type(g)
    if len(reps) == 1:
        return [] if op_norm(reps[0] - eye) < VALUE_MATCH_TOL else [g.simplified()]
    factors = []
    for k, u in enumerate(reps):
        if op_norm(u - eye) < VALUE_MATCH_TOL:
            continue
        vals = np.array([u if labels[j] == k else eye for j in range(labels.size)])
        factors.append(cls(g.partition, vals).simplified())
    return factors


def support_of_value(g, U):
    U = as_matrix(U)
    if U.shape[0] != g.dimension:
        raise DimensionMismatch(f"value of size {U.shape[0]} for dimension {g.dimension}")
    hits = [j for j, v in enumerate(g.values) if op_norm(v - U) < VALUE_MATCH_TOL]
    if not hits:
        raise NotFoundError("matrix is not a value of the step function")
    return ArcSet([g.partition.arc_bounds(j) for j in hits])


def pointwise_product(factors, theta, dimension):
    out = np.broadcast_to(np.eye(dimension, dtype=complex), np.shape(theta) + (dimension,) * 2).copy()
    for f in factors:
        out = out @ eval_step(f, theta)
    return out
