"""Compile the Benders master problem into a QUBO.

Variables, in index order: the n bits of x, the bits of the binary expansion
of t, then one slack block per optimality cut and one per feasibility cut.

t is encoded as

    t(w) = sum_{e=-m_frac}^{m_pos} 2^e w_e  -  sum_{j=0}^{m_neg} 2^j v_j

plus the layout's constant offset t_lower. The master always keeps
t >= t_lower, so size_layout only allocates positive bits; negative bits are
there for hand-built layouts.

Every cut g(x) <= t (resp. g(x) <= 0) becomes the squared penalty
P * (g(x) - t + S)^2 (resp. P * (g(x) + S)^2), where S >= 0 is a binary
expansion with exponents slack_lo..slack_hi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .instance import MiqpInstance
from .master import CUT_TOL, CutPool, CutViolation

DEFAULT_PENALTY = 0.55
DEFAULT_M_FRAC = 1
DEFAULT_SLACK_FRAC = 4


class DegenerateCut(ValueError):
    """A cut whose slack range is empty; its slack block is omitted."""


class LayoutMismatch(ValueError):
    pass


def _t_exponents(m_frac: int, m_pos: int, m_neg: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.arange(-m_frac, m_pos + 1), np.arange(0, m_neg + 1)


@dataclass(frozen=True)
class BitLayout:
    n: int
    m_frac: int = DEFAULT_M_FRAC
    m_pos: int = 0
    m_neg: int = 0
    # (lo, hi) exponent range per cut, or None when the slack block is omitted
    opt_slack: Tuple[Optional[Tuple[int, int]], ...] = ()
    feas_slack: Tuple[Optional[Tuple[int, int]], ...] = ()
    t_lower: float = 0.0  # t = t_lower + t(w)

    @property
    def grid_step(self) -> float:
        return 2.0 ** -self.m_frac

    @property
    def t_weights(self) -> np.ndarray:
        pos, neg = _t_exponents(self.m_frac, self.m_pos, self.m_neg)
        return np.concatenate([2.0 ** pos, -(2.0 ** neg)])

    @property
    def t_range(self) -> Tuple[float, float]:
        w = self.t_weights
        return float(w[w < 0].sum()), float(w[w > 0].sum())

    @property
    def t_bounds(self) -> Tuple[float, float]:
        """Smallest and largest decoded t, offset included."""
        lo, hi = self.t_range
        return self.t_lower + lo, self.t_lower + hi

    @property
    def has_t(self) -> bool:
        return self.t_weights.size > 0

    def _blocks(self):
        sizes = [("x", None, self.n), ("t", None, self.t_weights.size)]
        for k, rng in enumerate(self.opt_slack):
            sizes.append(("opt", k, 0 if rng is None else rng[1] - rng[0] + 1))
        for j, rng in enumerate(self.feas_slack):
            sizes.append(("feas", j, 0 if rng is None else rng[1] - rng[0] + 1))
        start = 0
        for kind, idx, size in sizes:
            yield kind, idx, start, size
            start += size

    @property
    def num_bits(self) -> int:
        return sum(size for *_, size in self._blocks())

    def index_map(self) -> List[Tuple[str, Optional[int], int]]:
        """(block, cut index, position in block) for every QUBO index."""
        out = []
        for kind, idx, _, size in self._blocks():
            out.extend((kind, idx, pos) for pos in range(size))
        return out

    def block(self, kind: str, idx: Optional[int] = None) -> slice:
        for k, i, start, size in self._blocks():
            if k == kind and i == idx:
                return slice(start, start + size)
        raise KeyError((kind, idx))

    def slack_weights(self, kind: str, idx: int) -> np.ndarray:
        rng = (self.opt_slack if kind == "opt" else self.feas_slack)[idx]
        if rng is None:
            return np.zeros(0)
        return 2.0 ** np.arange(rng[0], rng[1] + 1)


def encode_t(layout: BitLayout, w) -> float:
    """Value of t for the t-block bits w."""
    w = np.asarray(w, dtype=float)
    if w.size != layout.t_weights.size:
        raise LayoutMismatch(f"expected {layout.t_weights.size} t bits, got {w.size}")
    return float(w @ layout.t_weights)


def decode_t(layout: BitLayout, value: float) -> np.ndarray:
    """A bit vector w with encode_t(layout, w) == value, for value on the representable grid."""
    step = layout.grid_step
    lo, hi = layout.t_range
    if not (lo <= value <= hi) or value / step != math.floor(value / step):
        raise ValueError(f"{value} is not on the representable t grid")
    pos, neg = _t_exponents(layout.m_frac, layout.m_pos, layout.m_neg)
    neg_amount = max(0, math.ceil(-value))
    pos_amount = int(round((value + neg_amount) / step))
    w_pos = [(pos_amount >> i) & 1 for i in range(pos.size)]
    w_neg = [(neg_amount >> j) & 1 for j in range(neg.size)]
    return np.array(w_pos + w_neg, dtype=np.int8)


def slack_exponent(span: float) -> int:
    """Top exponent of a slack expansion able to cover [0, span]: ceil(log2(span)), 0 if span <= 1."""
    if not span > 0:
        raise DegenerateCut(f"slack span {span} is not positive")
    if span <= 1.0:
        return 0
    return int(math.ceil(math.log2(span)))


def _extremes(const: np.ndarray, coef: np.ndarray):
    """min_x and max_x of const - coef @ x over binary x, per row."""
    lo = const - np.maximum(coef, 0.0).sum(axis=1)
    hi = const - np.minimum(coef, 0.0).sum(axis=1)
    return lo, hi


def cut_span(kind: str, idx: int, inst: MiqpInstance, cuts: CutPool, layout: BitLayout) -> float:
    """Largest slack the cut can ever need, over all x and all representable t."""
    oc, oa, fc, fa = cuts.affine(inst)
    if kind == "opt":
        lo, _ = _extremes(oc[idx:idx + 1], oa[idx:idx + 1])
        return layout.t_bounds[1] - float(lo[0])
    lo, _ = _extremes(fc[idx:idx + 1], fa[idx:idx + 1])
    return -float(lo[0])


def slack_width(kind: str, idx: int, inst: MiqpInstance, cuts: CutPool, layout: BitLayout) -> int:
    return slack_exponent(cut_span(kind, idx, inst, cuts, layout))


def size_layout(inst: MiqpInstance, cuts: CutPool, m_frac: int = DEFAULT_M_FRAC,
                slack_frac: int = DEFAULT_SLACK_FRAC, t_lower: float = 0.0) -> BitLayout:
    """Choose t and slack widths so every value the master can need is representable."""
    oc, oa, fc, fa = cuts.affine(inst)
    if oc.size == 0:
        # no optimality cuts: t is pinned to t_lower and carries no bits
        layout = BitLayout(inst.n, m_frac=0, m_pos=-1, m_neg=-1, t_lower=t_lower)
    else:
        # t never needs to go below t_lower, so only positive bits are used
        step = 2.0 ** -m_frac
        _, hi = _extremes(oc, oa)
        need_hi = math.ceil((float(hi.max()) - t_lower) / step) * step
        m_pos = -m_frac
        while 2.0 ** (m_pos + 1) - step < need_hi:
            m_pos += 1
        layout = BitLayout(inst.n, m_frac=m_frac, m_pos=m_pos, m_neg=-1, t_lower=t_lower)

    def block(kind, idx):
        try:
            top = slack_width(kind, idx, inst, cuts, layout)
        except DegenerateCut:
            return None
        return (-slack_frac, top)

    return BitLayout(
        layout.n, layout.m_frac, layout.m_pos, layout.m_neg,
        tuple(block("opt", k) for k in range(oc.size)),
        tuple(block("feas", j) for j in range(fc.size)),
        t_lower,
    )


@dataclass(frozen=True)
class QuboProgram:
    """Energy(z) = sum_{i<=j} Q[i, j] z_i z_j + offset over binary z."""

    Q: np.ndarray
    offset: float
    layout: BitLayout
    opt_penalties: np.ndarray = field(default_factory=lambda: np.zeros(0))
    feas_penalties: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def N(self) -> int:
        return self.Q.shape[0]

    def energy(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(z @ self.Q @ z) + self.offset

    def energies(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.einsum("ij,jk,ik->i", Z, self.Q, Z) + self.offset

    def terms(self) -> dict:
        ii, jj = np.nonzero(self.Q)
        return {(int(i), int(j)): float(self.Q[i, j]) for i, j in zip(ii, jj)}

    def dump(self) -> str:
        """Plain-text form: one "i j coeff" line per nonzero term, then the offset."""
        lines = [f"{i} {j} {v!r}" for (i, j), v in sorted(self.terms().items())]
        lines.append(f"# offset {self.offset!r}")
        return "\n".join(lines) + "\n"


def _add_square(Q: np.ndarray, const: float, a: np.ndarray, weight: float) -> float:
    """Add weight * (const + a.z)^2 to Q (upper triangle); returns the constant part."""
    outer = np.outer(a, a)
    Q += weight * (2.0 * np.triu(outer, 1))
    Q[np.diag_indices_from(Q)] += weight * (a * a + 2.0 * const * a)
    return weight * const * const


def _penalty_array(value, count) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (count,)).copy()
    if np.any(arr <= 0):
        raise ValueError("penalties must be positive")
    return arr


def compile_master(inst: MiqpInstance, cuts: CutPool, layout: BitLayout,
                   opt_penalty=DEFAULT_PENALTY, feas_penalty=DEFAULT_PENALTY) -> QuboProgram:
    oc, oa, fc, fa = cuts.affine(inst)
    if len(layout.opt_slack) != oc.size or len(layout.feas_slack) != fc.size:
        raise LayoutMismatch("layout slack blocks do not match the cut pool")
    if layout.n != inst.n:
        raise LayoutMismatch("layout x block does not match the instance")
    if oc.size and not layout.has_t:
        raise LayoutMismatch("optimality cuts need t bits")
    P_opt = _penalty_array(opt_penalty, oc.size)
    P_feas = _penalty_array(feas_penalty, fc.size)

    N = layout.num_bits
    Q = np.zeros((N, N))
    xs, ts = layout.block("x"), layout.block("t")
    C = inst.C
    Q[xs, xs] += 2.0 * np.triu(C, 1)
    Q[np.arange(inst.n), np.arange(inst.n)] += np.diag(C)
    tw = layout.t_weights
    Q[np.arange(ts.start, ts.stop), np.arange(ts.start, ts.stop)] += tw
    offset = float(layout.t_lower)

    for k in range(oc.size):
        a = np.zeros(N)
        a[xs] = -oa[k]
        a[ts] = -tw
        a[layout.block("opt", k)] = layout.slack_weights("opt", k)
        offset += _add_square(Q, float(oc[k]) - layout.t_lower, a, P_opt[k])
    for j in range(fc.size):
        a = np.zeros(N)
        a[xs] = -fa[j]
        a[layout.block("feas", j)] = layout.slack_weights("feas", j)
        offset += _add_square(Q, float(fc[j]), a, P_feas[j])
    return QuboProgram(Q, offset, layout, P_opt, P_feas)


@dataclass(frozen=True)
class Decoded:
    x: np.ndarray
    t: float
    opt_slacks: np.ndarray
    feas_slacks: np.ndarray


def decode(layout: BitLayout, z) -> Decoded:
    z = np.asarray(z)
    if z.size != layout.num_bits:
        raise LayoutMismatch(f"expected {layout.num_bits} bits, got {z.size}")
    t = layout.t_lower + (encode_t(layout, z[layout.block("t")]) if layout.has_t else 0.0)
    opt = [float(z[layout.block("opt", k)] @ layout.slack_weights("opt", k))
           for k in range(len(layout.opt_slack))]
    feas = [float(z[layout.block("feas", j)] @ layout.slack_weights("feas", j))
            for j in range(len(layout.feas_slack))]
    return Decoded(z[layout.block("x")].astype(np.int8), t, np.array(opt), np.array(feas))


def encode_slack(layout: BitLayout, kind: str, idx: int, value: float) -> np.ndarray:
    """Bits of the slack block nearest to value (clipped to the block's range)."""
    rng = (layout.opt_slack if kind == "opt" else layout.feas_slack)[idx]
    if rng is None:
        return np.zeros(0, dtype=np.int8)
    lo, hi = rng
    units = int(round(max(0.0, value) / 2.0 ** lo))
    units = min(units, (1 << (hi - lo + 1)) - 1)
    return np.array([(units >> i) & 1 for i in range(hi - lo + 1)], dtype=np.int8)


def encode_point(inst: MiqpInstance, cuts: CutPool, layout: BitLayout, x, t: float) -> np.ndarray:
    """Bit vector for (x, t) with every slack set to its best grid value.

    t - layout.t_lower must lie on the t grid.
    """
    x = np.asarray(x, dtype=float)
    oc, oa, fc, fa = cuts.affine(inst)
    parts = [x.astype(np.int8)]
    if layout.has_t:
        parts.append(decode_t(layout, t - layout.t_lower))
    t_val = t if layout.has_t else layout.t_lower
    for k in range(oc.size):
        parts.append(encode_slack(layout, "opt", k, t_val - (oc[k] - oa[k] @ x)))
    for j in range(fc.size):
        parts.append(encode_slack(layout, "feas", j, -(fc[j] - fa[j] @ x)))
    return np.concatenate(parts).astype(np.int8)


def round_t(layout: BitLayout, t: float) -> float:
    """Smallest representable grid value >= t (clipped to the representable range)."""
    lo, hi = layout.t_range
    step = layout.grid_step
    rel = math.ceil((t - layout.t_lower) / step - 1e-12) * step
    return layout.t_lower + float(min(hi, max(lo, rel)))


@dataclass(frozen=True)
class AuditReport:
    x: np.ndarray
    t: float
    violations: List[CutViolation]
    opt_residuals: np.ndarray
    feas_residuals: np.ndarray
    penalty_energy: float


def audit(z, inst: MiqpInstance, cuts: CutPool, program: QuboProgram) -> AuditReport:
    """Decode z and check it against the cuts.

    An optimality cut counts as violated only when t sits more than one grid
    step below it, since the t grid cannot resolve anything finer.
    Feasibility cuts do not involve t and are checked at CUT_TOL.
    """
    layout = program.layout
    d = decode(layout, z)
    x = d.x.astype(float)
    oc, oa, fc, fa = cuts.affine(inst)
    g_opt = oc - oa @ x
    g_feas = fc - fa @ x
    violations = []
    for k, g in enumerate(g_opt):
        if g - d.t > layout.grid_step + CUT_TOL:
            violations.append(CutViolation("optimality", k, float(g - d.t)))
    for j, g in enumerate(g_feas):
        if g > CUT_TOL:
            violations.append(CutViolation("feasibility", j, float(g)))
    res_opt = g_opt - d.t + d.opt_slacks
    res_feas = g_feas + d.feas_slacks
    pen = float(program.opt_penalties @ res_opt ** 2 + program.feas_penalties @ res_feas ** 2)
    return AuditReport(d.x, d.t, violations, res_opt, res_feas, pen)


def exhaustive_minimum(program: QuboProgram, max_bits: int = 24) -> Tuple[np.ndarray, float]:
    """Ground state by full enumeration; ties go to the lexicographically smallest z."""
    N = program.N
    if N > max_bits:
        raise ValueError(f"{N} bits is too many to enumerate")
    best_z, best_e = None, np.inf
    shifts = np.arange(N - 1, -1, -1, dtype=np.int64)
    chunk = 1 << min(N, 16)
    for start in range(0, 1 << N, chunk):
        codes = np.arange(start, min(start + chunk, 1 << N), dtype=np.int64)
        Z = ((codes[:, None] >> shifts) & 1).astype(float)
        E = program.energies(Z)
        i = int(np.argmin(E))
        if E[i] < best_e:
            best_e, best_z = float(E[i]), Z[i].astype(np.int8)
    return best_z, best_e
