"""Zero-dimensional parametrizations from multiplication matrices.

Two routes live here: the univariate route (minimal polynomial and
numerators of scalar sequences, used directly on power projections and as
the coordinate-change engine) and the block-Krylov route, which extracts the
same data from short matrix sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    GenericityFailure,
    InvalidInput,
    NonSeparating,
    NotCoprime,
    NotInvertible,
    PrecisionFailure,
    ShapeError,
    UnluckyRandomness,
)
from .field import Field, Rng, sample_block
from .numerators import NumeratorInputs, scalar_numerator
from .polymat import largest_invariant_factor, left_quotient_row, minimal_matrix_generator
from .sparse import (
    KrylovTable,
    SparseMat,
    combine_matrices,
    krylov_left_sequence,
    project_right,
)
from .unipoly import Poly, berlekamp_massey, scalar_numerator_direct, squarefree_part

RETRYABLE = (GenericityFailure, NotInvertible, NotCoprime, PrecisionFailure)


@dataclass
class ZeroDimParam:
    """((Q, V_1, ..., V_n), X = sum t_i X_i)."""

    Q: Poly
    V: list
    t: list

    @property
    def n(self) -> int:
        return len(self.V)

    def degree(self) -> int:
        return self.Q.degree

    def is_empty(self) -> bool:
        return self.Q.degree == 0

    def check_invariants(self) -> None:
        f = self.Q.field
        if self.Q.is_zero() or self.Q.lead() != 1:
            raise InvalidInput("Q must be monic")
        if not self.Q.gcd(self.Q.derivative()).is_one() and self.Q.degree > 0:
            raise InvalidInput("Q must be squarefree")
        acc = Poly.zero(f)
        for ti, Vi in zip(self.t, self.V):
            if Vi.degree >= max(self.Q.degree, 1) and self.Q.degree > 0:
                raise InvalidInput("deg(V_i) must be below deg(Q)")
            acc = acc + Vi.scale(int(ti))
        if self.Q.degree > 0 and (acc - Poly.x(f)) % self.Q != Poly.zero(f):
            raise InvalidInput("sum t_i V_i != T mod Q")

    def points(self, roots) -> list:
        return [tuple(Vi.eval(r) for Vi in self.V) for r in roots]


@dataclass
class Instance:
    field: Field
    n: int
    D: int
    mats: list  # n SparseMats

    def __post_init__(self):
        if self.field.p <= self.D:
            raise InvalidInput("modulus must exceed the algebra dimension")
        if len(self.mats) != self.n:
            raise ShapeError("matrix count must equal the variable count")
        for M in self.mats:
            if M.dim != self.D:
                raise ShapeError("matrix dimension mismatch")


def parametrization_from_series(ell_powers, ell_coord, bound: int, field: Field, t=None) -> ZeroDimParam:
    """Parametrization from the 2*bound projections of X-powers.

    P is the minimal polynomial of ell(X^s), Q its squarefree part, and each
    coordinate is C_{X_i}/C_1 mod Q with the numerators of the projected
    sequences.
    """
    P = berlekamp_massey(ell_powers, field, bound)
    Q = squarefree_part(P)
    C1 = scalar_numerator_direct(ell_powers, field, P)
    n = len(ell_coord)
    if t is None:
        t = [0] * n
    try:
        C1_inv = C1.modinv(Q)
    except NotInvertible:
        raise
    V = []
    for seq in ell_coord:
        Ci = scalar_numerator_direct(seq, field, P)
        V.append(Ci.modmul(C1_inv, Q))
    return ZeroDimParam(Q=Q, V=V, t=[int(x) % field.p for x in t])


@dataclass
class SolveStats:
    retries: int = 0
    krylov_seconds: float = 0.0
    total_seconds: float = 0.0
    extras: dict = dc_field(default_factory=dict)


def unit_vector(f: Field, D: int, i: int = 0) -> np.ndarray:
    e = f.zeros(D)
    e[i] = 1
    return e


@dataclass
class BlockSolveArtifacts:
    """Intermediates of one block_parametrization run, kept for testing."""

    M: SparseMat
    table: KrylovTable
    seq: list
    Pmat: object
    s1: Poly
    a_row: object
    C1: Poly
    C_coord: list


def block_parametrization(
    inst: Instance,
    U: np.ndarray,
    V: np.ndarray,
    t,
    m: int,
    rng: Rng | None = None,
    workers: int = 1,
    stats: SolveStats | None = None,
    artifacts: list | None = None,
) -> ZeroDimParam:
    """One attempt of the block algorithm with fixed randomness.

    Raises GenericityFailure and friends on unlucky draws; `solve` wraps this
    with the retry policy.
    """
    import time

    f = inst.field
    if not 1 <= m <= inst.D:
        raise InvalidInput("block size must be in [1, D]")
    rng = rng or Rng(0)
    M = combine_matrices(t, inst.mats)
    d = max(1, math.ceil(inst.D / m))
    t0 = time.perf_counter()
    table = krylov_left_sequence(M, U, 2 * d, workers=workers)
    t1 = time.perf_counter()
    if stats is not None:
        stats.krylov_seconds += t1 - t0
    seq = project_right(table, V)
    Pmat = minimal_matrix_generator(seq, f, d, d)
    s1 = largest_invariant_factor(Pmat, rng.child())
    Q = squarefree_part(s1)
    if s1.degree < inst.D and s1 == Q:
        # a semisimple action on a proper subspace: either the combination
        # collides two points (needs a fresh t) or the blocking missed part
        # of the space; a degree-deficient s1 with repeated roots would
        # instead signal genuine nilpotent structure and is accepted
        raise NonSeparating(
            f"squarefree invariant factor of degree {s1.degree} < {inst.D}"
        )
    a_row = left_quotient_row(Pmat, s1, 0, rng.child())
    short = KrylovTable(f, table.blocks[:d])
    inp = NumeratorInputs(Pmat=Pmat, s1=s1, a_row=a_row, table=short)
    eps1 = unit_vector(f, inst.D)
    C1 = scalar_numerator(inp, eps1)
    C1_inv = C1.modinv(Q)
    Vpolys = []
    C_coord = []
    for Mi in inst.mats:
        w = mat_vec(Mi, eps1)
        Ci = scalar_numerator(inp, w)
        C_coord.append(Ci)
        Vpolys.append(Ci.modmul(C1_inv, Q))
    param = ZeroDimParam(Q=Q, V=Vpolys, t=[int(x) % f.p for x in t])
    param.check_invariants()
    if artifacts is not None:
        artifacts.append(
            BlockSolveArtifacts(
                M=M, table=table, seq=seq, Pmat=Pmat, s1=s1, a_row=a_row, C1=C1, C_coord=C_coord
            )
        )
    return param


def mat_vec(M: SparseMat, w: np.ndarray) -> np.ndarray:
    """M . w for a column vector, via the transposed row product."""
    f = M.field
    if w.shape != (M.dim,):
        raise ShapeError("vector length mismatch")
    if f.dtype is np.int64 and M.dim <= f._acc_limit:
        return (M.csr @ w) % f.p
    out = f.zeros(M.dim)
    indptr, indices, data = M.csr.indptr, M.csr.indices, M.csr.data
    for r in range(M.dim):
        acc = 0
        for k in range(indptr[r], indptr[r + 1]):
            acc += int(data[k]) * int(w[indices[k]])
        out[r] = acc % f.p
    return out


def solve(
    inst: Instance,
    m: int,
    rng: Rng,
    workers: int = 1,
    retries: int = 3,
    stats: SolveStats | None = None,
    artifacts: list | None = None,
) -> ZeroDimParam:
    """Retry wrapper: fresh U,V first (M and t kept), fresh t afterwards."""
    import time

    f = inst.field
    stats = stats if stats is not None else SolveStats()
    start = time.perf_counter()
    t = [rng.nonzero_element(f) for _ in range(inst.n)]
    uv_failures = 0
    attempts = 0
    t_draws = 0
    last = None
    while attempts <= retries:
        U = sample_block(rng, f, inst.D, m)
        V = sample_block(rng, f, inst.D, m)
        try:
            param = block_parametrization(
                inst, U, V, t, m, rng=rng, workers=workers, stats=stats, artifacts=artifacts
            )
            stats.total_seconds = time.perf_counter() - start
            stats.retries = attempts
            return param
        except NonSeparating as exc:
            # detected collision of the separating form: resample t at once,
            # budgeted separately from the genericity retries
            last = exc
            t_draws += 1
            stats.extras["t_retries"] = t_draws
            if t_draws > 6:
                break
            t = [rng.nonzero_element(f) for _ in range(inst.n)]
            uv_failures = 0
        except RETRYABLE as exc:
            last = exc
            attempts += 1
            uv_failures += 1
            if uv_failures >= 2:
                t = [rng.nonzero_element(f) for _ in range(inst.n)]
                uv_failures = 0
    stats.total_seconds = time.perf_counter() - start
    stats.retries = attempts
    raise UnluckyRandomness(f"retries exhausted: {last}")


def verify_against_points(param: ZeroDimParam, truth_points, field: Field):
    """Compare a parametrization against known solution points.

    truth_points is a list of coordinate tuples (duplicates allowed, they
    collapse).  Returns a report dict with per-point pass/fail entries.
    """
    report = {"pass": True, "points": [], "warnings": []}
    distinct = []
    for pt in truth_points:
        pt = tuple(int(c) % field.p for c in pt)
        if pt not in distinct:
            distinct.append(pt)
    if not distinct:
        report["warnings"].append("empty truth list: vacuous pass")
        return report
    xvals = set()
    for pt in distinct:
        x = sum(int(ti) * c for ti, c in zip(param.t, pt)) % field.p
        xvals.add(x)
        ok = param.Q.eval(x) == 0 and all(
            Vi.eval(x) == c for Vi, c in zip(param.V, pt)
        )
        report["points"].append({"point": pt, "x": x, "ok": ok})
        if not ok:
            report["pass"] = False
    if param.Q.degree != len(xvals):
        report["pass"] = False
        report["warnings"].append(
            f"deg(Q)={param.Q.degree} but truth has {len(xvals)} distinct X-values"
        )
    return report
