"""The splitting refinement: solve as much of the point set as possible with
the sparse matrix M_1 alone, subtract its contribution from the block
sequences of the dense combination, solve the small residual, and take the
union after a coordinate change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    GenericityFailure,
    InvalidInput,
    NonSeparating,
    NotCoprime,
    NotInvertible,
    UnluckyRandomness,
)
from .field import Field, Rng, sample_block
from .numerators import NumeratorInputs, matrix_numerator, scalar_numerator, scalar_numerator_corrected
from .param import (
    RETRYABLE,
    Instance,
    SolveStats,
    ZeroDimParam,
    block_parametrization,
    mat_vec,
    parametrization_from_series,
    unit_vector,
)
from .polymat import PolyMat, largest_invariant_factor, left_quotient_row, minimal_matrix_generator
from .sparse import (
    KrylovTable,
    combine_matrices,
    krylov_left_sequence,
    project_right,
    project_vector,
)
from .unipoly import (
    Poly,
    berlekamp_massey,
    crt_pair,
    laurent_expand,
    power_projection,
    squarefree_part,
    transposed_modmul,
)


@dataclass
class X1SolveCache:
    table: KrylovTable  # first d blocks of U^T M_1^s
    seq: list  # 2d terms of U^T M_1^s V
    Pmat: PolyMat
    M_min: Poly  # minimal polynomial of the first variable
    a_rows: list  # m quotient rows
    param_A: ZeroDimParam  # ((F, T, G_2, ..., G_n), X_1)
    D_A: int


@dataclass
class CorrectionSet:
    delta: list  # 2*d_B matrices, m x m
    delta_coord: list  # d_B matrices, m x n
    delta_one: list  # d_B vectors, m x 1
    D_B: int
    d_B: int


def _empty_param(field: Field, n: int, t) -> ZeroDimParam:
    return ZeroDimParam(
        Q=Poly.one(field),
        V=[Poly.zero(field) for _ in range(n)],
        t=[int(x) % field.p for x in t],
    )


def block_parametrization_x1(
    inst: Instance,
    U: np.ndarray,
    V: np.ndarray,
    y,
    m: int,
    rng: Rng | None = None,
    workers: int = 1,
    stats: SolveStats | None = None,
):
    """Parametrization by X_1 of the points that X_1 alone can see.

    Returns (cache, param) where param is ((F, T, G_2, ..., G_n), X_1): the
    simple points with a unique X_1-value and a reduced local algebra.  F is
    carved out of the minimal polynomial of M_1 by two gcd refinements: one
    drops repeated X_1-values, the other (the a*c - b^2 test with the probe
    form Y) drops X_1-values hiding structure invisible to X_1.
    """
    import time

    f = inst.field
    rng = rng or Rng(0)
    if len(y) != inst.n - 1:
        raise InvalidInput("probe form needs n-1 coefficients")
    M1 = inst.mats[0]
    d = max(1, math.ceil(inst.D / m))
    t0 = time.perf_counter()
    table = krylov_left_sequence(M1, U, 2 * d, workers=workers)
    if stats is not None:
        stats.krylov_seconds += time.perf_counter() - t0
    seq = project_right(table, V)
    Pmat = minimal_matrix_generator(seq, f, d, d)
    M_min = largest_invariant_factor(Pmat, rng.child())
    F = squarefree_part(M_min)
    F = (F // F.gcd(M_min.gcd(M_min.derivative()))).monic()
    a_rows = [left_quotient_row(Pmat, M_min, i, rng.child()) for i in range(m)]
    short = KrylovTable(f, table.blocks[:d])
    inp = NumeratorInputs(Pmat=Pmat, s1=M_min, a_row=a_rows[0], table=short)

    N = combine_matrices(y, inst.mats[1:]) if inst.n > 1 else None
    eps1 = unit_vector(f, inst.D)
    w = eps1
    A = []
    for _ in range(3):
        A.append(scalar_numerator(inp, w))
        if N is not None:
            w = mat_vec(N, w)
    if N is not None:
        acb = A[0] * A[2] - A[1] * A[1]
        F = F.gcd(acb) if not acb.is_zero() else F
    t_x1 = [1] + [0] * (inst.n - 1)
    if F.degree == 0:
        param = _empty_param(f, inst.n, t_x1)
        cache = X1SolveCache(
            table=short, seq=seq, Pmat=Pmat, M_min=M_min, a_rows=a_rows, param_A=param, D_A=0
        )
        return cache, param
    A0_inv = A[0].modinv(F)
    G = [Poly.x(f) % F]
    for Mi in inst.mats[1:]:
        AXi = scalar_numerator(inp, mat_vec(Mi, eps1))
        G.append(AXi.modmul(A0_inv, F))
    param = ZeroDimParam(Q=F, V=G, t=t_x1)
    param.check_invariants()
    cache = X1SolveCache(
        table=short, seq=seq, Pmat=Pmat, M_min=M_min, a_rows=a_rows, param_A=param, D_A=F.degree
    )
    return cache, param


def decompose(M_min: Poly, C: Poly, param_A: ZeroDimParam, t, tau: int):
    """Values of the already-solved component of a linear form at X-powers.

    With C the numerator of the full sequence against M_min, the partial
    fraction C/M = A/F + B/E isolates the solved part A/F; its Laurent terms
    are the form's values on the solved component, and a power projection
    transports them from X_1-powers to X-powers.
    """
    f = M_min.field
    F = param_A.Q
    if tau < 0:
        raise InvalidInput("negative length")
    if F.degree == 0:
        return [0] * tau
    E = M_min // F
    if not (E * F - M_min).is_zero():
        raise InvalidInput("F must divide the minimal polynomial")
    try:
        E_inv = E.modinv(F)
    except NotInvertible as exc:
        raise NotCoprime(f"solved and residual factors share a root: {exc}")
    A = (C % F).modmul(E_inv, F)
    v = laurent_expand(A, F, F.degree)
    H = Poly.zero(f)
    for ti, Gi in zip(t, param_A.V):
        H = H + Gi.scale(int(ti))
    H = H % F
    return power_projection(F, H, v, tau)


def correction_matrices(cache: X1SolveCache, t, inst: Instance) -> CorrectionSet:
    """Contributions of the solved component to every block sequence entry."""
    f = inst.field
    m = cache.Pmat.rows
    n = inst.n
    D_B = inst.D - cache.D_A
    d_B = max(1, math.ceil(D_B / m))
    two_dB = 2 * d_B

    zeros_mm = [f.zeros((m, m)) for _ in range(two_dB)]
    zeros_mn = [f.zeros((m, n)) for _ in range(d_B)]
    zeros_m1 = [f.zeros((m, 1)) for _ in range(d_B)]
    if cache.D_A == 0:
        return CorrectionSet(delta=zeros_mm, delta_coord=zeros_mn, delta_one=zeros_m1, D_B=D_B, d_B=d_B)

    d = cache.table.count
    omega_V = matrix_numerator(cache.seq[:d], cache.Pmat)

    def row_numerator(a_row: PolyMat, omega: PolyMat, j: int) -> Poly:
        acc = Poly.zero(f)
        for k in range(m):
            acc = acc + a_row.entries[0][k] * omega.entries[k][j]
        return acc

    eps1 = unit_vector(f, inst.D)
    omega_one = matrix_numerator(project_vector(cache.table, eps1), cache.Pmat)
    omega_coord = [
        matrix_numerator(project_vector(cache.table, mat_vec(Mk, eps1)), cache.Pmat)
        for Mk in inst.mats
    ]

    delta = zeros_mm
    delta_coord = zeros_mn
    delta_one = zeros_m1
    for i in range(m):
        a_i = cache.a_rows[i]
        for j in range(m):
            C = row_numerator(a_i, omega_V, j)
            vals = decompose(cache.M_min, C, cache.param_A, t, two_dB)
            for s in range(two_dB):
                delta[s][i, j] = vals[s]
        for k in range(n):
            C = row_numerator(a_i, omega_coord[k], 0)
            vals = decompose(cache.M_min, C, cache.param_A, t, d_B)
            for s in range(d_B):
                delta_coord[s][i, k] = vals[s]
        C = row_numerator(a_i, omega_one, 0)
        vals = decompose(cache.M_min, C, cache.param_A, t, d_B)
        for s in range(d_B):
            delta_one[s][i, 0] = vals[s]
    return CorrectionSet(delta=delta, delta_coord=delta_coord, delta_one=delta_one, D_B=D_B, d_B=d_B)


def block_parametrization_residual(
    inst: Instance,
    U: np.ndarray,
    V: np.ndarray,
    corr: CorrectionSet,
    t,
    rng: Rng | None = None,
    workers: int = 1,
    stats: SolveStats | None = None,
) -> ZeroDimParam:
    """Parametrization of the residual points from corrected short sequences."""
    import time

    if corr.D_B < 1:
        raise InvalidInput("no residual component to solve")
    f = inst.field
    rng = rng or Rng(0)
    m = U.shape[1]
    d_B = corr.d_B
    M = combine_matrices(t, inst.mats)
    t0 = time.perf_counter()
    table = krylov_left_sequence(M, U, 2 * d_B, workers=workers)
    if stats is not None:
        stats.krylov_seconds += time.perf_counter() - t0
    seq = project_right(table, V)
    corrected = [(seq[s] - corr.delta[s]) % f.p for s in range(2 * d_B)]
    Smat = minimal_matrix_generator(corrected, f, d_B, d_B)
    S = largest_invariant_factor(Smat, rng.child())
    R = squarefree_part(S)
    if S.degree < corr.D_B and S == R:
        # same certificate as in the plain solve, scoped to the residual
        raise NonSeparating(
            f"squarefree residual invariant factor of degree {S.degree} < {corr.D_B}"
        )
    a_row = left_quotient_row(Smat, S, 0, rng.child())
    short = KrylovTable(f, table.blocks[:d_B])
    inp = NumeratorInputs(Pmat=Smat, s1=S, a_row=a_row, table=short)
    eps1 = unit_vector(f, inst.D)
    C1 = scalar_numerator_corrected(inp, eps1, corr.delta_one[:d_B])
    C1_inv = C1.modinv(R)
    W = []
    for k, Mk in enumerate(inst.mats):
        cols = [corr.delta_coord[s][:, k].reshape(m, 1) for s in range(d_B)]
        CXk = scalar_numerator_corrected(inp, mat_vec(Mk, eps1), cols)
        W.append(CXk.modmul(C1_inv, R))
    param = ZeroDimParam(Q=R, V=W, t=[int(x) % f.p for x in t])
    param.check_invariants()
    return param


def change_separating_element(param: ZeroDimParam, t, rng: Rng, attempts: int = 8) -> ZeroDimParam:
    """Transport a parametrization to the separating form X = sum t_i X_i.

    Works inside the univariate quotient by param.Q: a random linear form is
    projected along powers of the image of X, and the standard univariate
    reconstruction yields the same point set parametrized by X.
    """
    f = param.Q.field
    F = param.Q
    r = F.degree
    t = [int(x) % f.p for x in t]
    if r == 0:
        return _empty_param(f, param.n, t)
    lam = Poly.zero(f)
    for ti, Gi in zip(t, param.V):
        lam = lam + Gi.scale(ti)
    lam = lam % F
    for _ in range(attempts):
        ell = [rng.element(f) for _ in range(r)]
        powers = power_projection(F, lam, ell, 2 * r)
        coords = []
        for Gi in param.V:
            ell_i = transposed_modmul(Gi % F, ell, F)
            coords.append(power_projection(F, lam, ell_i, 2 * r))
        try:
            new = parametrization_from_series(powers, coords, r, f, t=t)
        except NotInvertible:
            continue
        if new.Q.degree == r:
            new.check_invariants()
            return new
    raise NonSeparating("the requested form does not separate the solved points")


def union_params(pA: ZeroDimParam, pB: ZeroDimParam) -> ZeroDimParam:
    """Parametrization of the disjoint union of two point sets sharing X."""
    if pA.t != pB.t:
        raise InvalidInput("both parts must use the same separating form")
    if pA.is_empty():
        return pB
    if pB.is_empty():
        return pA
    f = pA.Q.field
    if not pA.Q.gcd(pB.Q).is_one():
        raise NotCoprime("components share a root of the separating form")
    Q = pA.Q * pB.Q
    V = [crt_pair(a, pA.Q, b, pB.Q) for a, b in zip(pA.V, pB.V)]
    out = ZeroDimParam(Q=Q, V=V, t=pA.t)
    out.check_invariants()
    return out


def block_parametrization_with_splitting(
    inst: Instance,
    U: np.ndarray,
    V: np.ndarray,
    t,
    y,
    m: int,
    rng: Rng | None = None,
    workers: int = 1,
    stats: SolveStats | None = None,
) -> ZeroDimParam:
    """One attempt of the splitting pipeline with fixed randomness."""
    f = inst.field
    rng = rng or Rng(0)
    cache, param_A = block_parametrization_x1(
        inst, U, V, y, m, rng=rng, workers=workers, stats=stats
    )
    D_B = inst.D - cache.D_A
    if stats is not None:
        stats.extras["D_A"] = cache.D_A
        stats.extras["D_B"] = D_B
    if cache.D_A == 0:
        return block_parametrization(inst, U, V, t, m, rng=rng, workers=workers, stats=stats)
    pA = change_separating_element(param_A, t, rng.child())
    if D_B == 0:
        pA.check_invariants()
        return pA
    corr = correction_matrices(cache, t, inst)
    pB = block_parametrization_residual(
        inst, U, V, corr, t, rng=rng, workers=workers, stats=stats
    )
    out = union_params(pA, pB)
    return out


def solve_split(
    inst: Instance,
    m: int,
    rng: Rng,
    workers: int = 1,
    retries: int = 3,
    stats: SolveStats | None = None,
) -> ZeroDimParam:
    """Retry wrapper for the splitting pipeline, mirroring param.solve."""
    import time

    f = inst.field
    stats = stats if stats is not None else SolveStats()
    start = time.perf_counter()
    t = [rng.nonzero_element(f) for _ in range(inst.n)]
    y = [rng.nonzero_element(f) for _ in range(inst.n - 1)]
    uv_failures = 0
    attempts = 0
    t_draws = 0
    last = None
    while attempts <= retries:
        U = sample_block(rng, f, inst.D, m)
        V = sample_block(rng, f, inst.D, m)
        try:
            param = block_parametrization_with_splitting(
                inst, U, V, t, y, m, rng=rng, workers=workers, stats=stats
            )
            stats.total_seconds = time.perf_counter() - start
            stats.retries = attempts
            return param
        except NonSeparating as exc:
            last = exc
            t_draws += 1
            stats.extras["t_retries"] = t_draws
            if t_draws > 6:
                break
            t = [rng.nonzero_element(f) for _ in range(inst.n)]
            y = [rng.nonzero_element(f) for _ in range(inst.n - 1)]
            uv_failures = 0
        except RETRYABLE as exc:
            last = exc
            attempts += 1
            uv_failures += 1
            if uv_failures >= 2:
                t = [rng.nonzero_element(f) for _ in range(inst.n)]
                y = [rng.nonzero_element(f) for _ in range(inst.n - 1)]
                uv_failures = 0
    stats.total_seconds = time.perf_counter() - start
    stats.retries = attempts
    raise UnluckyRandomness(f"retries exhausted: {last}")
