"""Instance generation with known ground truth, instance and parametrization
file formats, and end-to-end verification.

Instances are built from an explicit point list: commuting block-diagonal
matrices (one Jordan-style block per point) hidden behind a basis change
that keeps the coordinate vector of the element 1 at index 0 and keeps the
matrices sparse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import FormatError, InvalidInput, InvalidSpec
from .field import Field, Rng
from .param import Instance, ZeroDimParam, mat_vec, unit_vector
from .sparse import SparseMat, combine_matrices, vec_mat
from .unipoly import Poly, berlekamp_massey


@dataclass
class PointSpec:
    coords: tuple  # n coordinates in [0, p)
    nu: int = 1  # local block size; 1 means a simple point
    c: tuple | None = None  # nilpotent mixing constants, one per variable


@dataclass
class GroundTruth:
    points: list  # list of coordinate tuples
    structure: list  # parallel list of PointSpec
    collisions: list  # pairs of point indices sharing the first coordinate

    @property
    def D(self) -> int:
        return sum(s.nu for s in self.structure)

    def simple_separated_dimension(self) -> int:
        """Dimension of the component the first variable can solve alone."""
        collided = {i for pair in self.collisions for i in pair}
        return sum(
            1
            for i, s in enumerate(self.structure)
            if s.nu == 1 and i not in collided
        )


def _mixing_chunks(D: int, chunk: int):
    out = []
    start = 0
    while start < D:
        out.append((start, min(start + chunk, D)))
        start = out[-1][1]
    return out


def _chunk_lower(field: Field, size: int, rng: Rng, mix: int, skip_col0: bool):
    """Unit lower-triangular chunk with a few random subdiagonal entries."""
    L = field.zeros((size, size))
    for i in range(size):
        L[i, i] = 1
    for r in range(1, size):
        lo = 1 if skip_col0 else 0
        avail = list(range(lo, r))
        if not avail:
            continue
        picks = rng.integers(0, len(avail), size=min(mix, len(avail)))
        for idx in set(int(x) for x in picks):
            L[r, avail[idx]] = rng.element(field)
    return L


def _unit_lower_inverse(field: Field, L: np.ndarray) -> np.ndarray:
    n = L.shape[0]
    inv = field.zeros((n, n))
    for i in range(n):
        inv[i, i] = 1
    for r in range(n):
        for c in range(r):
            acc = 0
            for k in range(c, r):
                acc += int(L[r, k]) * int(inv[k, c])
            inv[r, c] = (-acc) % field.p
    return inv


def generate_instance(
    field: Field,
    n: int,
    spec: list,
    rng: Rng,
    mix: int = 2,
    chunk: int = 6,
):
    """Instance with known solutions; returns (Instance, GroundTruth).

    Each PointSpec contributes one block: a simple point gives 1x1 blocks
    (alpha_i), a nilpotent point of size nu gives alpha_i*I + c_i*N with N
    the shift block.  A basis change (rank-one update fixing the element 1
    at index 0, a permutation, then chunk-local unit-triangular mixing)
    hides the block structure with bounded fill-in.
    """
    if n < 1:
        raise InvalidSpec("need at least one variable")
    points = []
    for s in spec:
        if len(s.coords) != n:
            raise InvalidSpec("point arity must match the variable count")
        if s.nu < 1:
            raise InvalidSpec("block size must be >= 1")
        if s.nu > 1:
            if s.c is None or len(s.c) != n:
                raise InvalidSpec("nilpotent blocks need one constant per variable")
            if all(int(ci) % field.p == 0 for ci in s.c):
                raise InvalidSpec("nilpotent blocks need a nonzero constant")
        pt = tuple(int(x) % field.p for x in s.coords)
        if pt in points:
            raise InvalidSpec(f"duplicate point {pt}")
        points.append(pt)
    D = sum(s.nu for s in spec)
    if D == 0:
        raise InvalidSpec("empty instance")
    if field.p <= D:
        raise InvalidSpec("modulus must exceed the dimension")

    p = field.p
    offsets = []
    off = 0
    for s in spec:
        offsets.append(off)
        off += s.nu

    # basis change step 1: move the coordinate vector of 1 to index 0
    w = field.zeros(D)
    for o in offsets:
        w[o] = 1
    u = (w - unit_vector(field, D)) % p
    mats = []
    for i in range(n):
        B = field.zeros((D, D))
        for s, o, pt in zip(spec, offsets, points):
            a = pt[i]
            for r in range(s.nu):
                B[o + r, o + r] = a
            if s.nu > 1:
                ci = int(s.c[i]) % p
                if ci:
                    for r in range(s.nu - 1):
                        B[o + r + 1, o + r] = ci
        # X = S^{-1} B S with S = I + u e0^T
        X = B.copy()
        X[:, 0] = (X[:, 0] + field.matmul(B, u)) % p
        r0 = X[0].copy()
        X = (X - np.outer(u, r0) % p) % p
        mats.append(X)

    # basis change step 2: permutation fixing index 0
    perm = np.concatenate(([0], 1 + rng.permutation(D - 1))) if D > 1 else np.array([0])
    mats = [B[np.ix_(perm, perm)] for B in mats]

    # basis change step 3: chunk-local unit-triangular mixing, sparing index 0
    chunks = _mixing_chunks(D, chunk)
    Ls = []
    for idx, (lo, hi) in enumerate(chunks):
        Ls.append(_chunk_lower(field, hi - lo, rng, mix, skip_col0=(lo == 0)))
    Linvs = [_unit_lower_inverse(field, L) for L in Ls]
    out = []
    for B in mats:
        # X = L^{-1} B L, applied chunk by chunk on each side
        X = B.copy()
        for (lo, hi), L in zip(chunks, Ls):
            X[:, lo:hi] = field.matmul(X[:, lo:hi], L)
        for (lo, hi), Linv in zip(chunks, Linvs):
            X[lo:hi, :] = field.matmul(Linv, X[lo:hi, :])
        out.append(SparseMat.from_dense(field, X))

    collisions = []
    for a in range(len(points)):
        for b in range(a + 1, len(points)):
            if points[a][0] == points[b][0]:
                collisions.append((a, b))
    truth = GroundTruth(points=points, structure=list(spec), collisions=collisions)
    inst = Instance(field=field, n=n, D=D, mats=out)
    return inst, truth


# -- file formats ---------------------------------------------------------


def write_instance(inst: Instance, path: str, truth: GroundTruth | None = None) -> None:
    lines = ["BFGLM 1", f"{inst.field.p} {inst.n} {inst.D}"]
    for i, M in enumerate(inst.mats, start=1):
        triples = list(M.triples())
        lines.append(f"matrix {i} {len(triples)}")
        for r, c, v in triples:
            lines.append(f"{r} {c} {v}")
    if truth is not None:
        lines.append(f"truth {len(truth.points)}")
        for pt, s in zip(truth.points, truth.structure):
            coords = " ".join(str(int(x)) for x in pt)
            if s.nu == 1:
                lines.append(f"point {coords} simple")
            else:
                cs = " ".join(str(int(x)) for x in s.c)
                lines.append(f"point {coords} nilpotent {s.nu} {cs}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _ints(parts, lineno, count=None):
    try:
        vals = [int(x) for x in parts]
    except ValueError:
        raise FormatError("expected integers", line=lineno)
    if count is not None and len(vals) != count:
        raise FormatError(f"expected {count} integers, got {len(vals)}", line=lineno)
    return vals


def read_instance(path: str):
    """Returns (Instance, GroundTruth or None)."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw) if ln.strip()]
    if not lines or lines[0][1] != "BFGLM 1":
        raise FormatError("missing 'BFGLM 1' header", line=1)
    if len(lines) < 2:
        raise FormatError("missing dimension line", line=lines[0][0] + 1)
    lineno, dims = lines[1]
    p, n, D = _ints(dims.split(), lineno, 3)
    try:
        field = Field(p)
    except InvalidInput as exc:
        raise FormatError(str(exc), line=lineno)
    pos = 2
    mats = []
    for i in range(1, n + 1):
        if pos >= len(lines):
            raise FormatError(f"missing header for matrix {i}", line=lines[-1][0] + 1)
        lineno, header = lines[pos]
        parts = header.split()
        if len(parts) != 3 or parts[0] != "matrix":
            raise FormatError(f"expected 'matrix {i} nnz'", line=lineno)
        idx, nnz = _ints(parts[1:], lineno, 2)
        if idx != i:
            raise FormatError(f"expected matrix {i}, found {idx}", line=lineno)
        pos += 1
        triples = []
        for _ in range(nnz):
            if pos >= len(lines):
                raise FormatError(
                    f"matrix {i} announces {nnz} entries but the file ends early",
                    line=lines[-1][0] + 1,
                )
            lineno, entry = lines[pos]
            r, c, v = _ints(entry.split(), lineno, 3)
            if not (0 <= r < D and 0 <= c < D):
                raise FormatError(f"entry ({r},{c}) outside {D}x{D}", line=lineno)
            if not (0 <= v < p):
                raise FormatError(f"value {v} outside [0,{p})", line=lineno)
            if v == 0:
                raise FormatError("explicit zero entry", line=lineno)
            triples.append((r, c, v))
            pos += 1
        M = SparseMat.from_triples(field, D, triples)
        if M.nnz != nnz:
            raise FormatError(
                f"matrix {i}: {nnz} entries announced, {M.nnz} distinct found",
                line=lines[pos - 1][0],
            )
        mats.append(M)
    truth = None
    if pos < len(lines):
        lineno, header = lines[pos]
        parts = header.split()
        if parts[0] != "truth" or len(parts) != 2:
            raise FormatError("expected 'truth k' section or end of file", line=lineno)
        (k,) = _ints(parts[1:], lineno, 1)
        pos += 1
        specs = []
        for _ in range(k):
            if pos >= len(lines):
                raise FormatError("truth section ends early", line=lines[-1][0] + 1)
            lineno, entry = lines[pos]
            parts = entry.split()
            if parts[0] != "point" or len(parts) < n + 2:
                raise FormatError("expected 'point coords... tag'", line=lineno)
            coords = tuple(_ints(parts[1 : n + 1], lineno, n))
            tag = parts[n + 1]
            if tag == "simple":
                specs.append(PointSpec(coords=coords))
            elif tag == "nilpotent":
                rest = _ints(parts[n + 2 :], lineno)
                if len(rest) != n + 1:
                    raise FormatError("nilpotent tag needs nu and n constants", line=lineno)
                specs.append(PointSpec(coords=coords, nu=rest[0], c=tuple(rest[1:])))
            else:
                raise FormatError(f"unknown point tag {tag!r}", line=lineno)
            pos += 1
        points = [s.coords for s in specs]
        collisions = [
            (a, b)
            for a in range(len(points))
            for b in range(a + 1, len(points))
            if points[a][0] == points[b][0]
        ]
        truth = GroundTruth(points=points, structure=specs, collisions=collisions)
        if truth.D != D:
            raise FormatError(
                f"truth blocks sum to {truth.D}, header says D={D}", line=lineno
            )
    if pos < len(lines) and truth is not None:
        raise FormatError("trailing content", line=lines[pos][0])
    inst = Instance(field=field, n=n, D=D, mats=mats)
    return inst, truth


def write_param(param: ZeroDimParam, field: Field, path: str) -> None:
    lines = [
        "PARAM 1",
        f"{field.p} {param.n} {param.Q.degree}",
        "t: " + " ".join(str(int(x)) for x in param.t),
        "Q: " + " ".join(str(param.Q.coeff(i)) for i in range(param.Q.degree + 1)),
    ]
    for i, Vi in enumerate(param.V, start=1):
        coeffs = [str(Vi.coeff(j)) for j in range(max(Vi.degree + 1, 1))]
        lines.append(f"V_{i}: " + " ".join(coeffs))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_param(path: str):
    """Returns (ZeroDimParam, Field)."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw) if ln.strip()]
    if not lines or lines[0][1] != "PARAM 1":
        raise FormatError("missing 'PARAM 1' header", line=1)
    lineno, dims = lines[1]
    p, n, degQ = _ints(dims.split(), lineno, 3)
    field = Field(p)

    def tagged(pos, tag):
        if pos >= len(lines):
            raise FormatError(f"missing '{tag}' line", line=lines[-1][0] + 1)
        lineno, ln = lines[pos]
        if not ln.startswith(tag):
            raise FormatError(f"expected '{tag}' line", line=lineno)
        return _ints(ln[len(tag) :].split(), lineno)

    t = tagged(2, "t:")
    if len(t) != n:
        raise FormatError("t has wrong arity", line=lines[2][0])
    qc = tagged(3, "Q:")
    if len(qc) != degQ + 1:
        raise FormatError("Q coefficient count mismatch", line=lines[3][0])
    V = []
    for i in range(1, n + 1):
        V.append(Poly(field, tagged(3 + i, f"V_{i}:")))
    return ZeroDimParam(Q=Poly(field, qc), V=V, t=t), field


def parse_points_file(path: str, n: int, field: Field):
    """Point list for the generator: one point per line.

    Format per line: n coordinates, optionally followed by
    'nilpotent nu c_1 ... c_n'.  Blank lines and '#' comments are skipped.
    """
    specs = []
    with open(path) as fh:
        for lineno, ln in enumerate(fh, start=1):
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            parts = ln.split()
            if len(parts) == n:
                specs.append(PointSpec(coords=tuple(_ints(parts, lineno, n))))
            elif len(parts) == 2 * n + 2 and parts[n] == "nilpotent":
                coords = tuple(_ints(parts[:n], lineno, n))
                nu = _ints([parts[n + 1]], lineno, 1)[0]
                c = tuple(_ints(parts[n + 2 :], lineno, n))
                specs.append(PointSpec(coords=coords, nu=nu, c=c))
            else:
                raise FormatError(
                    "expected 'c_1 ... c_n' or 'c_1 ... c_n nilpotent nu k_1 ... k_n'",
                    line=lineno,
                )
    return specs


# -- verification ---------------------------------------------------------


def minimal_polynomial_of_combination(inst: Instance, t, rng: Rng) -> Poly:
    """Minimal polynomial of sum t_i M_i via a random scalar sequence."""
    f = inst.field
    M = combine_matrices(t, inst.mats)
    u = rng.vector(f, inst.D)
    v = rng.vector(f, inst.D)
    seq = []
    cur = u
    fast = f.dtype is np.int64 and inst.D <= f._acc_limit
    for _ in range(2 * inst.D):
        if fast:
            seq.append(int(np.dot(cur, v) % f.p))
        else:
            seq.append(int(np.dot(cur.astype(object), v.astype(object)) % f.p))
        cur = vec_mat(cur, M)
    return berlekamp_massey(seq, f, inst.D)


def verify_solution(inst: Instance, param: ZeroDimParam, truth: GroundTruth | None = None):
    """Structural and algebraic checks; returns a report dict."""
    from .param import verify_against_points

    f = inst.field
    report = {"pass": True, "checks": [], "status": "subset-consistent"}

    def check(name, ok, detail=""):
        report["checks"].append({"name": name, "ok": bool(ok), "detail": detail})
        if not ok:
            report["pass"] = False

    try:
        param.check_invariants()
        check("parametrization invariants", True)
    except InvalidInput as exc:
        check("parametrization invariants", False, str(exc))

    check("deg(Q) <= D", param.Q.degree <= inst.D)

    rng = Rng(0xC0FFEE)
    s1 = minimal_polynomial_of_combination(inst, param.t, rng)
    check(
        "Q divides the minimal polynomial of the combination",
        (s1 % param.Q).is_zero() if param.Q.degree > 0 else True,
    )
    M = combine_matrices(param.t, inst.mats)
    ok_annihilate = True
    for _ in range(5):
        w = rng.vector(f, inst.D)
        acc = f.zeros(inst.D)
        for k in range(s1.degree, -1, -1):
            acc = (mat_vec(M, acc) + s1.coeff(k) * w) % f.p
        if np.any(acc != 0):
            ok_annihilate = False
    check("recomputed minimal polynomial annihilates the combination", ok_annihilate)

    if param.Q.degree == inst.D:
        report["status"] = "certified complete and radical"

    if truth is not None:
        pts = verify_against_points(param, truth.points, f)
        check("ground-truth points", pts["pass"], "; ".join(pts["warnings"]))
        report["points"] = pts["points"]
    if not report["pass"]:
        report["status"] = "failed"
    return report

