"""Exact lattice machinery.

Bases live over the rationals (``fractions.Fraction`` in numpy object arrays)
and every basis vector carries an integral preimage in Z^n, so that the
projection of the preimage onto the current search subspace equals the basis
vector exactly.  Reduction runs on integer Gram matrices only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import PrecisionLoss, StructuralError

LLL_DELTA = Fraction(3, 4)


# ---------------------------------------------------------------------------
# small exact helpers
# ---------------------------------------------------------------------------

def as_fractions(a) -> np.ndarray:
    """Object array of Fractions with the shape of ``a``."""
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        out[idx] = x if isinstance(x, Fraction) else Fraction(x)
    return out


def as_integers(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        if isinstance(x, Fraction):
            if x.denominator != 1:
                raise StructuralError(f"{x} is not an integer")
            x = x.numerator
        elif isinstance(x, float):
            if not x.is_integer():
                raise StructuralError(f"{x} is not an integer")
        out[idx] = int(x)
    return out


def to_float(a) -> np.ndarray:
    return np.asarray(a, dtype=object).astype(float)


def fraction_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_fraction(s: str) -> Fraction:
    return Fraction(s)


def common_denominator(*arrays) -> int:
    den = 1
    for a in arrays:
        for x in np.asarray(a, dtype=object).flat:
            den = math.lcm(den, Fraction(x).denominator)
    return den


def exact_det(m) -> Fraction:
    """Determinant by fraction-free-ish Gaussian elimination over Q."""
    a = [[Fraction(x) for x in row] for row in np.asarray(m, dtype=object)]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        p = a[col][col]
        det *= p
        for r in range(col + 1, n):
            f = a[r][col] / p
            if f:
                for c in range(col, n):
                    a[r][c] -= f * a[col][c]
    return det


def exact_solve(a, b) -> np.ndarray:
    """Solve a square nonsingular system over Q."""
    a = [[Fraction(x) for x in row] for row in np.asarray(a, dtype=object)]
    rhs = [Fraction(x) for x in np.asarray(b, dtype=object)]
    n = len(a)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise StructuralError("singular system")
        a[col], a[piv] = a[piv], a[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        p = a[col][col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col] / p
                for c in range(col, n):
                    a[r][c] -= f * a[col][c]
                rhs[r] -= f * rhs[col]
    return np.array([rhs[i] / a[i][i] for i in range(n)], dtype=object)


def is_psd_exact(m) -> bool:
    """Exact PSD test for a symmetric rational matrix (LDL^T with zero pivots)."""
    a = [[Fraction(x) for x in row] for row in np.asarray(m, dtype=object)]
    n = len(a)
    for i in range(n):
        for j in range(i + 1, n):
            if a[i][j] != a[j][i]:
                return False
    for i in range(n):
        p = a[i][i]
        if p < 0:
            return False
        if p == 0:
            if any(a[i][j] != 0 for j in range(i + 1, n)):
                return False
            continue
        for r in range(i + 1, n):
            f = a[r][i] / p
            if f:
                for c in range(i + 1, n):
                    a[r][c] -= f * a[i][c]
    return True


def exact_projector(normals, n: int) -> np.ndarray:
    """Orthogonal projector onto the kernel of the rows of ``normals``, over Q."""
    eye = np.array([[Fraction(int(i == j)) for j in range(n)] for i in range(n)], dtype=object)
    z = as_fractions(normals).reshape(-1, n)
    if z.shape[0] == 0:
        return eye
    gram = z @ z.T
    inv_rows = [exact_solve(gram, e) for e in np.eye(gram.shape[0], dtype=int).tolist()]
    gram_inv = np.array(inv_rows, dtype=object).T
    return eye - z.T @ gram_inv @ z


# ---------------------------------------------------------------------------
# unimodular column operations
# ---------------------------------------------------------------------------

def _exgcd(a: int, b: int):
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def column_echelon(m):
    """Unimodular column reduction of an integer matrix.

    Returns ``(h, v, v_inv, pivots)`` with ``h = m @ v`` lower echelon,
    ``v`` unimodular and ``v_inv`` its inverse.  ``pivots[i]`` is the pivot
    column of row ``i`` or ``None`` when row ``i`` depends on earlier rows.
    """
    h = as_integers(m)
    rows, cols = h.shape
    v = np.array([[int(i == j) for j in range(cols)] for i in range(cols)], dtype=object)
    v_inv = v.copy()
    pivots = []
    r = 0
    for i in range(rows):
        if r >= cols:
            pivots.append(None)
            continue
        for j in range(r + 1, cols):
            a, b = h[i, r], h[i, j]
            if b == 0:
                continue
            g, s, t = _exgcd(a, b)
            p, q = -b // g, a // g
            # columns (r, j) <- (s*c_r + t*c_j, p*c_r + q*c_j); det = 1
            for mat in (h, v):
                cr, cj = mat[:, r].copy(), mat[:, j].copy()
                mat[:, r] = s * cr + t * cj
                mat[:, j] = p * cr + q * cj
            rr, rj = v_inv[r, :].copy(), v_inv[j, :].copy()
            v_inv[r, :] = q * rr - p * rj
            v_inv[j, :] = -t * rr + s * rj
        if h[i, r] == 0:
            pivots.append(None)
            continue
        if h[i, r] < 0:
            h[:, r] = -h[:, r]
            v[:, r] = -v[:, r]
            v_inv[r, :] = -v_inv[r, :]
        pivots.append(r)
        r += 1
    return h, v, v_inv, pivots


def unimodular_completion(c) -> tuple[np.ndarray, int]:
    """Unimodular integer matrix whose first row is ``c / gcd(c)``."""
    c = as_integers(c).reshape(1, -1)
    if all(x == 0 for x in c.flat):
        raise StructuralError("cannot complete the zero vector")
    h, _, v_inv, _ = column_echelon(c)
    return v_inv, int(h[0, 0])


def integer_solutions(normals, offsets, n: int):
    """All integer x with ``normals @ x == offsets``.

    Returns ``(particular, kernel)`` where ``kernel`` rows form a basis of the
    integer kernel, or ``None`` if the system has no integral solution.
    """
    z = as_integers(normals).reshape(-1, n)
    rhs = as_integers(offsets).reshape(-1)
    if z.shape[0] == 0:
        return np.zeros(n, dtype=object), np.array(
            [[int(i == j) for j in range(n)] for i in range(n)], dtype=object)
    h, v, _, pivots = column_echelon(z)
    y = [0] * n
    for i, piv in enumerate(pivots):
        acc = rhs[i] - sum(h[i, j] * y[j] for j in range(n) if j != piv)
        if piv is None:
            if acc != 0:
                return None
            continue
        q, rem = divmod(acc, h[i, piv])
        if rem:
            return None
        y[piv] = q
    rank = sum(p is not None for p in pivots)
    particular = v @ np.array(y, dtype=object)
    kernel = v[:, rank:].T.copy()
    return particular, kernel


def hermite_normal_form(m) -> np.ndarray:
    """Row-style Hermite normal form of an integer matrix, zero rows dropped."""
    a = as_integers(m)
    rows, cols = a.shape
    r = 0
    for col in range(cols):
        if r >= rows:
            break
        for i in range(r + 1, rows):
            x, y = a[r, col], a[i, col]
            if y == 0:
                continue
            g, s, t = _exgcd(x, y)
            ar, ai = a[r, :].copy(), a[i, :].copy()
            a[r, :] = s * ar + t * ai
            a[i, :] = (-y // g) * ar + (x // g) * ai
        if a[r, col] == 0:
            continue
        if a[r, col] < 0:
            a[r, :] = -a[r, :]
        p = a[r, col]
        for i in range(r):
            q = a[i, col] // p
            if q:
                a[i, :] = a[i, :] - q * a[r, :]
        r += 1
    return a[:r].copy()


def same_lattice(basis_a, basis_b) -> bool:
    """True iff the rational row sets generate the same lattice."""
    den = common_denominator(basis_a, basis_b)
    ha = hermite_normal_form(as_fractions(basis_a) * den)
    hb = hermite_normal_form(as_fractions(basis_b) * den)
    return ha.shape == hb.shape and bool(np.all(ha == hb))


# ---------------------------------------------------------------------------
# lattice state and Gram forms
# ---------------------------------------------------------------------------

@dataclass
class LatticeState:
    """Rational basis rows of a lattice plus integral preimages in Z^n."""

    basis: np.ndarray
    preimages: np.ndarray

    def __post_init__(self):
        self.basis = as_fractions(self.basis)
        self.preimages = as_integers(self.preimages)
        if self.basis.ndim != 2 or self.basis.shape != self.preimages.shape:
            raise StructuralError("basis and preimages must be matching k x n arrays")

    @classmethod
    def standard(cls, n: int) -> "LatticeState":
        eye = [[int(i == j) for j in range(n)] for i in range(n)]
        return cls(eye, eye)

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    def gram(self, form=None) -> np.ndarray:
        """Exact Gram matrix of the basis, under ``form`` (ambient) if given."""
        if form is None:
            return self.basis @ self.basis.T
        return self.basis @ as_fractions(form) @ self.basis.T

    def det_squared(self) -> Fraction:
        return exact_det(self.gram())

    def log_det(self) -> float:
        d2 = self.det_squared()
        return 0.5 * (math.log(d2.numerator) - math.log(d2.denominator))

    def transform(self, t) -> "LatticeState":
        t = as_integers(t)
        return LatticeState(t @ self.basis, t @ self.preimages)

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "n": self.ambient_dim,
            "basis": [[fraction_str(x) for x in row] for row in self.basis],
            "preimages": [[int(x) for x in row] for row in self.preimages],
        }

    @classmethod
    def from_json(cls, data: dict) -> "LatticeState":
        basis = [[parse_fraction(x) for x in row] for row in data["basis"]]
        return cls(basis, data["preimages"])


@dataclass(frozen=True)
class GramForm:
    """Integer PSD matrix approximating ``2**scale`` times a real form."""

    matrix: np.ndarray
    scale: int = 0
    shift: int = 0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def exact(cls, m) -> "GramForm":
        mat = as_integers(m)
        if not is_psd_exact(mat):
            raise StructuralError("Gram form must be symmetric PSD")
        return cls(mat, 0, 0)


def gram_integerize(m, bits: int) -> GramForm:
    """Round ``2**bits * m`` to integers, then add the least identity shift that keeps it PSD."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * scale):
        raise StructuralError("matrix is not symmetric")
    k = m.shape[0]
    factor = Fraction(2) ** bits
    base = np.empty((k, k), dtype=object)
    for i in range(k):
        for j in range(i, k):
            val = round((Fraction(m[i, j]) + Fraction(m[j, i])) / 2 * factor)
            base[i, j] = base[j, i] = int(val)

    def shifted(c):
        out = base.copy()
        for i in range(k):
            out[i, i] += c
        return out

    limit = max(factor * Fraction(float(np.trace(m))), Fraction(0))
    if is_psd_exact(base):
        return GramForm(base, bits, 0)
    hi = 1
    while not is_psd_exact(shifted(hi)):
        if hi > limit:
            raise PrecisionLoss(f"shift above 2^{bits} * trace; use more bits")
        hi *= 2
    lo = hi // 2  # not PSD (or 0, already rejected)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if is_psd_exact(shifted(mid)):
            hi = mid
        else:
            lo = mid
    if hi > limit:
        raise PrecisionLoss(f"shift {hi} exceeds 2^{bits} * trace")
    return GramForm(shifted(hi), bits, hi)


# ---------------------------------------------------------------------------
# integral LLL on a Gram matrix
# ---------------------------------------------------------------------------

def lll_gram(gram) -> tuple[np.ndarray, np.ndarray]:
    """Integral LLL (delta = 3/4) driven only by an integer Gram matrix.

    Returns ``(t, reduced_gram)`` where ``t`` is unimodular and the reduced
    basis is ``t @ basis``.  Raises StructuralError when the form is
    degenerate on the lattice.
    """
    g = as_integers(gram)
    k = g.shape[0]
    # 1-based working copies
    b = [[0] * (k + 1)] + [[0] + [int(x) for x in g[i]] for i in range(k)]
    h = [[0] * (k + 1)] + [[0] + [int(i == j) for j in range(k)] for i in range(k)]
    if k == 0:
        return np.zeros((0, 0), dtype=object), g
    d = [0] * (k + 1)
    d[0] = 1
    d[1] = b[1][1]
    if d[1] <= 0:
        raise StructuralError("Gram form is degenerate on the lattice")
    lam = [[0] * (k + 1) for _ in range(k + 1)]

    def red(kk, ll):
        if 2 * abs(lam[kk][ll]) <= d[ll]:
            return
        q = (2 * lam[kk][ll] + d[ll]) // (2 * d[ll])
        h[kk] = [x - q * y for x, y in zip(h[kk], h[ll])]
        for j in range(1, k + 1):
            b[kk][j] -= q * b[ll][j]
        for i in range(1, k + 1):
            b[i][kk] -= q * b[i][ll]
        lam[kk][ll] -= q * d[ll]
        for i in range(1, ll):
            lam[kk][i] -= q * lam[ll][i]

    def swap(kk, kmax):
        h[kk], h[kk - 1] = h[kk - 1], h[kk]
        b[kk], b[kk - 1] = b[kk - 1], b[kk]
        for row in b:
            row[kk], row[kk - 1] = row[kk - 1], row[kk]
        for j in range(1, kk - 1):
            lam[kk][j], lam[kk - 1][j] = lam[kk - 1][j], lam[kk][j]
        lm = lam[kk][kk - 1]
        bb = (d[kk - 2] * d[kk] + lm * lm) // d[kk - 1]
        for i in range(kk + 1, kmax + 1):
            t = lam[i][kk]
            lam[i][kk] = (d[kk] * lam[i][kk - 1] - lm * t) // d[kk - 1]
            lam[i][kk - 1] = (bb * t + lm * lam[i][kk]) // d[kk]
        d[kk - 1] = bb

    kk, kmax = 2, 1
    while kk <= k:
        if kk > kmax:
            kmax = kk
            for j in range(1, kk + 1):
                u = b[kk][j]
                for i in range(1, j):
                    u = (d[i] * u - lam[kk][i] * lam[j][i]) // d[i - 1]
                if j < kk:
                    lam[kk][j] = u
                else:
                    if u <= 0:
                        raise StructuralError("Gram form is degenerate on the lattice")
                    d[kk] = u
        red(kk, kk - 1)
        if 4 * d[kk] * d[kk - 2] < 3 * d[kk - 1] ** 2 - 4 * lam[kk][kk - 1] ** 2:
            swap(kk, kmax)
            kk = max(2, kk - 1)
            continue
        for ll in range(kk - 2, 0, -1):
            red(kk, ll)
        kk += 1
    t = np.array([row[1:] for row in h[1:]], dtype=object)
    out = np.array([row[1:] for row in b[1:]], dtype=object)
    return t, out


def is_lll_reduced(gram, delta=LLL_DELTA) -> bool:
    """Check size reduction and the Lovasz condition from an exact Gram matrix."""
    g = as_fractions(gram)
    k = g.shape[0]
    mu = [[Fraction(0)] * k for _ in range(k)]
    bstar = [Fraction(0)] * k
    for i in range(k):
        for j in range(i):
            s = g[i, j] - sum(mu[j][l] * mu[i][l] * bstar[l] for l in range(j))
            mu[i][j] = s / bstar[j]
        bstar[i] = g[i, i] - sum(mu[i][l] ** 2 * bstar[l] for l in range(i))
        if bstar[i] <= 0:
            return False
    for i in range(k):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    return all(bstar[i] >= (delta - mu[i][i - 1] ** 2) * bstar[i - 1] for i in range(1, k))


def _coefficient_gram(state: LatticeState, gram: GramForm) -> tuple[np.ndarray, int]:
    """Integer coefficient Gram ``den * B A B^T`` for an ambient form ``A``."""
    if gram.dim != state.ambient_dim:
        raise StructuralError(
            f"form has dimension {gram.dim}, basis lives in dimension {state.ambient_dim}")
    exact = state.basis @ as_fractions(gram.matrix) @ state.basis.T
    den = common_denominator(exact)
    return as_integers(exact * den), den


def lll_reduce(state: LatticeState, gram: GramForm) -> tuple[LatticeState, Fraction]:
    """LLL-reduce ``state`` under the ambient integer form ``gram``.

    The reduced first vector satisfies ``|b1|^2 <= 2**(k-1) * lambda_1^2``
    where both sides are measured in ``gram.matrix`` (not rescaled by
    ``2**gram.scale``).
    """
    if state.rank == 0:
        raise StructuralError("empty lattice")
    coeff, den = _coefficient_gram(state, gram)
    t, reduced = lll_gram(coeff)
    return state.transform(t), Fraction(reduced[0, 0], den)


class ShortVector(NamedTuple):
    vector: np.ndarray
    preimage: np.ndarray
    norm: float
    gamma: float
    lattice: LatticeState


def approx_shortest_vector(state: LatticeState, norm_matrix, bits: int = 64,
                           max_bits: int = 1024) -> ShortVector:
    """Approximately shortest nonzero lattice vector under a real PSD form.

    The form is applied to ambient vectors.  ``gamma`` bounds the ratio of the
    returned norm to the true minimum: the LLL factor ``2**((k-1)/2)`` times
    the distortion introduced by integerizing the coefficient Gram matrix.
    """
    k = state.rank
    if k == 0:
        raise StructuralError("empty lattice")
    m = np.asarray(norm_matrix, dtype=float)
    bf = to_float(state.basis)
    g = bf @ m @ bf.T
    g = 0.5 * (g + g.T)
    top = float(np.max(np.abs(g)))
    if not np.isfinite(top) or top <= 0.0:
        raise StructuralError("norm matrix vanishes on the lattice")
    lam_min = float(np.linalg.eigvalsh(g)[0])
    shift_exp = math.frexp(top)[1]
    p = bits - shift_exp
    while True:
        form = gram_integerize(g, p)
        mat = form.matrix
        try:
            t, _ = lll_gram(mat)
        except StructuralError:
            if p - bits + shift_exp >= max_bits:
                raise PrecisionLoss("coefficient Gram matrix is numerically singular")
            p += 64
            continue
        scaled_min = lam_min * 2.0 ** p if lam_min > 0 else 0.0
        eta = (k / 2 + form.shift) / scaled_min if scaled_min > 0 else math.inf
        if eta < 0.5 or p - bits + shift_exp >= max_bits:
            break
        p += 64
    reduced = state.transform(t)
    v = reduced.basis[0].copy()
    vf = to_float(v)
    norm = math.sqrt(max(float(vf @ m @ vf), 0.0))
    factor = math.sqrt((1 + eta) / (1 - eta)) if eta < 1 else math.inf
    gamma = 2.0 ** ((k - 1) / 2) * factor
    return ShortVector(v, reduced.preimages[0].copy(), norm, gamma, reduced)


def lattice_coordinates(state: LatticeState, v) -> np.ndarray:
    """Integer coordinates of ``v`` in the basis; StructuralError if ``v`` is not in the lattice."""
    v = as_fractions(v)
    b = state.basis
    c = exact_solve(b @ b.T, b @ v)
    if not np.all(c @ b == v):
        raise StructuralError("vector is not in the span of the lattice")
    if any(x.denominator != 1 for x in c):
        raise StructuralError("vector is not a lattice vector")
    return as_integers(c)


def project_lattice(state: LatticeState, v) -> LatticeState:
    """Project the lattice onto the orthogonal complement of lattice vector ``v``.

    Preimages follow the same unimodular change of basis, so the projection
    of each preimage onto the new subspace equals the new basis vector.
    """
    v = as_fractions(v)
    if all(x == 0 for x in v):
        raise StructuralError("cannot project along the zero vector")
    c = lattice_coordinates(state, v)
    u, _ = unimodular_completion(c)
    moved = state.transform(u)
    prim = moved.basis[0]
    vv = prim @ prim
    rest = moved.basis[1:]
    projected = np.array([row - (row @ prim / vv) * prim for row in rest], dtype=object)
    projected = projected.reshape(state.rank - 1, state.ambient_dim)
    return LatticeState(projected, moved.preimages[1:].reshape(state.rank - 1, state.ambient_dim))


def brute_force_shortest(state: LatticeState, gram: GramForm, coeff_bound: int) -> Fraction:
    """Exact minimum of ``|sum c_i b_i|^2`` over nonzero integer ``|c_i| <= coeff_bound``."""
    k = state.rank
    if k > 8:
        raise StructuralError("enumeration limited to rank 8")
    coeff, den = _coefficient_gram(state, gram)
    bound = int(coeff_bound)
    span = np.arange(-bound, bound + 1)
    big = max(abs(int(x)) for x in coeff.flat) * (k * bound) ** 2
    dtype = np.int64 if big < 2 ** 62 else object
    g = coeff.astype(dtype)
    best = None
    # first coordinate >= 0 suffices by the symmetry c -> -c
    rest = k - 1
    grid = (np.array(list(itertools.product(span, repeat=rest)), dtype=dtype)
            if rest else np.zeros((1, 0), dtype=dtype))
    tail = (grid @ g[1:, 1:] * grid).sum(axis=1) if rest else np.zeros(1, dtype=dtype)
    cross = grid @ g[0, 1:] if rest else np.zeros(1, dtype=dtype)
    for c0 in range(0, bound + 1):
        vals = c0 * c0 * g[0, 0] + 2 * c0 * cross + tail
        if c0 == 0:
            nonzero = np.any(grid != 0, axis=1) if rest else np.zeros(1, dtype=bool)
            vals = vals[nonzero]
        if len(vals):
            cand = vals.min()
            best = cand if best is None or cand < best else best
    if best is None:
        raise StructuralError("no nonzero coefficient vector in range")
    return Fraction(int(best), den)


def enumeration_bound(state: LatticeState, gram: GramForm) -> int:
    """Coefficient bound guaranteeing that enumeration finds the true minimum.

    A shortest vector has coordinates ``c_i = <v, d_i>`` against the dual
    basis, so ``c_i**2 <= |b_1|**2 * (G^-1)_ii`` with ``G`` the coefficient Gram.
    """
    coeff, den = _coefficient_gram(state, gram)
    k = coeff.shape[0]
    first = min(Fraction(coeff[i, i], den) for i in range(k))
    g = as_fractions(coeff) / den
    best = 0
    for i in range(k):
        e = [0] * k
        e[i] = 1
        inv_ii = exact_solve(g, e)[i]
        sq = first * inv_ii
        best = max(best, math.isqrt(sq.numerator // sq.denominator) + 1)
    return best
