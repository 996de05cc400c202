"""Coupling coefficients for products of spherical harmonics.

Classical Clebsch-Gordan values are computed by an exact-rational Racah
sum. The real-basis coupling coefficients follow by conjugating the
classical block with the complex-to-real change-of-basis matrices; real
Gaunt integrals then have a closed form in terms of those coefficients.

Sign convention for the real-basis blocks: the overall sign of each
(ell, ell1, ell2) block is chosen so that its lexicographically last
nonzero entry, in (m, m1, m2) order, is positive. This reproduces the
reference anchor matrices at (0,1,1) and (2,1,1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import NumericalCheckError
from .special_fn import quadrature_rule, real_harmonic_table

__all__ = [
    "CGTable",
    "GGTable",
    "build_cg_table",
    "build_gg_table",
    "clebsch_gordan",
    "gaunt_consistency_max_error",
    "gaunt_real",
    "gg_block",
    "godunov_gordienko",
    "real_unitary",
    "triangle_ok",
]

_IMAG_TOL = 1e-12
# entries below this fraction of the block maximum count as zeros when
# the deterministic block sign is picked
_ZERO_TOL = 1e-12
_FORMAT_VERSION = 1


def triangle_ok(ell: int, ell1: int, ell2: int) -> bool:
    """Triangle selection rule for coupling (ell1, ell2) -> ell."""
    return abs(ell1 - ell2) <= ell <= ell1 + ell2


def _index_check(pairs) -> None:
    for ell, m in pairs:
        if ell < 0 or abs(m) > ell:
            raise ValueError(f"need l >= 0 and |m| <= l, got (l, m) = ({ell}, {m})")


def clebsch_gordan(l1: int, m1: int, l2: int, m2: int, l: int, m: int) -> float:
    """Classical coefficient <l1 m1 l2 m2 | l m>.

    Zero outside the triangle rule or when m != m1 + m2. The Racah sum
    runs in big-integer rationals and is converted to floating point
    once at the end, so there is no cancellation even at high degree.
    """
    _index_check(((l1, m1), (l2, m2), (l, m)))
    if m1 + m2 != m or not triangle_ok(l, l1, l2):
        return 0.0
    kmin = max(0, l2 - l - m1, l1 - l + m2)
    kmax = min(l1 + l2 - l, l1 - m1, l2 + m2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        denom = (
            math.factorial(k)
            * math.factorial(l1 + l2 - l - k)
            * math.factorial(l1 - m1 - k)
            * math.factorial(l2 + m2 - k)
            * math.factorial(l - l2 + m1 + k)
            * math.factorial(l - l1 - m2 + k)
        )
        total += Fraction((-1) ** k, denom)
    if total == 0:
        return 0.0
    norm = Fraction(
        (2 * l + 1)
        * math.factorial(l1 + l2 - l)
        * math.factorial(l1 - l2 + l)
        * math.factorial(-l1 + l2 + l)
        * math.factorial(l1 + m1)
        * math.factorial(l1 - m1)
        * math.factorial(l2 + m2)
        * math.factorial(l2 - m2)
        * math.factorial(l + m)
        * math.factorial(l - m),
        math.factorial(l1 + l2 + l + 1),
    )
    value = math.sqrt(float(total * total * norm))
    return value if total > 0 else -value


@lru_cache(maxsize=None)
def _cg_dense(l1: int, l2: int, l: int) -> np.ndarray:
    """Dense classical block indexed [m1 + l1, m2 + l2, m + l]."""
    out = np.zeros((2 * l1 + 1, 2 * l2 + 1, 2 * l + 1))
    for m1 in range(-l1, l1 + 1):
        for m2 in range(-l2, l2 + 1):
            m = m1 + m2
            if abs(m) <= l:
                out[m1 + l1, m2 + l2, m + l] = clebsch_gordan(l1, m1, l2, m2, l, m)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def real_unitary(ell: int) -> np.ndarray:
    """Change of basis U with S^a = sum_mu U[a + ell, mu + ell] Y^mu.

    Rows are indexed by the real-basis label a, columns by the complex
    order mu, both offset by ell. The matrix is unitary.
    """
    if ell < 0:
        raise ValueError("degree must be >= 0")
    dim = 2 * ell + 1
    u = np.zeros((dim, dim), dtype=complex)
    u[ell, ell] = 1.0
    rt = 1.0 / math.sqrt(2.0)
    for mu in range(1, ell + 1):
        sign = (-1.0) ** mu
        u[ell + mu, ell + mu] = rt
        u[ell + mu, ell - mu] = sign * rt
        u[ell - mu, ell - mu] = -1j * rt
        u[ell - mu, ell + mu] = 1j * sign * rt
    u.setflags(write=False)
    return u


@lru_cache(maxsize=None)
def _gg_canonical(l: int, l1: int, l2: int) -> np.ndarray:
    # caller guarantees l1 <= l2 and the triangle rule
    if (l + l1 + l2) % 2 == 1:
        # a product of two real harmonics is parity-even in the degrees,
        # so odd triples carry no real coupling; the complex-basis
        # intertwiner is purely imaginary here and its real part is zero
        out = np.zeros((2 * l + 1, 2 * l1 + 1, 2 * l2 + 1))
        out.setflags(write=False)
        return out
    cg = _cg_dense(l1, l2, l)
    u = real_unitary(l)
    u1 = real_unitary(l1)
    u2 = real_unitary(l2)
    block = np.einsum("am,bi,cj,ijm->abc", np.conj(u), u1, u2, cg)
    resid = float(np.max(np.abs(block.imag)))
    if resid > _IMAG_TOL:
        raise NumericalCheckError(
            f"imaginary residue {resid:.3e} in real coupling block ({l},{l1},{l2})"
        )
    real = np.ascontiguousarray(block.real)
    flat = real.ravel()
    mag = np.abs(flat)
    peak = float(mag.max())
    if peak > 0.0:
        nz = np.nonzero(mag > _ZERO_TOL * peak)[0]
        if nz.size and flat[nz[-1]] < 0.0:
            real = -real
    real.setflags(write=False)
    return real


def gg_block(ell: int, ell1: int, ell2: int) -> np.ndarray:
    """Real-basis coupling block indexed [m + ell, m1 + ell1, m2 + ell2].

    Zero array when the triangle rule fails. Blocks are cached with
    ell1 <= ell2; the swapped order is produced by transposing the last
    two axes with the sign (-1)^(ell1 + ell2 - ell).
    """
    if min(ell, ell1, ell2) < 0:
        raise ValueError("degrees must be >= 0")
    if not triangle_ok(ell, ell1, ell2):
        return np.zeros((2 * ell + 1, 2 * ell1 + 1, 2 * ell2 + 1))
    if ell1 <= ell2:
        return _gg_canonical(ell, ell1, ell2)
    swapped = np.transpose(_gg_canonical(ell, ell2, ell1), (0, 2, 1))
    return np.ascontiguousarray(swapped) * (-1.0) ** (ell1 + ell2 - ell)


def godunov_gordienko(ell: int, m: int, ell1: int, m1: int, ell2: int, m2: int) -> float:
    """Single real-basis coupling coefficient, target degree first."""
    _index_check(((ell, m), (ell1, m1), (ell2, m2)))
    if not triangle_ok(ell, ell1, ell2):
        return 0.0
    return float(gg_block(ell, ell1, ell2)[m + ell, m1 + ell1, m2 + ell2])


def gaunt_real(l1: int, m1: int, l2: int, m2: int, l3: int, m3: int) -> float:
    """Integral of a product of three real harmonics over the sphere.

    Closed form: sqrt((2 l1 + 1)(2 l2 + 1) / (4 pi (2 l3 + 1))) times
    the coupling coefficient at (l3, m3) times the zonal coefficient at
    (l3, 0). Selection rules (triangle, parity) come out automatically
    as zeros of the coupling factors.
    """
    pref = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) / (4.0 * math.pi * (2 * l3 + 1)))
    return (
        pref
        * godunov_gordienko(l3, m3, l1, m1, l2, m2)
        * godunov_gordienko(l3, 0, l1, 0, l2, 0)
    )


def gaunt_consistency_max_error(ell_max: int = 6) -> float:
    """Max |closed form - quadrature| over all triples with degrees <= ell_max.

    The quadrature side integrates products of three real harmonics
    with a rule exact for the full polynomial degree, so the comparison
    simultaneously exercises the coupling table, the harmonics, and the
    quadrature weights.
    """
    rule = quadrature_rule(int(math.ceil(1.5 * ell_max)))
    th, ph = rule.grid_angles()
    table = real_harmonic_table(ell_max, th, ph)
    quad = np.einsum("ip,jp,kp,p->ijk", table, table, table, rule.weights)

    nrows = table.shape[0]
    closed = np.zeros((nrows, nrows, nrows))
    for l1 in range(ell_max + 1):
        s1 = slice(l1 * l1, (l1 + 1) * (l1 + 1))
        for l2 in range(ell_max + 1):
            s2 = slice(l2 * l2, (l2 + 1) * (l2 + 1))
            for l3 in range(ell_max + 1):
                if not triangle_ok(l3, l1, l2) or (l1 + l2 + l3) % 2 == 1:
                    continue
                zonal = godunov_gordienko(l3, 0, l1, 0, l2, 0)
                if zonal == 0.0:
                    continue
                pref = math.sqrt(
                    (2 * l1 + 1) * (2 * l2 + 1) / (4.0 * math.pi * (2 * l3 + 1))
                )
                s3 = slice(l3 * l3, (l3 + 1) * (l3 + 1))
                blk = gg_block(l3, l1, l2)  # [m3, m1, m2]
                closed[s1, s2, s3] = pref * zonal * np.transpose(blk, (1, 2, 0))
    return float(np.max(np.abs(closed - quad)))


# ---------------------------------------------------------------------------
# persistent tables


def _canonical_triples(ell_max: int):
    for l in range(ell_max + 1):
        for l1 in range(ell_max + 1):
            for l2 in range(l1, ell_max + 1):
                if triangle_ok(l, l1, l2):
                    yield l, l1, l2


def _save_entries(path, kind: str, ell_max: int, entries) -> None:
    payload = {
        "meta": np.array([_FORMAT_VERSION, ell_max], dtype=np.int64),
        "kind": np.array(kind),
    }
    for (l, l1, l2), block in entries.items():
        payload[f"b_{l}_{l1}_{l2}"] = block
    np.savez_compressed(path, **payload)


def _load_entries(path, kind: str):
    with np.load(path, allow_pickle=False) as data:
        if str(data["kind"]) != kind:
            raise ValueError(f"table file holds kind {data['kind']!r}, wanted {kind!r}")
        version, ell_max = (int(v) for v in data["meta"])
        if version != _FORMAT_VERSION:
            raise ValueError(f"unsupported table format version {version}")
        entries = {}
        for key in data.files:
            if key.startswith("b_"):
                l, l1, l2 = (int(s) for s in key[2:].split("_"))
                entries[(l, l1, l2)] = data[key]
    return entries, ell_max


class _TripleTable:
    """Shared lookup behavior for the table containers."""

    entries: dict
    ell_max: int
    _kind = ""

    def block(self, ell: int, ell1: int, ell2: int) -> np.ndarray:
        if not triangle_ok(ell, ell1, ell2):
            return np.zeros((2 * ell + 1, 2 * ell1 + 1, 2 * ell2 + 1))
        if ell1 <= ell2:
            return self.entries[(ell, ell1, ell2)]
        swapped = np.transpose(self.entries[(ell, ell2, ell1)], (0, 2, 1))
        return np.ascontiguousarray(swapped) * (-1.0) ** (ell1 + ell2 - ell)

    def coefficient(self, ell, m, ell1, m1, ell2, m2) -> float:
        _index_check(((ell, m), (ell1, m1), (ell2, m2)))
        if not triangle_ok(ell, ell1, ell2):
            return 0.0
        return float(self.block(ell, ell1, ell2)[m + ell, m1 + ell1, m2 + ell2])

    def save(self, path) -> None:
        _save_entries(path, self._kind, self.ell_max, self.entries)

    @classmethod
    def load(cls, path):
        entries, ell_max = _load_entries(path, cls._kind)
        return cls(entries=entries, ell_max=ell_max)


@dataclass(frozen=True)
class GGTable(_TripleTable):
    """Real-basis coupling blocks for all degrees up to ell_max."""

    entries: dict
    ell_max: int
    _kind = "gg"


@dataclass(frozen=True)
class CGTable(_TripleTable):
    """Classical coupling blocks for all degrees up to ell_max."""

    entries: dict
    ell_max: int
    _kind = "cg"


def build_gg_table(ell_max: int) -> GGTable:
    entries = {t: gg_block(*t) for t in _canonical_triples(ell_max)}
    return GGTable(entries=entries, ell_max=ell_max)


def build_cg_table(ell_max: int) -> CGTable:
    entries = {
        (l, l1, l2): np.ascontiguousarray(np.transpose(_cg_dense(l1, l2, l), (2, 0, 1)))
        for (l, l1, l2) in _canonical_triples(ell_max)
    }
    return CGTable(entries=entries, ell_max=ell_max)
