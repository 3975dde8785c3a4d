"""Framed bundles described by their Tyurin data.

A generic framed rank-``l`` bundle on a genus-``g`` curve is recorded by
``g*l`` distinct degeneration points and, at each, a projective kernel
vector of the framing matrix.  Vector functions attached to the bundle are
``l``-tuples of meromorphic functions with at most simple poles at the
degeneration points whose residue vectors are parallel to the kernel
vectors there.

The framing matrix itself is never needed for the algebra.  For the
section/vector-function dictionary a local polynomial model
``Psi(z) = B * A * diag(z - gamma_i) * A^-1`` is provided, where the columns
of ``A`` are the kernel vectors; it has simple determinant zeros exactly at
the degeneration points with the prescribed kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curve_models import CurveModel, linear_combination
from .errors import ConfigError, SampleOnDivisor, SingularFraming
from .weierstrass import sample_points


def normalize_projective(v) -> tuple:
    v = np.asarray(v, dtype=complex)
    nz = np.flatnonzero(np.abs(v) > 1e-14 * max(np.max(np.abs(v)), 1e-300))
    if len(nz) == 0:
        raise ValueError("projective vector must be nonzero")
    return tuple(complex(x) for x in v / v[nz[0]])


@dataclass(frozen=True)
class FramedBundleData:
    rank: int
    points: tuple = ()
    alphas: tuple = ()
    seed: int | None = None
    framing_base: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if len(self.points) != len(self.alphas):
            raise ValueError("one Tyurin vector per degeneration point")

    @property
    def degree(self) -> int:
        return len(self.points)

    def alpha_matrix(self) -> np.ndarray:
        return np.array(self.alphas, dtype=complex).T.reshape(self.rank, len(self.alphas))

    def to_dict(self) -> dict:
        return {"rank": self.rank,
                "points": [[p.real, p.imag] for p in self.points],
                "alphas": [[[a.real, a.imag] for a in v] for v in self.alphas],
                "seed": self.seed}


def bundle_from_dict(doc: dict, curve: CurveModel) -> FramedBundleData:
    try:
        l = int(doc["rank"])
        cp = lambda v: complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
        pts = tuple(cp(p) for p in doc.get("points", []))
        alphas = tuple(normalize_projective([cp(c) for c in v]) for v in doc.get("alphas", []))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"malformed bundle document: {exc}") from None
    if len(pts) != curve.genus * l:
        raise ConfigError(f"a rank-{l} bundle on a genus-{curve.genus} curve needs {curve.genus * l} points")
    if any(len(a) != l for a in alphas):
        raise ConfigError("Tyurin vectors must have length equal to the rank")
    return FramedBundleData(l, pts, alphas, doc.get("seed"))


def make_framed_bundle(curve: CurveModel, points, alphas, seed=None) -> FramedBundleData:
    alphas = tuple(normalize_projective(a) for a in alphas)
    l = len(alphas[0]) if alphas else 1
    return FramedBundleData(l, tuple(complex(p) for p in points), alphas, seed)


def random_framed_bundle(curve: CurveModel, l: int, seed: int = 0) -> FramedBundleData:
    """Generic bundle with ``g*l`` random degeneration points; deterministic in ``seed``."""
    if l < 1:
        raise ValueError("rank must be at least 1")
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(l, l)) + 1j * rng.normal(size=(l, l))
    base = tuple(map(tuple, base))
    if curve.genus == 0:
        return FramedBundleData(l, (), (), seed, base)
    lat = curve.lattice
    pts = sample_points(lat, curve.genus * l, seed=int(rng.integers(2 ** 31)),
                        avoid=[curve.p_plus, curve.p_minus], min_dist=0.08)
    alphas = []
    for _ in pts:
        v = rng.normal(size=l) + 1j * rng.normal(size=l)
        alphas.append(normalize_projective(v))
    return FramedBundleData(l, tuple(pts), tuple(alphas), seed, base)


class KNVectorFunction:
    """Column vector of meromorphic functions."""

    def __init__(self, components, bundle: FramedBundleData | None = None):
        self.components = tuple(components)
        self.bundle = bundle

    @property
    def rank(self) -> int:
        return len(self.components)

    @property
    def curve(self) -> CurveModel:
        return self.components[0].curve

    def __call__(self, z):
        return np.stack([f(z) for f in self.components], axis=-1)

    def residues(self, point) -> np.ndarray:
        out = []
        for f in self.components:
            lo = f.order_bound(point)
            out.append(complex(f.series(point, -lo).coefficient(-1)) if lo <= -1 else 0j)
        return np.array(out)

    def series(self, point, k_lo: int, k_hi: int) -> np.ndarray:
        """Matrix of coefficients ``[component, k]`` for ``k_lo <= k <= k_hi``."""
        rows = []
        for f in self.components:
            lo = f.order_bound(point)
            n = k_hi - lo + 1
            s = f.series(point, max(n, 1))
            rows.append([s.coefficient(k) if k >= lo else 0 for k in range(k_lo, k_hi + 1)])
        return np.array(rows, dtype=object if self.curve.genus == 0 else complex)

    def transformed(self, matrix) -> "KNVectorFunction":
        """``matrix @ f`` componentwise."""
        M = np.asarray(matrix)
        comps = [linear_combination(self.curve, list(M[i]), self.components) for i in range(M.shape[0])]
        return KNVectorFunction(comps, self.bundle)

    def __sub__(self, other):
        return KNVectorFunction([a - b for a, b in zip(self.components, other.components)], self.bundle)


def tyurin_defects(f: KNVectorFunction, bundle: FramedBundleData) -> list[float]:
    """Per point, the largest relative cross product ``r_j a_k - r_k a_j``."""
    out = []
    for p, alpha in zip(bundle.points, bundle.alphas):
        r = f.residues(p)
        a = np.asarray(alpha)
        cross = np.abs(np.outer(r, a) - np.outer(a, r))
        scale = max(np.linalg.norm(r), 1.0) * np.linalg.norm(a)
        out.append(float(np.max(cross)) / scale)
    return out


def check_tyurin_constraints(f: KNVectorFunction, bundle: FramedBundleData, tol: float = 1e-7) -> bool:
    if not bundle.points:
        return True
    return bool(max(tyurin_defects(f, bundle)) <= tol)


def apply_framing_change(bundle: FramedBundleData, gamma) -> FramedBundleData:
    """Bundle reframed by ``Psi -> Psi gamma``; kernel vectors go to ``gamma^-1 alpha``."""
    g = np.asarray(gamma, dtype=complex)
    if g.shape != (bundle.rank, bundle.rank):
        raise SingularFraming(f"framing change must be {bundle.rank}x{bundle.rank}")
    if np.linalg.cond(g) > 1e12:
        raise SingularFraming("framing change is singular")
    ginv = np.linalg.inv(g)
    alphas = tuple(normalize_projective(ginv @ np.asarray(a)) for a in bundle.alphas)
    base = None
    if bundle.framing_base is not None:
        base = tuple(map(tuple, np.asarray(bundle.framing_base) @ g))
    return FramedBundleData(bundle.rank, bundle.points, alphas, bundle.seed, base)


def reframe_vector_function(f: KNVectorFunction, gamma) -> KNVectorFunction:
    """The same section written in the new framing: ``gamma^-1 f``."""
    return f.transformed(np.linalg.inv(np.asarray(gamma, dtype=complex)))


# -- local framing model --------------------------------------------------

class FramingModel:
    """Holomorphic matrix ``Psi(z)`` with ``Psi(gamma_i) alpha_i = 0``."""

    def __init__(self, bundle: FramedBundleData, base=None, seed: int = 0):
        l = bundle.rank
        if base is None:
            base = bundle.framing_base
        if base is None:
            rng = np.random.default_rng(seed)
            base = rng.normal(size=(l, l)) + 1j * rng.normal(size=(l, l))
        self.base = np.asarray(base, dtype=complex)
        self.points = np.array(bundle.points, dtype=complex)
        self.bundle = bundle
        k = len(bundle.points)
        if k == 0:
            self._frame = None
        else:
            if k != l:
                raise SingularFraming("the polynomial framing model needs exactly rank-many points")
            A = bundle.alpha_matrix()
            if np.linalg.cond(A) > 1e10:
                raise SingularFraming("Tyurin vectors are linearly dependent")
            self._frame = (A, np.linalg.inv(A))

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        l = self.bundle.rank
        out = np.broadcast_to(self.base, z.shape + (l, l)).copy()
        if self._frame is None:
            return out
        A, Ainv = self._frame
        d = z[..., None] - self.points
        return self.base @ (A * d[..., None, :]) @ Ainv

    def det(self, z):
        return np.linalg.det(self(z))


@dataclass(frozen=True)
class PsiSamples:
    points: np.ndarray
    matrices: np.ndarray


def sample_framing(model: FramingModel, points) -> PsiSamples:
    pts = np.asarray(points, dtype=complex)
    return PsiSamples(pts, model(pts))


def section_from_vector_function(f_values, psi_samples: PsiSamples) -> np.ndarray:
    """``S(P) = sum_j Psi_j(P) f_j(P)`` at every sample point."""
    if isinstance(f_values, KNVectorFunction):
        f_values = f_values(psi_samples.points)
    f = np.asarray(f_values, dtype=complex)
    return np.einsum("kij,kj->ki", psi_samples.matrices, f)


def vector_function_from_section(S_values, psi_samples: PsiSamples, tol: float = 1e-12) -> np.ndarray:
    """Cramer's rule ``f_j = det(Psi_1..S..Psi_l) / det Psi`` at every sample point."""
    Psi = psi_samples.matrices
    S = np.asarray(S_values, dtype=complex)
    det = np.linalg.det(Psi)
    scale = np.max(np.abs(Psi), axis=(1, 2)) ** Psi.shape[1]
    if np.any(np.abs(det) <= tol * scale):
        raise SampleOnDivisor("a sample point lies on the degeneration divisor")
    out = np.empty_like(S)
    for j in range(Psi.shape[2]):
        M = Psi.copy()
        M[:, :, j] = S
        out[:, j] = np.linalg.det(M) / det
    return out


def residue_on_circle(values_fn, center: complex, radius: float, samples: int = 256) -> np.ndarray:
    """Contour-integral residue of a vector-valued function around ``center``."""
    theta = 2 * np.pi * np.arange(samples) / samples
    t = radius * np.exp(1j * theta)
    vals = values_fn(center + t)
    return np.mean(vals * t[:, None], axis=0)
