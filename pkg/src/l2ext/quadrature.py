"""Integration over the bounded models.

Two integrators share one interface: a set of nodes in the bounded
coordinates (shape ``(N, k)``), per-node weights, and ``estimate(values)``
turning integrand values into an :class:`IntegralEstimate`.

* :class:`DiskRule` is a tensor rule on the unit disk, Gauss-Legendre in
  ``s = r^2`` times the uniform angular rule.  It is exact for the
  polynomial integrands that occur here.
* :class:`MonteCarloIntegrator` draws uniform points of ``D_g`` by
  rejection from the entrywise box ``|Re|, |Im| <= 1`` over the
  upper-triangular coordinates.

The measure is Lebesgue measure on the real and imaginary parts of the
coordinates in the fixed g^{-1,1} basis.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import IntegrandError, SamplerDegenerate
from .hc_domain import BoundedPoint, PD_MARGIN, bounded_margin, coords_to_matrix
from .lie_core import DomainSpec

RNG_ALGORITHM = "PCG64"
DEFAULT_RADIAL = 64
DEFAULT_ANGULAR = 128
CHUNK_SIZE = 1 << 18
WARMUP_CANDIDATES = 1 << 16
MIN_ACCEPTANCE = 1e-6


@dataclass(frozen=True)
class IntegralEstimate:
    value: complex
    std_error: float
    n_points: int

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise IntegrandError(f"non-finite integral {self.value!r}")
        if not self.std_error >= 0:
            raise ValueError("std_error must be non-negative")

    @property
    def real(self):
        return float(np.real(self.value))

    def within(self, target, n_sigma=3.0, atol=0.0):
        """``|value - target| <= n_sigma * std_error + atol``."""
        return abs(self.value - target) <= n_sigma * self.std_error + atol

    def as_dict(self):
        v = complex(self.value)
        return {"re": v.real, "im": v.imag, "std_error": self.std_error, "n_points": self.n_points}


def _check_finite(values):
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise IntegrandError("integrand is not finite at every node")
    return values


class DiskRule:
    """Polar product rule on the unit disk, weights summing to ``pi``."""

    deterministic = True

    def __init__(self, n_radial=DEFAULT_RADIAL, n_angular=DEFAULT_ANGULAR):
        if n_radial < 1 or n_angular < 1:
            raise ValueError("rule sizes must be positive")
        self.n_radial = int(n_radial)
        self.n_angular = int(n_angular)
        x, w = np.polynomial.legendre.leggauss(self.n_radial)
        s = 0.5 * (x + 1.0)
        # dA = r dr dtheta = ds dtheta / 2
        ws = 0.25 * w
        theta = 2 * np.pi * np.arange(self.n_angular) / self.n_angular
        r = np.sqrt(s)
        self.t = (r[:, None] * np.exp(1j * theta[None, :])).ravel()
        self.weights = np.repeat(ws * (2 * np.pi / self.n_angular), self.n_angular)
        self.spec = DomainSpec.upper_half_plane()

    @property
    def nodes(self):
        return self.t[:, None]

    @property
    def n_points(self):
        return self.t.size

    def estimate(self, values):
        """Weighted sum over the nodes; ``values`` has shape ``(N,)`` or ``(N, m)``."""
        values = _check_finite(values)
        total = np.tensordot(self.weights, values, axes=([0], [0]))
        if np.ndim(total) == 0:
            return IntegralEstimate(complex(total), 0.0, self.n_points)
        return [IntegralEstimate(complex(v), 0.0, self.n_points) for v in total]

    def volume(self):
        return IntegralEstimate(float(self.weights.sum()), 0.0, self.n_points)

    def describe(self):
        return {"kind": "disk_rule", "n_radial": self.n_radial, "n_angular": self.n_angular}


def integrate_disk(f, rule=None):
    """``sum_i w_i f(t_i)`` for a vectorized ``f`` of the disk coordinate."""
    rule = rule or DiskRule()
    return rule.estimate(f(rule.t))


def box_volume(spec):
    """Volume of the sampling box ``[-1, 1]^{2k}``."""
    return 4.0 ** spec.n_coords


def _chunk_generator(seed, index):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


class MCSampler:
    """Seeded rejection sampler for the uniform distribution on ``D_g``.

    Chunk ``c`` of candidates comes from its own PCG64 stream keyed by
    ``(seed, c)``, so the accepted sequence does not depend on how many
    workers generate it.
    """

    def __init__(self, seed, spec, chunk_size=CHUNK_SIZE, workers=1):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = int(seed)
        self.spec = spec
        self.chunk_size = int(chunk_size)
        self.workers = max(1, int(workers))

    def _chunk(self, index):
        rng = _chunk_generator(self.seed, index)
        k = self.spec.n_coords
        raw = rng.uniform(-1.0, 1.0, size=(self.chunk_size, 2 * k))
        c = raw[:, :k] + 1j * raw[:, k:]
        ok = bounded_margin(coords_to_matrix(self.spec.genus, c)) > PD_MARGIN
        return c, ok

    def draw(self, n):
        """``n`` accepted coordinates and the number of candidates consumed to get them."""
        if n <= 0:
            raise ValueError("n must be positive")
        accepted = []
        n_acc = 0
        n_cand = 0
        index = 0
        pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None
        try:
            while n_acc < n:
                batch = range(index, index + self.workers)
                results = list(pool.map(self._chunk, batch)) if pool else [self._chunk(index)]
                index += len(results)
                for c, ok in results:
                    if n_acc >= n:
                        break
                    hits = np.flatnonzero(ok)
                    need = n - n_acc
                    if hits.size >= need:
                        accepted.append(c[hits[:need]])
                        n_cand += int(hits[need - 1]) + 1
                        n_acc = n
                    else:
                        accepted.append(c[hits])
                        n_cand += self.chunk_size
                        n_acc += hits.size
                if n_cand >= WARMUP_CANDIDATES and n_acc < MIN_ACCEPTANCE * n_cand:
                    raise SamplerDegenerate(f"acceptance ratio {n_acc / n_cand:.2e} after {n_cand} candidates")
        finally:
            if pool:
                pool.shutdown()
        return np.concatenate(accepted), n_cand


def mc_sample(sampler, n):
    """``n`` uniform points of the bounded domain as :class:`BoundedPoint` objects."""
    coords, _ = sampler.draw(n)
    return [BoundedPoint.from_coords(sampler.spec, c) for c in coords]


class MonteCarloIntegrator:
    """Hit-or-miss estimator ``V_box / N_c * sum_accepted f``.

    Rejected candidates contribute zero, so the standard error is that of
    the mean of ``N_c`` i.i.d. terms.  For complex integrands it is the
    combined error ``sqrt(var Re + var Im)``.
    """

    deterministic = False

    def __init__(self, spec, n_samples, seed, workers=1):
        self.spec = spec
        self.seed = int(seed)
        self.n_samples = int(n_samples)
        coords, n_cand = MCSampler(seed, spec, workers=workers).draw(self.n_samples)
        self.coords = coords
        self.n_candidates = n_cand
        self.box = box_volume(spec)
        self.weights = np.full(self.n_samples, self.box / n_cand)

    @property
    def nodes(self):
        return self.coords

    @property
    def n_points(self):
        return self.n_samples

    @property
    def acceptance_ratio(self):
        return self.n_samples / self.n_candidates

    def _one(self, v):
        w = self.box / self.n_candidates
        mean = w * v.sum()
        m2 = self.box * w * np.sum(np.abs(v) ** 2)
        var = max(m2 - abs(mean) ** 2, 0.0) / (self.n_candidates - 1)
        return IntegralEstimate(complex(mean), float(np.sqrt(var)), self.n_samples)

    def estimate(self, values):
        values = _check_finite(values)
        if values.ndim == 1:
            return self._one(values)
        return [self._one(values[:, j]) for j in range(values.shape[1])]

    def volume(self):
        return self._one(np.ones(self.n_samples))

    def describe(self):
        return {
            "kind": "monte_carlo",
            "rng": RNG_ALGORITHM,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "n_candidates": self.n_candidates,
            "box_volume": self.box,
        }


@lru_cache(maxsize=4)
def cached_mc_integrator(spec, n_samples, seed, workers=1):
    """Shared integrator so repeated suites reuse one sample set."""
    return MonteCarloIntegrator(spec, n_samples, seed, workers)


def default_integrator(spec, n_samples=10**6, seed=42, workers=1):
    if spec.genus == 1:
        return DiskRule()
    return cached_mc_integrator(spec, n_samples, seed, workers)


def polarization_values(sec1, sec2, pol, integrator):
    """``h_E(sigma_1, sigma_2)`` at every node of the integrator."""
    if sec1.rep is not sec2.rep and sec1.rep != sec2.rep:
        raise ValueError("sections live over different representations")
    v1 = sec1.evaluate_coords(integrator.nodes)
    v2 = sec2.evaluate_coords(integrator.nodes)
    return pol.smallest_piece_metric(v1, v2)


def l2_inner(sec1, sec2, pol, integrator):
    """``(sigma_1, sigma_2)_{L^2} = int_D h_E(sigma_1, sigma_2) dmu``."""
    return integrator.estimate(polarization_values(sec1, sec2, pol, integrator))


def l2_norm(sec, pol, integrator):
    est = l2_inner(sec, sec, pol, integrator)
    return IntegralEstimate(complex(est.value.real), est.std_error, est.n_points)


def elliptic_norm_conversion(tau, n=8):
    """``c_1 * int_{C/(Z + tau Z)} dz ^ d(conj z)`` with ``c_1 = i/2``; equals ``Im tau``.

    The fundamental domain is parametrized by ``z = a + b tau`` on the unit
    square, where ``dz ^ d(conj z) = (conj tau - tau) da ^ db``.
    """
    tau = complex(tau)
    x, w = np.polynomial.legendre.leggauss(n)
    w = 0.5 * w
    form = np.conj(tau) - tau
    integral = np.sum(np.outer(w, w) * form)
    c1 = 2.0**-1 * 1j
    return complex(c1 * integral)
