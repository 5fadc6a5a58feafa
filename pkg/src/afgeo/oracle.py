"""General-formula finite-difference oracles for the radial closed forms.

Everything here works on the Cartesian embedding
g_ij(x) = B(|x|) delta_ij + (A - B)(|x|) x_i x_j / |x|^2
with A, B read through cubic splines, and takes derivatives by centered
5-point finite differences.  Slow by construction; used to lock in the
closed-form reductions, never in inner loops.
"""

import numpy as np
from scipy.interpolate import make_interp_spline

from .grid import sphere_area


def unit_direction(n, seed=0):
    """Deterministic pseudo-random unit vector, away from coordinate axes."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


class CartesianMetric:
    """Radial metric evaluated as a full Cartesian tensor field."""

    def __init__(self, metric):
        self.n = metric.n
        r = metric.grid.r
        # quintic splines: second derivatives stay O(dr^4) accurate
        self._A = make_interp_spline(r, metric.A, k=5)
        self._B = make_interp_spline(r, metric.B, k=5)
        self.r_lo = r[0]
        self.r_hi = r[-1]

    def g(self, x):
        r = np.linalg.norm(x)
        A = self._A(r)
        B = self._B(r)
        out = B * np.eye(self.n)
        out += (A - B) * np.outer(x, x) / r ** 2
        return out

    def step(self, x):
        return 0.01 * max(1.0, 0.1 * np.linalg.norm(x))

    def dg(self, x, h=None):
        """dg[k, i, j] = d g_ij / d x^k, 5-point centered differences."""
        h = h or self.step(x)
        n = self.n
        out = np.empty((n, n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            out[k] = (-self.g(x + 2 * h * e) + 8 * self.g(x + h * e)
                      - 8 * self.g(x - h * e) + self.g(x - 2 * h * e)) / (12 * h)
        return out

    def christoffel(self, x, h=None):
        """Gamma[k, i, j] = Gamma^k_ij."""
        dg = self.dg(x, h)
        ginv = np.linalg.inv(self.g(x))
        # lower-index symbol: Gamma_{lij} = (d_i g_lj + d_j g_li - d_l g_ij)/2
        low = 0.5 * (np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg)
                     - np.einsum("lij->lij", dg))
        return np.einsum("kl,lij->kij", ginv, low)

    def christoffel_lower(self, x, h=None):
        dg = self.dg(x, h)
        return 0.5 * (np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg)
                      - np.einsum("lij->lij", dg))

    def ricci(self, x, h=None):
        """Ricci tensor by nested finite differences of the Christoffel symbols."""
        h = h or self.step(x)
        n = self.n
        dGamma = np.empty((n, n, n, n))  # [c, k, i, j] = d_c Gamma^k_ij
        for c in range(n):
            e = np.zeros(n)
            e[c] = 1.0
            dGamma[c] = (-self.christoffel(x + 2 * h * e) + 8 * self.christoffel(x + h * e)
                         - 8 * self.christoffel(x - h * e)
                         + self.christoffel(x - 2 * h * e)) / (12 * h)
        G = self.christoffel(x, h)
        # Riem^a_{bcd} = d_c Gamma^a_db - d_d Gamma^a_cb + G^a_ce G^e_db - G^a_de G^e_cb
        riem = (np.einsum("cadb->abcd", dGamma) - np.einsum("dacb->abcd", dGamma)
                + np.einsum("ace,edb->abcd", G, G) - np.einsum("ade,ecb->abcd", G, G))
        return np.einsum("abad->bd", riem)


def scalar_curvature_oracle(metric, r, direction=None):
    """R at radius r from the full Cartesian formula (Christoffels + contractions)."""
    cm = CartesianMetric(metric)
    x = r * (direction if direction is not None else unit_direction(metric.n))
    ric = cm.ricci(x)
    return float(np.einsum("ij,ij->", np.linalg.inv(cm.g(x)), ric))


def ricci_norm_sq_oracle(metric, r, direction=None):
    cm = CartesianMetric(metric)
    x = r * (direction if direction is not None else unit_direction(metric.n))
    ric = cm.ricci(x)
    ginv = np.linalg.inv(cm.g(x))
    return float(np.einsum("ik,jl,ij,kl->", ginv, ginv, ric, ric))


def mean_curvature_oracle(metric, r, direction=None):
    """H of the sphere |x| = r via the divergence of the unit normal."""
    cm = CartesianMetric(metric)
    n = metric.n
    x = r * (direction if direction is not None else unit_direction(n))

    def nu_cov(y):
        N = y / np.linalg.norm(y)
        ginv = np.linalg.inv(cm.g(y))
        norm = np.sqrt(ginv @ N @ N)
        return N / norm

    h = cm.step(x)
    dnu = np.empty((n, n))  # [i, j] = d_i nu_j
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        dnu[i] = (-nu_cov(x + 2 * h * e) + 8 * nu_cov(x + h * e)
                  - 8 * nu_cov(x - h * e) + nu_cov(x - 2 * h * e)) / (12 * h)
    G = cm.christoffel(x)
    nu = nu_cov(x)
    ginv = np.linalg.inv(cm.g(x))
    nuup = ginv @ nu
    proj = ginv - np.outer(nuup, nuup)
    cov = dnu - np.einsum("kij,k->ij", G, nu)
    return float(np.einsum("ij,ij->", proj, cov))


def deturck_vector_oracle(g_metric, h_metric, r, direction=None):
    """Contravariant radial component of W^k = g^{pq}(Gamma^k_pq - Gamma~^k_pq)."""
    cg = CartesianMetric(g_metric)
    ch = CartesianMetric(h_metric)
    x = r * (direction if direction is not None else unit_direction(g_metric.n))
    ginv = np.linalg.inv(cg.g(x))
    Vg = np.einsum("pq,kpq->k", ginv, cg.christoffel(x))
    Vh = np.einsum("pq,kpq->k", ginv, ch.christoffel(x))
    return float((Vg - Vh) @ (x / np.linalg.norm(x)))


def flux_integrand(metric, r, direction):
    """(g_ij,j - g_jj,i) xhat_i at the point r * direction."""
    cm = CartesianMetric(metric)
    x = r * np.asarray(direction, dtype=float)
    dg = cm.dg(x)
    vec = np.einsum("jij->i", dg) - np.einsum("ijj->i", dg)
    return float(vec @ (x / np.linalg.norm(x)))


def flux_quadrature(metric, r, npoints=12000, seed=3):
    """Brute-force surface quadrature of the mass flux integrand over |x| = r.

    n = 3 uses a latitude-longitude product grid with >= npoints nodes;
    higher dimensions exploit rotational symmetry by averaging the constant
    integrand over a handful of directions.
    """
    n = metric.n
    if n == 3:
        # Gauss-Legendre in cos(theta) x uniform phi (trapezoid, exact for periodic)
        nth = max(8, int(np.sqrt(npoints / 2.0)))
        nph = 2 * nth
        u, wu = np.polynomial.legendre.leggauss(nth)
        ph = (np.arange(nph) + 0.5) * 2.0 * np.pi / nph
        cm = CartesianMetric(metric)
        total = 0.0
        for uu, w in zip(u, wu):
            s = np.sqrt(1.0 - uu * uu)
            for p in ph:
                d = np.array([s * np.cos(p), s * np.sin(p), uu])
                x = r * d
                dg = cm.dg(x)
                vec = np.einsum("jij->i", dg) - np.einsum("ijj->i", dg)
                total += w * float(vec @ d)
        total *= (2.0 * np.pi / nph) * r ** 2
        return total
    vals = [flux_integrand(metric, r, unit_direction(n, seed + k)) for k in range(6)]
    return float(np.mean(vals)) * sphere_area(n) * r ** (n - 1)


def mass_surface_term(metric, r, direction=None):
    """Surface integral of |g|^1/2 g^{ij}(Gamma_j - d_j log|g| / 2) dS^i at radius r."""
    cm = CartesianMetric(metric)
    n = metric.n
    x = r * (direction if direction is not None else unit_direction(n))
    g = cm.g(x)
    ginv = np.linalg.inv(g)
    low = cm.christoffel_lower(x)
    Gam = np.einsum("pq,jpq->j", ginv, low)  # Gamma_j = g^{pq} Gamma_{jpq}
    dg = cm.dg(x)
    # d_j log|g| = g^{pq} d_j g_pq
    dlog = np.einsum("pq,jpq->j", ginv, dg)
    P = np.sqrt(np.linalg.det(g)) * ginv @ (Gam - 0.5 * dlog)
    return float(P @ (x / np.linalg.norm(x))) * sphere_area(n) * r ** (n - 1)


def mass_correction_density(metric, r, direction=None, cm=None):
    """Integrand (per metric volume) of the two correction terms in the
    integrated scalar-curvature identity: g^{ij}Gamma_i d_j log|g| / 2 minus
    the triple-Christoffel contraction."""
    cm = cm or CartesianMetric(metric)
    x = r * (direction if direction is not None else unit_direction(metric.n))
    g = cm.g(x)
    ginv = np.linalg.inv(g)
    low = cm.christoffel_lower(x)
    Gam = np.einsum("pq,jpq->j", ginv, low)
    dg = cm.dg(x)
    dlog = np.einsum("pq,jpq->j", ginv, dg)
    X = float(ginv @ Gam @ dlog)
    Y = float(np.einsum("ij,kl,pq,ikp,jql->", ginv, ginv, ginv, low, low))
    return 0.5 * X - Y
