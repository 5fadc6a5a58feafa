"""Radial asymptotically flat metrics g = A dr^2 + B r^2 dOmega^2."""

import io
from dataclasses import dataclass, field

import numpy as np

from .grid import RadialGrid, rho_weight


@dataclass
class RadialMetric:
    """Sampled radial metric; in Cartesian coordinates
    g_ij = B delta_ij + (A - B) x_i x_j / r^2.
    """

    grid: RadialGrid
    n: int
    A: np.ndarray
    B: np.ndarray
    delta: float = 1.0

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        if self.n < 3:
            raise ValueError("dimension must be >= 3")
        if self.A.shape != self.grid.r.shape or self.B.shape != self.grid.r.shape:
            raise ValueError("A, B must be sampled on the grid")
        if np.any(self.A <= 0) or np.any(self.B <= 0):
            raise ValueError("metric coefficients must be positive")

    # -- sampled-profile helpers -------------------------------------------

    def dA(self, order=1):
        return self.grid.deriv(self.A, order=order, parity=True)

    def dB(self, order=1):
        return self.grid.deriv(self.B, order=order, parity=True)

    def volume_density(self):
        """sqrt|g| r^(n-1) per unit solid angle (Cartesian volume element factor)."""
        return np.sqrt(self.A * self.B ** (self.n - 1)) * self.grid.r ** (self.n - 1)

    def measured_kappa(self):
        """sup rho^delta (|A-1| + |B-1|) over the outer half of the grid."""
        half = self.grid.num // 2
        rho = rho_weight(self.grid.r[half:])
        dev = np.abs(self.A[half:] - 1.0) + np.abs(self.B[half:] - 1.0)
        return float(np.max(rho ** self.delta * dev))

    def check_smooth_center(self, tol=1e-3):
        """A(0)=B(0) and vanishing one-sided slopes when the grid reaches r=0."""
        if not self.grid.includes_origin():
            return True
        ok = abs(self.A[0] - self.B[0]) < tol
        # one-sided slopes: a parity stencil would hide an odd kink
        dA = self.grid.deriv(self.A, 1, parity=False)
        dB = self.grid.deriv(self.B, 1, parity=False)
        return ok and abs(dA[0]) < tol and abs(dB[0]) < tol

    def copy(self):
        return RadialMetric(self.grid, self.n, self.A.copy(), self.B.copy(), self.delta)

    # -- file format: CSV `r,A,B` with `# n=<dim> delta=<d>` header --------

    def dump(self, fh):
        fh.write(f"# n={self.n} delta={self.delta:.17g}\n")
        fh.write("r,A,B\n")
        for r, a, b in zip(self.grid.r, self.A, self.B):
            fh.write(f"{r:.17g},{a:.17g},{b:.17g}\n")

    def dumps(self):
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()

    @classmethod
    def load(cls, fh):
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError("missing metric header line")
        kv = dict(tok.split("=") for tok in header[1:].split())
        n = int(kv["n"])
        delta = float(kv["delta"])
        data = np.loadtxt(fh, delimiter=",", skiprows=1)
        grid = RadialGrid(data[:, 0])
        return cls(grid, n, data[:, 1], data[:, 2], delta)


def build_flat(n, grid):
    """Euclidean reference metric: A = B = 1."""
    one = np.ones_like(grid.r)
    return RadialMetric(grid, n, one.copy(), one.copy(), delta=float(n - 2))


def build_schwarzschild_isotropic(m, grid):
    """Isotropic-coordinate Schwarzschild slice, n = 3 only: A = B = (1 + m/2r)^4."""
    if grid.r[0] <= 0:
        raise ValueError("Schwarzschild in isotropic coordinates needs r > 0")
    if m < 0:
        raise ValueError("mass must be nonnegative")
    u = 1.0 + m / (2.0 * grid.r)
    A = u ** 4
    return RadialMetric(grid, 3, A, A.copy(), delta=1.0)


def build_conformal(c, n, grid):
    """Conformally flat metric (1 + c q)^{4/(n-2)} delta with q = (1+r^2)^{-(n-2)/2}.

    q is smooth at the origin and decays like the Green's function, so
    delta = n-2.  Requires 1 + c q > 0.
    """
    q = (1.0 + grid.r ** 2) ** (-(n - 2) / 2.0)
    U = 1.0 + c * q
    if np.any(U <= 0):
        raise ValueError("conformal factor must stay positive")
    A = U ** (4.0 / (n - 2))
    return RadialMetric(grid, n, A, A.copy(), delta=float(n - 2))


def build_angular_bump(c, n, grid, width=1.0):
    """Anisotropic smooth test metric: A = 1, B = 1 + c/(1 + (r/width)^2)^{n/2}."""
    B = 1.0 + c / (1.0 + (grid.r / width) ** 2) ** (n / 2.0)
    if np.any(B <= 0):
        raise ValueError("B must stay positive")
    return RadialMetric(grid, n, np.ones_like(B), B, delta=float(n))


def _smooth_pos(u, w):
    """C^3 regularisation of max(0, u), active only on |u| <= w."""
    x = np.clip((u / w + 1.0) / 2.0, 0.0, 1.0)
    # antiderivative of the quintic smoothstep
    T = x ** 4 * (2.5 - 3.0 * x + x ** 2)
    return np.where(u >= w, u, 2.0 * w * T)


def _smooth_pos_deriv(u, w):
    x = np.clip((u / w + 1.0) / 2.0, 0.0, 1.0)
    return x ** 3 * (10.0 - 15.0 * x + 6.0 * x ** 2)


def _kink_profile(r, k, amp, smooth_width):
    """p(r) = amp * max(0, 1 - (r/k)^2) and its derivative, optionally with
    the derivative kink at r = k resolved over the given radial width."""
    u = 1.0 - (r / k) ** 2
    du = -2.0 * r / k ** 2
    if smooth_width > 0.0:
        # the kink sits where u crosses 0 with slope |u'(k)| = 2/k
        w = smooth_width * 2.0 / k
        return amp * _smooth_pos(u, w), amp * _smooth_pos_deriv(u, w) * du
    return amp * np.maximum(0.0, u), amp * np.where(u > 0.0, du, 0.0)


def radial_kink_map(r, kink_radius, amp, smooth_width=0.0):
    """Lipschitz radial map Phi(r) = r (1 + amp * max(0, 1 - (r/kink_radius)^2)).

    Phi' jumps at kink_radius; Phi = Id beyond it; smooth (even profile) at
    r=0.  A positive smooth_width resolves the derivative jump over that
    radial distance, leaving the map unchanged elsewhere.
    """
    r = np.asarray(r, dtype=float)
    p, _ = _kink_profile(r, kink_radius, amp, smooth_width)
    return r * (1.0 + p)


def build_distorted_flat(n, grid, kink_radius=3.0, amp=0.05, smooth_width=0.0):
    """Pullback of the flat metric by a radial map with a derivative kink.

    A = Phi'^2, B = (Phi/r)^2: a Lipschitz metric isometric to flat space,
    hence zero mass; the kink sits at kink_radius."""
    r = grid.r
    p, dp = _kink_profile(r, kink_radius, amp, smooth_width)
    dphi = 1.0 + p + r * dp
    if np.any(dphi <= 0):
        raise ValueError("kink amplitude too large: map not monotone")
    A = dphi ** 2
    B = (1.0 + p) ** 2
    return RadialMetric(grid, n, A, B, delta=float(n))
