"""Background-gauged (DeTurck) flow of radial metrics.

The evolved unknown is eta = g - h, componentwise on the grid.  The right-hand
side is the full tensor evolution equation (Laplacian, two background-curvature
terms, four quadratic gradient contractions) evaluated pointwise at the
Cartesian point x = r e1, where every radial tensor is an explicit combination
of delta_ab, the axis projector and 1/r factors; einsum over nodes does the
rest.  An independent closed-form route (-2 Ric + Lie_W g in the warped
reduction) locks the kernel in the tests.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import RadialGrid
from .metrics import RadialMetric
from .curvature import scalar_curvature, ricci_norm_sq, _phi_derivs
from .norms import is_delta_fair, eta_sup_norms


class FlowAbort(RuntimeError):
    """Numerical abort: NaN, positivity loss or fairness violation."""


# -- constant index tensors at the axis point -------------------------------

_IDX_CACHE = {}


def _idx(n):
    if n in _IDX_CACHE:
        return _IDX_CACHE[n]
    I = np.eye(n)
    e = np.zeros(n)
    e[0] = 1.0
    E = np.outer(e, e)
    # U1[c,a,b] * r = d_c (x_a x_b / r^2) at x = r e1
    U1 = (np.einsum("ca,b->cab", I, e) + np.einsum("cb,a->cab", I, e)
          - 2.0 * np.einsum("c,a,b->cab", e, e, e))
    # U2[d,c,a,b] * r^2 = d_d d_c (x_a x_b / r^2) at x = r e1
    U2 = (np.einsum("ca,db->dcab", I, I) + np.einsum("cb,da->dcab", I, I)
          - 2.0 * np.einsum("d,ca,b->dcab", e, I, e)
          - 2.0 * np.einsum("d,cb,a->dcab", e, I, e)
          - 2.0 * (np.einsum("da,b,c->dcab", I, e, e)
                   + np.einsum("db,a,c->dcab", I, e, e)
                   + np.einsum("dc,a,b->dcab", I, e, e))
          + 8.0 * np.einsum("d,c,a,b->dcab", e, e, e, e))
    out = {"I": I, "e": e, "E": E, "U1": U1, "U2": U2,
           "dI": np.einsum("c,ab->cab", e, I),
           "dE": np.einsum("c,ab->cab", e, E),
           "Icd_I": np.einsum("dc,ab->dcab", I, I),
           "ee_I": np.einsum("d,c,ab->dcab", e, e, I),
           "Icd_E": np.einsum("dc,ab->dcab", I, E),
           "ee_E": np.einsum("d,c,ab->dcab", e, e, E),
           "eU1": np.einsum("c,dab->cdab", e, U1)}
    _IDX_CACHE[n] = out
    return out


def _sym_fields(n, r, beta, gamma, d1b, d1g, d2b=None, d2g=None):
    """Value / first / second Cartesian derivatives of the symmetric field
    S_ab = beta(r) delta_ab + gamma(r) x_a x_b / r^2 at the point r e1.

    Returns (S, DS, DDS) with DS[c,a,b] = d_c S_ab, DDS[d,c,a,b]; the second
    derivative block is skipped when d2b is None.
    """
    ix = _idx(n)
    S = beta[:, None, None] * ix["I"] + gamma[:, None, None] * ix["E"]
    DS = (d1b[:, None, None, None] * ix["dI"]
          + d1g[:, None, None, None] * ix["dE"]
          + (gamma / r)[:, None, None, None] * ix["U1"])
    if d2b is None:
        return S, DS, None
    sh = (slice(None), None, None, None, None)
    DDS = (d2b[sh] * ix["ee_I"] + (d1b / r)[sh] * (ix["Icd_I"] - ix["ee_I"])
           + d2g[sh] * ix["ee_E"] + (d1g / r)[sh] * (ix["Icd_E"] - ix["ee_E"])
           + (d1g / r)[sh] * (ix["eU1"]
                              + np.einsum("cdab->dcab", ix["eU1"]))
           + (gamma / r ** 2)[sh] * ix["U2"])
    return S, DS, DDS


def _metric_point(metric, second=False):
    """(m, minv, Dm, DDm) of a RadialMetric at the axis points."""
    grid = metric.grid
    r = grid.r
    A, B = metric.A, metric.B
    dA, dB = metric.dA(1), metric.dB(1)
    if second:
        ddA, ddB = metric.dA(2), metric.dB(2)
        m, Dm, DDm = _sym_fields(metric.n, r, B, A - B, dB, dA - dB,
                                 ddB, ddA - ddB)
    else:
        m, Dm, DDm = _sym_fields(metric.n, r, B, A - B, dB, dA - dB)
    ix = _idx(metric.n)
    minv = (1.0 / B)[:, None, None] * ix["I"] \
        + (1.0 / A - 1.0 / B)[:, None, None] * ix["E"]
    return m, minv, Dm, DDm


def _christoffel(minv, Dm):
    low = 0.5 * (np.einsum("Nalb->Nlab", Dm) + np.einsum("Nbla->Nlab", Dm)
                 - Dm)
    return np.einsum("Nkl,Nlab->Nkab", minv, low)


def _dchristoffel(minv, Dm, DDm):
    """DG[d,k,a,b] = d_d Gamma^k_ab."""
    dminv = -np.einsum("Nka,Nlb,Ndab->Ndkl", minv, minv, Dm)
    low = 0.5 * (np.einsum("Nalb->Nlab", Dm) + np.einsum("Nbla->Nlab", Dm)
                 - Dm)
    dlow = 0.5 * (np.einsum("Ndalb->Ndlab", DDm) + np.einsum("Ndbla->Ndlab", DDm)
                  - DDm)
    return (np.einsum("Ndkl,Nlab->Ndkab", dminv, low)
            + np.einsum("Nkl,Ndlab->Ndkab", minv, dlow))


def _riemann_lower(m, G, DG):
    """R[a,b,c,d] = m_ae (d_c G^e_db - d_d G^e_cb + G^e_cf G^f_db - G^e_df G^f_cb)."""
    up = (np.einsum("Ncedb->Nebcd", DG) - np.einsum("Ndecb->Nebcd", DG)
          + np.einsum("Necf,Nfdb->Nebcd", G, G)
          - np.einsum("Nedf,Nfcb->Nebcd", G, G))
    return np.einsum("Nae,Nebcd->Nabcd", m, up)


def deturck_vector(g, h):
    """Radial contravariant component of W^k = g^{pq}(Gamma^k_pq - Gamma~^k_pq)."""
    if g.grid is not h.grid and not np.array_equal(g.grid.r, h.grid.r):
        raise ValueError("metrics must share a grid")
    _, ginv, Dg, _ = _metric_point(g)
    _, hinv, Dh, _ = _metric_point(h)
    Gg = _christoffel(ginv, Dg)
    Gh = _christoffel(hinv, Dh)
    W = np.einsum("Npq,Nkpq->Nk", ginv, Gg - Gh)
    return W[:, 0]


def eta_rhs(h, eta_A, eta_B, freeze_outer=2, freeze_inner=0):
    """Time derivative of (eta_A, eta_B) under the background-gauged flow.

    Full tensor right-hand side: g^{cd} nabla_c nabla_d eta_ab, the two
    curvature terms of the background, and the quadratic gradient terms with
    coefficients (1/2)(1, +2, -2, -4); nabla is the h-connection.
    """
    grid = h.grid
    n = h.n
    r = grid.r
    A = h.A + eta_A
    B = h.B + eta_B
    if np.any(A <= 0) or np.any(B <= 0):
        raise FlowAbort("metric positivity lost")

    g_metric = RadialMetric(grid, n, A, B, h.delta)
    hm, hinv, Dh, DDh = _metric_point(h, second=True)
    Gh = _christoffel(hinv, Dh)
    DGh = _dchristoffel(hinv, Dh, DDh)
    Rh = _riemann_lower(hm, Gh, DGh)

    gm, ginv, _, _ = _metric_point(g_metric)

    db = grid.deriv(eta_B, 1, parity=True)
    dg_ = grid.deriv(eta_A - eta_B, 1, parity=True)
    ddb = grid.deriv(eta_B, 2, parity=True)
    ddg = grid.deriv(eta_A - eta_B, 2, parity=True)
    eta, Deta, DDeta = _sym_fields(n, r, eta_B, eta_A - eta_B, db, dg_, ddb, ddg)

    # first and second h-covariant derivatives of eta
    C = (Deta - np.einsum("Neca,Neb->Ncab", Gh, eta)
         - np.einsum("Necb,Nae->Ncab", Gh, eta))
    DC = (DDeta
          - np.einsum("Ndeca,Neb->Ndcab", DGh, eta)
          - np.einsum("Neca,Ndeb->Ndcab", Gh, Deta)
          - np.einsum("Ndecb,Nae->Ndcab", DGh, eta)
          - np.einsum("Necb,Ndae->Ndcab", Gh, Deta))
    CC = (DC - np.einsum("Nedc,Neab->Ndcab", Gh, C)
          - np.einsum("Neda,Nceb->Ndcab", Gh, C)
          - np.einsum("Nedb,Ncae->Ndcab", Gh, C))

    lap = np.einsum("Ncd,Ndcab->Nab", ginv, CC)
    curv = np.einsum("Ncd,Nap,Npq,Nbcqd->Nab", ginv, gm, hinv, Rh)
    curv = curv + np.einsum("Nab->Nba", curv)
    quad = 0.5 * (np.einsum("Ncd,Npq,Napc,Nbqd->Nab", ginv, ginv, C, C)
                  + 2.0 * np.einsum("Ncd,Npq,Ncap,Nqbd->Nab", ginv, ginv, C, C)
                  - 2.0 * np.einsum("Ncd,Npq,Ncap,Ndbq->Nab", ginv, ginv, C, C)
                  - 4.0 * np.einsum("Ncd,Npq,Napc,Ndbq->Nab", ginv, ginv, C, C))
    rhs = lap - curv + quad

    out_A = rhs[:, 0, 0].copy()
    out_B = rhs[:, 1, 1].copy()
    if freeze_outer > 0:
        out_A[-freeze_outer:] = 0.0
        out_B[-freeze_outer:] = 0.0
    if freeze_inner > 0:
        out_A[:freeze_inner] = 0.0
        out_B[:freeze_inner] = 0.0
    return out_A, out_B


def flow_rhs_oracle(g, h):
    """Independent closed-form route: dt g = -2 Ric(g) + Lie_W g in the
    warped-product reduction.  Returns (dt A, dt B)."""
    grid = g.grid
    r = grid.r
    m = g.n - 1
    phi, f1, f2 = _phi_derivs(g)
    W = deturck_vector(g, h)
    dW = grid.deriv(W, 1, parity=False)
    dA = g.dA(1)
    dBr2 = grid.deriv(g.B * r ** 2, 1, parity=False)
    dt_A = 2.0 * g.A * m * f2 / phi + W * dA + 2.0 * g.A * dW
    dt_Br2 = -2.0 * (-phi * f2 + (m - 1) * (1.0 - f1 ** 2)) + W * dBr2
    return dt_A, dt_Br2 / r ** 2


# -- time stepping ----------------------------------------------------------

@dataclass
class FlowConfig:
    T_final: float
    cfl: float = 0.2
    monitor_every: int = 10     # snapshot cadence, in accepted steps
    K_target: float = 10.0
    fairness: float = 1.1       # background must stay this fair to g(t)
    freeze_outer: int = 2
    freeze_inner: int = None    # None: 2 on excised grids, 0 when r reaches 0

    def __post_init__(self):
        if self.T_final <= 0:
            raise ValueError("T_final must be positive")
        if not 0 < self.cfl <= 0.5:
            raise ValueError("cfl must lie in (0, 0.5]")


@dataclass
class FlowState:
    t: float
    metric: RadialMetric
    h: RadialMetric
    eta_A: np.ndarray
    eta_B: np.ndarray
    W: np.ndarray
    diagnostics: dict = field(default_factory=dict)


@dataclass
class FlowTrajectory:
    snapshots: list
    dt_history: list
    h: RadialMetric
    config: FlowConfig

    def times(self):
        return np.array([s.t for s in self.snapshots])

    def state_at(self, t):
        i = int(np.argmin(np.abs(self.times() - t)))
        return self.snapshots[i]

    def dump(self, fh):
        fh.write("t,r,A,B,R,W\n")
        for s in self.snapshots:
            R = scalar_curvature(s.metric)
            for j, r in enumerate(s.metric.grid.r):
                fh.write(f"{s.t:.12g},{r:.12g},{s.metric.A[j]:.12g},"
                         f"{s.metric.B[j]:.12g},{R[j]:.12g},{s.W[j]:.12g}\n")


def stable_dt(grid, A, B, n, cfl):
    return cfl * grid.dr_min ** 2 * min(float(np.min(A)), float(np.min(B))) / (2 * n)


def h_flow_step(h, eta_A, eta_B, dt, freeze_outer=2, freeze_inner=0):
    """One Heun (RK2) step of the eta evolution."""
    kA1, kB1 = eta_rhs(h, eta_A, eta_B, freeze_outer, freeze_inner)
    kA2, kB2 = eta_rhs(h, eta_A + dt * kA1, eta_B + dt * kB1,
                       freeze_outer, freeze_inner)
    return eta_A + 0.5 * dt * (kA1 + kA2), eta_B + 0.5 * dt * (kB1 + kB2)


def _snapshot(t, h, eta_A, eta_B, delta):
    g = RadialMetric(h.grid, h.n, h.A + eta_A, h.B + eta_B, delta)
    W = deturck_vector(g, h)
    w0, w1, w2 = eta_sup_norms(g, h, delta)
    diag = {"max_grad_eta": w1, "wnorm0": w0, "wnorm1": w1, "wnorm2": w2}
    return FlowState(t, g, h, eta_A.copy(), eta_B.copy(), W, diag)


def evolve(metric, h, config):
    """Method-of-lines integration of the gauged flow up to T_final.

    Requires a uniform grid (the CFL bound is a single number) and the
    background within the configured fairness of the initial metric.
    """
    grid = metric.grid
    if grid.spacing != "uniform":
        raise ValueError("flow integration requires a uniform grid")
    if not np.array_equal(grid.r, h.grid.r):
        raise ValueError("metric and background must share a grid")
    ok, rng = is_delta_fair(h, metric, config.fairness)
    if not ok:
        raise FlowAbort(f"background not {config.fairness}-fair: ratios {rng}")

    freeze_inner = config.freeze_inner
    if freeze_inner is None:
        # excised inner boundary: no center symmetry, hold the edge fixed
        freeze_inner = 0 if grid.r[0] < grid.dr_min else 2

    eta_A = metric.A - h.A
    eta_B = metric.B - h.B
    t = 0.0
    snapshots = [_snapshot(t, h, eta_A, eta_B, metric.delta)]
    dts = []
    step = 0
    while t < config.T_final - 1e-15:
        dt = min(stable_dt(grid, h.A + eta_A, h.B + eta_B, h.n, config.cfl),
                 config.T_final - t)
        eta_A, eta_B = h_flow_step(h, eta_A, eta_B, dt, config.freeze_outer,
                                   freeze_inner)
        if np.any(~np.isfinite(eta_A)) or np.any(~np.isfinite(eta_B)):
            raise FlowAbort(f"NaN detected at t={t:.6g}")
        t += dt
        step += 1
        dts.append(dt)
        if step % config.monitor_every == 0 or t >= config.T_final - 1e-15:
            snap = _snapshot(t, h, eta_A, eta_B, metric.delta)
            ok, rng = is_delta_fair(h, snap.metric, 2 * config.fairness - 1)
            if not ok:
                raise FlowAbort(f"fairness lost at t={t:.6g}: ratios {rng}")
            snapshots.append(snap)
    return FlowTrajectory(snapshots, dts, h, config)


# -- comparisons and diagnostics -------------------------------------------

def scalar_evolution_residual(trajectory, include_advection=True):
    """Pointwise residual of dR/dt = Lap R + 2|Ric|^2 + W dR/dr across
    consecutive snapshot triples.  Returns array (len-2, num_nodes)."""
    snaps = trajectory.snapshots
    if len(snaps) < 3:
        raise ValueError("need at least 3 snapshots")
    grid = snaps[0].metric.grid
    n = snaps[0].metric.n
    r = grid.r
    R_all = [scalar_curvature(s.metric) for s in snaps]
    out = []
    for i in range(1, len(snaps) - 1):
        s = snaps[i]
        dRdt = (R_all[i + 1] - R_all[i - 1]) / (snaps[i + 1].t - snaps[i - 1].t)
        R = R_all[i]
        dR = grid.deriv(R, 1, parity=True)
        dens = np.sqrt(s.metric.A * s.metric.B ** (n - 1)) * r ** (n - 1)
        lap = grid.deriv(dens / s.metric.A * dR, 1, parity=False) / dens
        resid = dRdt - lap - 2.0 * ricci_norm_sq(s.metric)
        if include_advection:
            resid = resid - s.W * dR
        out.append(resid)
    return np.array(out)


@dataclass
class DiffeoMap:
    """Radial maps phi_t(r) at the snapshot times, phi_T = identity."""
    grid: RadialGrid
    times: np.ndarray
    maps: list  # one array per time, on grid.r

    def __post_init__(self):
        for phi in self.maps:
            if np.any(np.diff(phi) <= 0):
                raise FlowAbort("diffeomorphism lost monotonicity")

    def at_time(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        return self.maps[i]


def extract_diffeomorphism(trajectory, substeps=8):
    """Integrate d phi / dt = W(phi, t) backward from T with RK4; W cubic in
    r, linear in t between snapshots."""
    snaps = trajectory.snapshots
    grid = snaps[0].metric.grid
    times = trajectory.times()
    splines = [CubicSpline(grid.r, s.W) for s in snaps]

    def Wfun(x, t):
        j = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 2))
        t0, t1 = times[j], times[j + 1]
        lam = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        return (1 - lam) * splines[j](x) + lam * splines[j + 1](x)

    phi = grid.r.copy()
    maps = [None] * len(snaps)
    maps[-1] = phi.copy()
    for j in range(len(snaps) - 1, 0, -1):
        t_hi, t_lo = times[j], times[j - 1]
        dt = (t_lo - t_hi) / substeps  # negative
        t = t_hi
        for _ in range(substeps):
            k1 = Wfun(phi, t)
            k2 = Wfun(phi + 0.5 * dt * k1, t + 0.5 * dt)
            k3 = Wfun(phi + 0.5 * dt * k2, t + 0.5 * dt)
            k4 = Wfun(phi + dt * k3, t + dt)
            phi = phi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += dt
        maps[j - 1] = phi.copy()
    return DiffeoMap(grid, times, maps)


def pullback(metric, phi):
    """Pullback of a radial metric by the radial map phi (sampled on the
    metric's grid): A -> (phi')^2 A(phi), B -> (phi/r)^2 B(phi)."""
    grid = metric.grid
    phi = np.asarray(phi, dtype=float)
    dr = grid.dr_min
    if np.any(phi < grid.r[0] - dr) or np.any(phi > grid.r[-1] + dr):
        raise ValueError("map leaves the grid; cannot interpolate")
    dphi = grid.deriv(phi, 1, parity=False)
    phi = np.clip(phi, grid.r[0], grid.r[-1])
    sA = CubicSpline(grid.r, metric.A)
    sB = CubicSpline(grid.r, metric.B)
    A = dphi ** 2 * sA(phi)
    B = (phi / grid.r) ** 2 * sB(phi)
    return RadialMetric(grid, metric.n, A, B, metric.delta)


def taylor_consistency_check(phi, g_t, g_T):
    """Sup-norm residual of the radial second-derivative identity
    phi'' = Gamma^r_rr(g_t) phi' - Gamma^r_rr(g_T)(phi) (phi')^2."""
    grid = g_t.grid
    phi = np.asarray(phi, dtype=float)
    dphi = grid.deriv(phi, 1, parity=False)
    ddphi = grid.deriv(phi, 2, parity=False)
    gam_t = g_t.dA(1) / (2.0 * g_t.A)
    sA = CubicSpline(grid.r, g_T.A)
    gam_T = sA(phi, 1) / (2.0 * sA(phi))
    resid = ddphi - gam_t * dphi + gam_T * dphi ** 2
    inner = slice(3, -3)
    return float(np.max(np.abs(resid[inner])))
