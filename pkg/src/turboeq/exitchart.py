"""EXIT-chart machinery: J-function, mutual-information estimation, detector and
LDPC component curves, combined charts, decoding trajectories, cubic modelling and
EXIT-matched degree-distribution search.
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .ldpc import DegreeDistribution, design_rate

SIGMA_MAX = 10.0
_SIGMA_SMALL = 0.1
_BLEND = (1.5, 1.8)

# two-piece closed-form fit of the consistent-Gaussian mutual information
_A1, _B1, _C1 = -0.0421061, 0.209252, -0.00640081
_A2, _B2, _C2, _D2 = 0.00181491, -0.142675, -0.0822054, 0.0549608


def _j_poly(s):
    return _A1 * s**3 + _B1 * s**2 + _C1 * s


def _j_tail_exp(s):
    return np.exp(_A2 * s**3 + _B2 * s**2 + _C2 * s + _D2)


def _blend_weight(s):
    u = np.clip((s - _BLEND[0]) / (_BLEND[1] - _BLEND[0]), 0, 1)
    return u * u * (3 - 2 * u), 6 * u * (1 - u) / (_BLEND[1] - _BLEND[0])


def j_function(sigma):
    """Mutual information between a bit and its consistent Gaussian LLR N(s^2/2, s^2).

    Two-piece closed form. The published pieces disagree by ~6e-4 at their knee, so
    they are joined with a smoothstep over s in [1.5, 1.8]; below s = 0.1 the cubic
    (which dips negative near 0) is replaced by the exact ``c s^2`` shape.
    """
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise ValueError("sigma must be non-negative")
    sc = np.minimum(s, SIGMA_MAX)
    w, _ = _blend_weight(sc)
    low = _j_poly(_SIGMA_SMALL) * (sc / _SIGMA_SMALL) ** 2
    body = (1 - w) * _j_poly(sc) + w * (1 - _j_tail_exp(sc))
    out = np.where(s < _SIGMA_SMALL, low, np.where(s < SIGMA_MAX, body, 1.0))
    return out if out.ndim else float(out)


def _j_derivative(s):
    s = np.minimum(np.asarray(s, dtype=float), SIGMA_MAX)
    w, dw = _blend_weight(s)
    dpoly = 3 * _A1 * s**2 + 2 * _B1 * s + _C1
    tail = _j_tail_exp(s)
    dtail = -tail * (3 * _A2 * s**2 + 2 * _B2 * s + _C2)
    body = (1 - w) * dpoly + w * dtail + dw * ((1 - tail) - _j_poly(s))
    low = 2 * _j_poly(_SIGMA_SMALL) * s / _SIGMA_SMALL**2
    return np.where(s < _SIGMA_SMALL, low, np.where(s < SIGMA_MAX, body, 0.0))


_S_TABLE = np.linspace(0, SIGMA_MAX, 100_001)
_J_TABLE = j_function(_S_TABLE)


def j_inverse(I, newton_steps: int = 2):
    """Numeric inverse of ``j_function`` (table lookup, Newton polish); inf for I >= 1."""
    I = np.asarray(I, dtype=float)
    if np.any((I < 0) | np.isnan(I)):
        raise ValueError("mutual information must be in [0, 1]")
    s = np.interp(I, _J_TABLE, _S_TABLE)
    for _ in range(newton_steps):
        d = _j_derivative(s)
        safe = d > 1e-12
        step = np.where(safe, (j_function(s) - I) / np.where(safe, d, 1.0), 0.0)
        s = np.clip(s - step, 0.0, SIGMA_MAX)
    out = np.where(I >= 1, np.inf, np.where(I <= 0, 0.0, s))
    return out if out.ndim else float(out)


def j_inverse_closed_form(I):
    """The companion two-piece closed-form inverse (less exact than ``j_inverse``)."""
    I = np.asarray(I, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(
            I <= 0.3646,
            1.09542 * I**2 + 0.214217 * I + 2.33727 * np.sqrt(np.clip(I, 0, None)),
            -0.706692 * np.log(0.386013 * (1 - I)) + 1.75017 * I,
        )
    return np.where(I >= 1, np.inf, out)


def j_function_quadrature(sigma: float, points: int = 200) -> float:
    """Gauss-Hermite evaluation of the same mutual information (reference oracle)."""
    if sigma == 0:
        return 0.0
    x, w = np.polynomial.hermite.hermgauss(points)
    llr = sigma**2 / 2 + sigma * np.sqrt(2) * x
    return float(1 - np.sum(w * np.logaddexp(0, -llr)) / np.sqrt(np.pi) / np.log(2))


def mi_from_llrs(llrs, bits) -> float:
    """``1 - E[log2(1 + exp(-(1-2b) L))]`` clamped to [0, 1]."""
    llrs = np.asarray(llrs, dtype=float).ravel()
    bits = np.asarray(bits).ravel()
    if llrs.size == 0:
        raise ValueError("empty LLR sample")
    if llrs.size != bits.size:
        raise ValueError("LLR and bit counts differ")
    signed = (1 - 2 * bits.astype(float)) * llrs
    val = 1 - np.mean(np.logaddexp(0, -signed)) / np.log(2)
    return float(min(max(val, 0.0), 1.0))


# --- curves --------------------------------------------------------------------------


@dataclass
class ExitCurve:
    I_in: np.ndarray
    I_out: np.ndarray
    n_samples: np.ndarray | None = None
    seed: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.I_in = np.asarray(self.I_in, dtype=float)
        self.I_out = np.asarray(self.I_out, dtype=float)
        if self.I_in.shape != self.I_out.shape:
            raise ValueError("I_in and I_out differ in length")
        if np.any(np.diff(self.I_in) <= 0):
            raise ValueError("I_in must be strictly increasing")
        for arr in (self.I_in, self.I_out):
            if np.any((arr < 0) | (arr > 1)):
                raise ValueError("mutual information outside [0, 1]")
        n = len(self.I_in)
        self.n_samples = np.zeros(n, int) if self.n_samples is None else np.asarray(self.n_samples, int)
        self.seed = np.zeros(n, int) if self.seed is None else np.asarray(self.seed, int)

    def __call__(self, I):
        """Piecewise-linear evaluation, clamped at the sampled end points."""
        I = np.asarray(I, dtype=float)
        if np.any((I < self.I_in[0] - 1e-12) | (I > self.I_in[-1] + 1e-12)):
            warnings.warn("EXIT curve evaluated outside its measured range; clamping", stacklevel=2)
        return np.interp(I, self.I_in, self.I_out)

    def shifted(self, delta: float) -> "ExitCurve":
        return ExitCurve(self.I_in, np.clip(self.I_out + delta, 0, 1), self.n_samples, self.seed, dict(self.meta))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["I_in", "I_out", "n_samples", "seed"])
            for row in zip(self.I_in, self.I_out, self.n_samples, self.seed):
                w.writerow([repr(float(row[0])), repr(float(row[1])), int(row[2]), int(row[3])])

    @classmethod
    def from_csv(cls, path) -> "ExitCurve":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        col = lambda k, t: np.array([t(r[k]) for r in rows])
        return cls(col("I_in", float), col("I_out", float), col("n_samples", int), col("seed", int))


def measure_detector_exit(model, channel_dataset, I_in_grid=np.linspace(0, 1, 11), seeds=(0,)) -> ExitCurve:
    """Monte-Carlo EXIT curve of a trained turbo detector.

    For every grid value, consistent Gaussian a-priori LLRs of that quality are fed to
    the network and the mutual information of its EXT output is averaged over seeds.
    ``channel_dataset`` is a ``TrainingData`` (window reals plus per-symbol bits).
    """
    from .neural import AprSynthSpec, predict_llrs, synthesize_apr

    I_out, counts, first_seed = [], [], []
    for k, I in enumerate(np.asarray(I_in_grid, dtype=float)):
        vals = []
        for s in seeds:
            apr = synthesize_apr(channel_dataset.bits, AprSynthSpec(float(I), int(s) * 1000 + k))
            ext, _ = predict_llrs(model, channel_dataset.reals, apr)
            vals.append(mi_from_llrs(ext, channel_dataset.bits))
        I_out.append(float(np.clip(np.mean(vals), 0, 1)))
        counts.append(channel_dataset.bits.size * len(seeds))
        first_seed.append(int(seeds[0]))
    return ExitCurve(np.asarray(I_in_grid, float), np.array(I_out), np.array(counts), np.array(first_seed), {"source": "measured"})


@dataclass
class CubicModel:
    coefficients: np.ndarray  # c0..c3, ascending powers
    max_residual: float = 0.0

    def __call__(self, I):
        I = np.asarray(I, dtype=float)
        return np.clip(np.polynomial.polynomial.polyval(I, self.coefficients), 0.0, 1.0)


def fit_polynomial(curve: ExitCurve, degree: int = 3) -> CubicModel:
    x, y = curve.I_in, curve.I_out
    if len(np.unique(x)) <= degree:
        raise np.linalg.LinAlgError(f"need at least {degree + 1} distinct samples")
    V = np.vander(x, degree + 1, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(V, y, rcond=None)
    if rank < degree + 1:
        raise np.linalg.LinAlgError("rank-deficient polynomial fit")
    resid = float(np.max(np.abs(V @ coef - y)))
    return CubicModel(coef, resid)


def fit_cubic(curve: ExitCurve) -> CubicModel:
    """Least-squares cubic over the sampled points; ``max_residual`` is reported."""
    return fit_polynomial(curve, 3)


def vnd_curve(dv, I_A, I_ch):
    """Variable-node extrinsic MI for degree ``dv`` given check-side and channel MI."""
    if np.any(np.asarray(dv) < 1):
        raise ValueError("degree must be >= 1")
    sa = j_inverse(np.clip(I_A, 0, 1))
    sc = j_inverse(np.clip(I_ch, 0, 1))
    dv = np.asarray(dv)
    with np.errstate(invalid="ignore"):
        from_checks = np.where(dv == 1, 0.0, (dv - 1) * np.square(sa))
    return j_function(np.sqrt(from_checks + np.square(sc)))


def cnd_curve(dc, I_A):
    """Check-node extrinsic MI (duality approximation)."""
    if np.any(np.asarray(dc) < 1):
        raise ValueError("degree must be >= 1")
    s = j_inverse(np.clip(1 - np.asarray(I_A, dtype=float), 0, 1))
    with np.errstate(invalid="ignore"):
        arg = np.sqrt(np.asarray(dc) - 1) * s
    arg = np.where(np.isnan(arg), 0.0, arg)  # dc=1 with s=inf
    return 1 - j_function(arg)


def irregular_cnd_curve(dist: DegreeDistribution, I_A):
    return sum(w * cnd_curve(d, I_A) for d, w in dist.edge_fractions("chk"))


def irregular_vnd_curve(dist: DegreeDistribution, I_A, I_ch):
    return sum(w * vnd_curve(d, I_A, I_ch) for d, w in dist.edge_fractions("var"))


def _det_callable(det):
    return det if callable(det) else (lambda I: np.full_like(np.asarray(I, float), float(det)))


def combined_vnd(det, var_degrees, I_A, channel_point: float | None = None):
    """Extrinsic MI of the variable nodes when each node also consults the detector.

    The detector sees the node-fraction average of ``J(sqrt(d) sigma_A)`` (all check
    messages of a node) as its a-priori MI and returns extrinsic MI that acts as the
    channel observation for every edge. With ``channel_point`` set, the detector is
    run once at that a-priori MI instead (no feedback).
    """
    det = _det_callable(det)
    I_A = np.asarray(I_A, dtype=float)
    sa = j_inverse(np.clip(I_A, 0, 1))
    sa = np.where(np.isinf(sa), SIGMA_MAX * 10, sa)
    total = sum(d * f for d, f in var_degrees)
    if channel_point is None:
        det_in = sum(float(f) * j_function(np.sqrt(d) * sa) for d, f in var_degrees)
    else:
        det_in = np.full_like(I_A, channel_point)
    det_out = np.clip(det(np.clip(det_in, 0, 1)), 0, 1 - 1e-12)
    sd = j_inverse(det_out)
    out = sum(
        float(d * f / total) * j_function(np.sqrt((d - 1) * sa**2 + sd**2)) for d, f in var_degrees
    )
    return np.clip(out, 0, 1)


def combined_chart(det, dist: DegreeDistribution, channel_point: float | None = None, grid: int = 101):
    """(combined VND curve, CND curve) sampled on a shared I_A grid."""
    if isinstance(det, ExitCurve) and (det.I_in[0] > 0 or det.I_in[-1] < 1):
        warnings.warn("detector curve does not span [0, 1]; clamping extrapolation", stacklevel=2)
        det = ExitCurve(det.I_in, det.I_out, det.n_samples, det.seed, det.meta)
    x = np.linspace(0, 1, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v = combined_vnd(det, dist.var_degrees, x, channel_point)
    c = irregular_cnd_curve(dist, x)
    return ExitCurve(x, v, meta={"kind": "vnd+det"}), ExitCurve(x, np.clip(c, 0, 1), meta={"kind": "cnd"})


@dataclass
class Trajectory:
    points: list[tuple[float, float]]
    converged: bool
    final_I: float


def trajectory(vnd: ExitCurve, cnd: ExitCurve, max_steps: int = 200, eps: float = 1e-3) -> Trajectory:
    """Staircase between the VND curve and the inverted CND curve, starting at 0."""
    x = 0.0
    pts = [(0.0, 0.0)]
    converged = False
    for _ in range(max_steps):
        v = float(vnd(x))
        pts.append((x, v))
        if v >= 1 - eps:
            converged = True
            x = v
            break
        c = float(cnd(v))
        pts.append((c, v))
        if c >= 1 - eps:
            converged = True
            x = c
            break
        if c <= x + 1e-9:
            x = max(c, x)
            break
        x = c
    return Trajectory(pts, converged, x)


# --- degree optimization -----------------------------------------------------------


def _cnd_concentrated(mean_dc, s_y):
    """CND extrinsic for a check-concentrated mixture with mean node degree ``mean_dc``.

    ``s_y`` holds ``J^-1(1 - I_A)``; broadcasts over leading axes of ``mean_dc``.
    """
    lo = np.floor(mean_dc)
    f_hi = mean_dc - lo
    w_hi = f_hi * (lo + 1) / mean_dc  # edge perspective
    s_y = np.where(np.isinf(s_y), SIGMA_MAX * 10, s_y)
    c_lo = 1 - j_function(np.sqrt(lo - 1) * s_y)
    c_hi = 1 - j_function(np.sqrt(lo) * s_y)
    return (1 - w_hi) * c_lo + w_hi * c_hi


def _tunnel_from_sy(s_y, x, mean_dc, delta, eps):
    mean_dc = np.asarray(mean_dc, dtype=float)[..., None]
    c = _cnd_concentrated(mean_dc, s_y)
    limit = _cnd_concentrated(mean_dc, np.full_like(x, j_inverse(delta + eps)))
    return np.all((c >= x) | (x > limit), axis=-1)


def tunnel_open(vnd_values, x, mean_dc, delta: float = 0.005, eps: float = 1e-3):
    """Vertical-gap test ``cnd(vnd(x) - delta) >= x`` on every grid point that the CND
    curve can still improve on. Vectorized over leading axes of ``vnd_values``/``mean_dc``."""
    s_y = j_inverse(1 - np.clip(np.asarray(vnd_values) - delta, 0, 1))
    return _tunnel_from_sy(s_y, x, mean_dc, delta, eps)


@dataclass
class DegreeSearchResult:
    dist: DegreeDistribution | None
    rate: float
    feasible: bool
    evaluated: int
    verified: bool = False
    binding: str = ""
    table: list = field(default_factory=list)


def max_check_degree(det, var_degrees, dc_range=(3, 60), channel_point=None, delta=0.005, grid=101, iters=30):
    """Largest check-concentrated mean degree keeping the tunnel open (nan if none)."""
    x = np.linspace(0, 1, grid)
    v = combined_vnd(det, var_degrees, x, channel_point)
    return _bisect_dc(v[None, :], x, dc_range, delta, iters)[0]


def _bisect_dc(v, x, dc_range, delta, iters, eps=1e-3):
    s_y = j_inverse(1 - np.clip(v - delta, 0, 1))
    lo = np.full(v.shape[0], float(dc_range[0]))
    hi = np.full(v.shape[0], float(dc_range[1]))
    ok_lo = _tunnel_from_sy(s_y, x, lo, delta, eps)
    ok_hi = _tunnel_from_sy(s_y, x, hi, delta, eps)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = _tunnel_from_sy(s_y, x, mid, delta, eps)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return np.where(ok_hi, hi, np.where(ok_lo, lo, np.nan))


def _simplex(step: float):
    k = int(round(1 / step))
    for a in range(1, k - 1):
        for b in range(1, k - a):
            yield a / k, b / k, (k - a - b) / k


def optimize_degrees(
    det,
    dc_range=(3, 60),
    degree_triples=None,
    channel_point: float | None = None,
    delta: float = 0.005,
    fraction_step: float = 0.025,
    include=(),
    grid: int = 101,
) -> DegreeSearchResult:
    """Search three-degree variable profiles ``(2, d2, d3)`` and their two free node
    fractions; for each, the largest check-concentrated mean degree whose combined
    chart keeps a ``delta`` tunnel is found by bisection. The profile with the highest
    design rate wins.

    ``include`` adds extra variable profiles (e.g. a baseline) to the candidate set.
    """
    if degree_triples is None:
        degree_triples = [(2, a, b) for a, b in itertools.product(range(3, 16), range(16, 41))]
    det = _det_callable(det)
    x = np.linspace(0, 1, grid)
    fracs = np.array(list(_simplex(fraction_step)))
    sa = j_inverse(x)
    sa = np.where(np.isinf(sa), SIGMA_MAX * 10, sa)
    best_rate, best_var, best_dc = -np.inf, None, None
    evaluated = 0
    table = []

    def consider(var_sets, dcs):
        nonlocal best_rate, best_var, best_dc
        for var, dc in zip(var_sets, dcs):
            if np.isnan(dc):
                continue
            r = 1 - sum(d * f for d, f in var) / dc
            if r > 0 and r > best_rate + 1e-12:
                best_rate, best_var, best_dc = r, var, dc

    for triple in degree_triples:
        d = np.array(triple, dtype=float)
        if channel_point is None:
            det_in = fracs @ j_function(np.sqrt(d)[:, None] * sa[None, :])
        else:
            det_in = np.full((len(fracs), grid), channel_point)
        sd = j_inverse(np.clip(det(np.clip(det_in, 0, 1)), 0, 1 - 1e-12))
        edge_w = fracs * d / (fracs @ d)[:, None]
        V = np.zeros((len(fracs), grid))
        for i in range(3):
            V += edge_w[:, i : i + 1] * j_function(np.sqrt((d[i] - 1) * sa[None, :] ** 2 + sd**2))
        dcs = _bisect_dc(V, x, dc_range, delta, 30)
        evaluated += len(fracs)
        var_sets = [tuple((int(dd), float(f)) for dd, f in zip(triple, fr)) for fr in fracs]
        rates = np.where(np.isnan(dcs), -np.inf, 1 - (fracs @ d) / np.where(np.isnan(dcs), 1, dcs))
        j = int(np.argmax(rates))
        table.append((triple, float(rates[j]), tuple(fracs[j])))
        consider(var_sets, dcs)
    for var in include:
        var = tuple((int(dd), float(f)) for dd, f in var)
        dc = max_check_degree(det, var, dc_range, channel_point, delta, grid)
        evaluated += 1
        consider([var], [dc])

    if best_var is None:
        return DegreeSearchResult(None, 0.0, False, evaluated, table=table)
    dist = DegreeDistribution.check_concentrated(best_var, best_dc)
    rate = design_rate(dist)
    vnd, cnd = combined_chart(det, dist, channel_point, grid)
    verified = bool(tunnel_open(vnd.I_out[None, :], x, np.array([dist.mean_chk_degree]), delta)[0])
    verified = verified and trajectory(vnd, cnd).converged
    # degree choice binds when the best rates of different triples spread widely
    spread = [r for _, r, _ in table if np.isfinite(r)]
    binding = "degrees" if spread and max(spread) - min(spread) > 0.01 else "fractions"
    return DegreeSearchResult(dist, rate, True, evaluated, verified, binding, table)
