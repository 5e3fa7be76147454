"""Irregular LDPC codes: degree distributions, PEG construction with an
accumulator parity part, systematic encoding, flooding sum-product decoding, and
the outer-BCH threshold predicate.

LLR convention: positive means bit 0.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.sparse as sp

LLR_MAX = 30.0
CODE_FORMAT_VERSION = 1

# outer BCH[30832, 30592], d_min 33: union-bound threshold for 1e-15 output BER
BCH_N, BCH_K, BCH_DMIN = 30832, 30592, 33
BCH_RATE = 0.9922
BCH_INPUT_BER_THRESHOLD = 5e-5


class InfeasibleDistribution(ValueError):
    pass


@dataclass(frozen=True)
class DegreeDistribution:
    """Node-perspective variable and check degree fractions."""

    var_degrees: tuple[tuple[int, float], ...]
    chk_degrees: tuple[tuple[int, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "var_degrees", tuple((int(d), f) for d, f in self.var_degrees))
        object.__setattr__(self, "chk_degrees", tuple((int(d), f) for d, f in self.chk_degrees))
        for name, side in (("variable", self.var_degrees), ("check", self.chk_degrees)):
            if not side:
                raise ValueError(f"empty {name} degree list")
            if any(d < 2 for d, _ in side):
                raise ValueError(f"{name} degrees must be >= 2")
            if any(f <= 0 for _, f in side):
                raise ValueError(f"{name} fractions must be positive")
            if abs(float(sum(f for _, f in side)) - 1) > 1e-9:
                raise ValueError(f"{name} fractions must sum to 1")

    @property
    def mean_var_degree(self) -> float:
        return float(sum(d * f for d, f in self.var_degrees))

    @property
    def mean_chk_degree(self) -> float:
        return float(sum(d * f for d, f in self.chk_degrees))

    def edge_fractions(self, side: str = "var") -> list[tuple[int, float]]:
        """Edge-perspective weights (fraction of edges attached to each degree)."""
        degs = self.var_degrees if side == "var" else self.chk_degrees
        total = sum(d * f for d, f in degs)
        return [(d, float(d * f / total)) for d, f in degs]

    @classmethod
    def check_concentrated(cls, var_degrees, mean_chk_degree: float) -> "DegreeDistribution":
        """Variable side as given, checks on the two integers around ``mean_chk_degree``."""
        lo = int(np.floor(mean_chk_degree))
        frac_hi = mean_chk_degree - lo
        if frac_hi < 1e-12:
            chk = ((lo, 1.0),)
        else:
            chk = ((lo, 1 - frac_hi), (lo + 1, frac_hi))
        return cls(tuple(var_degrees), chk)

    def to_dict(self) -> dict:
        return {"var": [[d, float(f)] for d, f in self.var_degrees], "chk": [[d, float(f)] for d, f in self.chk_degrees]}

    @classmethod
    def from_dict(cls, d: dict) -> "DegreeDistribution":
        return cls(tuple(map(tuple, d["var"])), tuple(map(tuple, d["chk"])))


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**9)


def design_rate(dist: DegreeDistribution, exact: bool = False):
    """``1 - E[d_v] / E[d_c]`` with node-perspective means."""
    ev = sum(_exact(f) * d for d, f in dist.var_degrees)
    ec = sum(_exact(f) * d for d, f in dist.chk_degrees)
    if ec == 0:
        raise ZeroDivisionError("mean check degree is zero")
    r = 1 - ev / ec
    return r if exact else float(r)


# DVB-S2 normal-frame variable profiles quoted for rates 9/10 and 5/6
DVBS2_9_10 = DegreeDistribution(((2, Fraction(1, 10)), (3, Fraction(8, 10)), (4, Fraction(1, 10))), ((30, Fraction(1)),))
DVBS2_5_6 = DegreeDistribution(((2, Fraction(2, 12)), (3, Fraction(9, 12)), (13, Fraction(1, 12))), ((22, Fraction(1)),))
DVBS2_1_2 = DegreeDistribution(((2, Fraction(1, 2)), (3, Fraction(3, 10)), (8, Fraction(1, 5))), ((7, Fraction(1)),))
PRESETS = {"DVBS2_9_10": DVBS2_9_10, "DVBS2_5_6": DVBS2_5_6, "DVBS2_1_2": DVBS2_1_2}


# --- construction ------------------------------------------------------------------


@dataclass
class SparseParityCheck:
    """Parity-check matrix as adjacency lists.

    Columns ``[0, k)`` carry information bits, ``[k, n)`` parity bits. The parity part
    is lower triangular with unit diagonal (an accumulator plus optional extra edges
    below the sub-diagonal), so encoding is a sparse back-substitution.
    """

    n: int
    k: int
    cols: list[np.ndarray]
    seed: int | None = None
    dist: DegreeDistribution | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def rows(self) -> list[np.ndarray]:
        if "rows" not in self._cache:
            rows: list[list[int]] = [[] for _ in range(self.m)]
            for v, cs in enumerate(self.cols):
                for c in cs:
                    rows[c].append(v)
            self._cache["rows"] = [np.array(r, dtype=np.int64) for r in rows]
        return self._cache["rows"]

    @property
    def H(self) -> sp.csr_matrix:
        if "H" not in self._cache:
            var = np.concatenate([np.full(len(c), v) for v, c in enumerate(self.cols)])
            chk = np.concatenate(self.cols)
            self._cache["H"] = sp.csr_matrix((np.ones(len(var), np.uint8), (chk, var)), shape=(self.m, self.n))
        return self._cache["H"]

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(variable index, check index) per edge, ordered by variable."""
        if "edges" not in self._cache:
            var = np.concatenate([np.full(len(c), v, dtype=np.int64) for v, c in enumerate(self.cols)])
            chk = np.concatenate(self.cols).astype(np.int64)
            self._cache["edges"] = (var, chk)
        return self._cache["edges"]

    def var_degree_histogram(self) -> dict[int, int]:
        degs, counts = np.unique([len(c) for c in self.cols], return_counts=True)
        return dict(zip(degs.tolist(), counts.tolist()))

    def chk_degree_histogram(self) -> dict[int, int]:
        degs, counts = np.unique([len(r) for r in self.rows], return_counts=True)
        return dict(zip(degs.tolist(), counts.tolist()))

    def syndrome(self, words: np.ndarray) -> np.ndarray:
        words = np.atleast_2d(words)
        return ((self.H @ words.T.astype(np.int64)) % 2).T.astype(np.uint8)


def _class_counts(fracs: list[tuple[int, float]], total: int) -> dict[int, int]:
    """Largest-remainder rounding of ``fraction * total`` per degree."""
    raw = np.array([float(f) * total for _, f in fracs])
    counts = np.floor(raw).astype(int)
    for i in np.argsort(-(raw - counts))[: total - counts.sum()]:
        counts[i] += 1
    return {d: int(c) for (d, _), c in zip(fracs, counts)}


def construct_code(dist: DegreeDistribution, n: int, seed: int = 0, depth: int = 2) -> SparseParityCheck:
    """Progressive-edge-growth code honoring ``dist`` at block length ``n``.

    Parity columns form a lower-triangular accumulator; they take the lowest variable
    degrees available. ``depth`` bounds the breadth-first search used to keep new edges
    away from short cycles (depth 2 rules out 4-cycles whenever possible).
    """
    rng = np.random.default_rng(seed)
    var_counts = _class_counts(list(dist.var_degrees), n)
    degrees = np.concatenate([np.full(c, d) for d, c in sorted(var_counts.items())])
    n_edges = int(degrees.sum())
    m = int(round(n * (1 - design_rate(dist))))
    if not 0 < m < n:
        raise InfeasibleDistribution(f"distribution yields {m} checks at n={n}")
    k = n - m
    if max(d for d, _ in dist.var_degrees) > m:
        raise InfeasibleDistribution("variable degree exceeds the number of checks")

    # check targets: class counts, then spread the edge-count mismatch
    chk_counts = _class_counts(list(dist.chk_degrees), m)
    target = np.concatenate([np.full(c, d) for d, c in sorted(chk_counts.items())]).astype(np.int64)
    rng.shuffle(target)
    diff = n_edges - 1 - int(target.sum())  # the terminal accumulator column has degree 1
    step = 1 if diff > 0 else -1
    i = 0
    while diff:
        if step > 0 or target[i % m] > 2:
            target[i % m] += step
            diff -= step
        i += 1
    if target.min() < 2:
        raise InfeasibleDistribution("check degrees fall below 2 at this length")

    # lowest degrees go to parity columns, highest-degree parity columns come first
    parity_deg = np.sort(degrees[:m])[::-1]
    info_deg = degrees[m:]
    info_deg = info_deg[rng.permutation(k)]

    cols: list[list[int]] = [[] for _ in range(n)]
    rows: list[list[int]] = [[] for _ in range(m)]
    cap = target.copy()
    short_cycle_fallback = False

    def link(v, c):
        cols[v].append(c)
        rows[c].append(v)
        cap[c] -= 1

    for j in range(m):
        link(k + j, j)
        if j + 1 < m:
            link(k + j, j + 1)

    def neighbourhood(v):
        # checks within ``depth`` check-levels of v
        seen = set(cols[v])
        frontier = list(seen)
        for _ in range(depth - 1):
            nxt = []
            for c in frontier:
                for u in rows[c]:
                    for c2 in cols[u]:
                        if c2 not in seen:
                            seen.add(c2)
                            nxt.append(c2)
            frontier = nxt
        return seen

    def place(v, allowed_from=0):
        near = neighbourhood(v)
        mask = cap > 0
        mask[:allowed_from] = False
        if not mask.any():
            mask = np.ones(m, bool)
            mask[:allowed_from] = False
        blocked = np.zeros(m, bool)
        blocked[list(near)] = True
        choice = mask & ~blocked
        if not choice.any():
            nonlocal short_cycle_fallback
            short_cycle_fallback = True
            direct = np.zeros(m, bool)
            direct[cols[v]] = True
            choice = mask & ~direct
            if not choice.any():
                raise InfeasibleDistribution(f"no admissible check for column {v}")
        cand = np.flatnonzero(choice)
        best = cand[cap[cand] == cap[cand].max()]
        link(v, int(rng.choice(best)))

    # extra parity edges stay strictly below the sub-diagonal
    for j in range(m):
        for _ in range(int(parity_deg[j]) - 2):
            if j + 2 >= m:
                raise InfeasibleDistribution("parity column degree too large for its position")
            place(k + j, allowed_from=j + 2)
    for v in np.argsort(info_deg, kind="stable"):
        for _ in range(int(info_deg[v])):
            place(int(v))
    if short_cycle_fallback and depth >= 2:
        _break_four_cycles(cols, rows, k, rng)

    code = SparseParityCheck(n, k, [np.sort(np.array(c, dtype=np.int64)) for c in cols], seed, dist)
    return code


def _four_cycles_at(v, cols, rows) -> int:
    mine = set(cols[v])
    count = 0
    for u in {u for c in cols[v] for u in rows[c] if u != v}:
        shared = len(mine.intersection(cols[u]))
        count += shared * (shared - 1) // 2
    return count


def _break_four_cycles(cols, rows, k, rng, tries: int = 500, max_bad_fraction: float = 0.01) -> None:
    """Degree-preserving edge swaps between information columns that remove 4-cycles.

    Only isolated leftovers of the greedy placement are repaired: when more than
    ``max_bad_fraction`` of the columns sit on a 4-cycle the graph is too dense for
    girth 6 at this length and it is left as constructed. Swapping ``(v, c), (w, d)`` into ``(v, d), (w, c)`` keeps every variable and check
    degree. Any cycle created by a swap passes through ``v`` or ``w``, so checking
    those two columns is sufficient.
    """

    def swap(v, c, w, d):
        cols[v][cols[v].index(c)] = d
        cols[w][cols[w].index(d)] = c
        rows[c][rows[c].index(v)] = w
        rows[d][rows[d].index(w)] = v

    bad = [v for v in range(k) if _four_cycles_at(v, cols, rows)]
    if len(bad) > max_bad_fraction * k:
        return
    for v in bad:
        for _ in range(tries):
            before = _four_cycles_at(v, cols, rows)
            if before == 0:
                break
            c = cols[v][int(rng.integers(len(cols[v])))]
            w = int(rng.integers(k))
            d = cols[w][int(rng.integers(len(cols[w])))]
            if w == v or d in cols[v] or c in cols[w]:
                continue
            swap(v, c, w, d)
            if _four_cycles_at(w, cols, rows) or _four_cycles_at(v, cols, rows) >= before:
                swap(v, d, w, c)


# --- encoding ------------------------------------------------------------------------


def encode(code: SparseParityCheck, info_bits: np.ndarray) -> np.ndarray:
    """Systematic codeword(s) ``[info, parity]``; accepts shape (k,) or (batch, k)."""
    u = np.asarray(info_bits, dtype=np.uint8)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[1] != code.k:
        raise ValueError(f"expected {code.k} info bits, got {u.shape[1]}")
    key = "encoder"
    if key not in code._cache:
        Hi = code.H[:, : code.k].tocsr()
        extras = [[] for _ in range(code.m)]
        for j in range(code.m):
            for c in code.cols[code.k + j]:
                if c > j + 1:
                    extras[c].append(j)
        code._cache[key] = (Hi, extras)
    Hi, extras = code._cache[key]
    s = ((Hi @ u.T.astype(np.int64)) % 2).astype(np.uint8)  # (m, batch)
    if not any(extras):
        p = np.bitwise_xor.accumulate(s, axis=0)
    else:
        p = np.empty_like(s)
        prev = np.zeros(s.shape[1], np.uint8)
        for j in range(code.m):
            acc = s[j] ^ prev
            for i in extras[j]:
                acc = acc ^ p[i]
            p[j] = acc
            prev = acc
    words = np.concatenate([u, p.T], axis=1)
    return words[0] if single else words


# --- decoding --------------------------------------------------------------------------


@dataclass
class BpResult:
    hard: np.ndarray
    posterior: np.ndarray
    extrinsic: np.ndarray
    iterations: np.ndarray
    syndrome_ok: np.ndarray


def _incidence(code: SparseParityCheck):
    if "incidence" not in code._cache:
        var, chk = code.edges
        E = len(var)
        V = sp.csr_matrix((np.ones(E), (np.arange(E), var)), shape=(E, code.n))
        C = sp.csr_matrix((np.ones(E), (np.arange(E), chk)), shape=(E, code.m))
        code._cache["incidence"] = (V, C, V.T.tocsr(), C.T.tocsr())
    return code._cache["incidence"]


def bp_decode(
    code: SparseParityCheck, channel_llrs: np.ndarray, apr_llrs: np.ndarray | None = None, max_iter: int = 50
) -> BpResult:
    """Flooding sum-product decoding of one word (n,) or a batch (B, n).

    Each word stops updating as soon as its syndrome is zero. The extrinsic output is
    ``posterior - channel - apr``.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    llr = np.asarray(channel_llrs, dtype=float)
    single = llr.ndim == 1
    llr = np.atleast_2d(llr)
    if llr.shape[1] != code.n:
        raise ValueError(f"expected {code.n} LLRs per word, got {llr.shape[1]}")
    if apr_llrs is not None:
        llr = llr + np.atleast_2d(np.asarray(apr_llrs, dtype=float))
    if not np.all(np.isfinite(llr)):
        warnings.warn("non-finite input LLRs clamped", stacklevel=2)
        llr = np.nan_to_num(llr, nan=0.0, posinf=LLR_MAX, neginf=-LLR_MAX)
    llr = np.clip(llr, -LLR_MAX, LLR_MAX)

    V, C, Vt, Ct = _incidence(code)
    var, _ = code.edges
    B = llr.shape[0]
    posterior = llr.copy()
    c2v = np.zeros((B, len(var)))
    iters = np.zeros(B, dtype=np.int64)
    ok = np.zeros(B, dtype=bool)
    active = np.arange(B)
    tiny = 1e-300
    for it in range(1, max_iter + 1):
        c2v_a = c2v[active]
        v2c = np.clip(posterior[active][:, var] - c2v_a, -LLR_MAX, LLR_MAX)
        t = np.tanh(v2c / 2)
        mag = np.log(np.maximum(np.abs(t), tiny))
        neg = (t < 0).astype(float)
        mag_sum = (Ct @ mag.T).T
        neg_sum = (Ct @ neg.T).T
        ext_mag = np.exp((C @ mag_sum.T).T - mag)
        ext_neg = (C @ neg_sum.T).T - neg
        sign = 1 - 2 * (np.rint(ext_neg) % 2)
        prod = np.minimum(ext_mag, 1 - 1e-15) * sign
        c2v_a = 2 * np.arctanh(prod)
        c2v[active] = c2v_a
        posterior[active] = llr[active] + (Vt @ c2v_a.T).T
        iters[active] = it
        hard_a = (posterior[active] < 0).astype(np.uint8)
        sat = ~code.syndrome(hard_a).any(axis=1)
        ok[active] = sat
        active = active[~sat]
        if active.size == 0:
            break
    hard = (posterior < 0).astype(np.uint8)
    ext = posterior - llr
    res = BpResult(hard, posterior, ext, iters, ok)
    if single:
        res = BpResult(hard[0], posterior[0], ext[0], iters[:1], ok[:1])
    return res


def bch_pass(post_ldpc_ber: float) -> bool:
    """Outer BCH cleans the residual errors iff the post-LDPC BER is at or below 5e-5."""
    if not 0 <= post_ldpc_ber <= 1:
        raise ValueError("BER must lie in [0, 1]")
    return post_ldpc_ber <= BCH_INPUT_BER_THRESHOLD


# --- file formats ----------------------------------------------------------------------


def save_code(code: SparseParityCheck, path) -> None:
    """Text header, then one line per column listing its check indices."""
    buf = io.StringIO()
    buf.write(f"# turboeq-ldpc v{CODE_FORMAT_VERSION}\n")
    buf.write(f"n {code.n}\nk {code.k}\nseed {code.seed if code.seed is not None else -1}\n")
    if code.dist is not None:
        buf.write("var " + " ".join(f"{d}:{float(f)!r}" for d, f in code.dist.var_degrees) + "\n")
        buf.write("chk " + " ".join(f"{d}:{float(f)!r}" for d, f in code.dist.chk_degrees) + "\n")
    buf.write("columns\n")
    for c in code.cols:
        buf.write(" ".join(map(str, c.tolist())) + "\n")
    Path(path).write_text(buf.getvalue())


def load_code(path) -> SparseParityCheck:
    lines = Path(path).read_text().splitlines()
    if not lines[0].startswith("# turboeq-ldpc v"):
        raise ValueError("not a turboeq LDPC code file")
    version = int(lines[0].rsplit("v", 1)[1])
    if version != CODE_FORMAT_VERSION:
        raise ValueError(f"unsupported code file version {version}")
    header: dict[str, str] = {}
    i = 1
    while lines[i] != "columns":
        key, _, val = lines[i].partition(" ")
        header[key] = val
        i += 1
    n, k = int(header["n"]), int(header["k"])
    cols = [np.array(list(map(int, ln.split())), dtype=np.int64) for ln in lines[i + 1 : i + 1 + n]]
    dist = None
    if "var" in header:
        parse = lambda s: tuple((int(a), float(b)) for a, b in (t.split(":") for t in s.split()))
        dist = DegreeDistribution(parse(header["var"]), parse(header["chk"]))
    seed = int(header.get("seed", -1))
    return SparseParityCheck(n, k, cols, None if seed < 0 else seed, dist)


def to_alist(code: SparseParityCheck) -> str:
    """MacKay alist text (1-based indices, zero padded)."""
    rows = code.rows
    dv = [len(c) for c in code.cols]
    dc = [len(r) for r in rows]
    out = [f"{code.n} {code.m}", f"{max(dv)} {max(dc)}", " ".join(map(str, dv)), " ".join(map(str, dc))]
    for c in code.cols:
        out.append(" ".join(str(x + 1) for x in list(c) + [-1] * (max(dv) - len(c))))
    for r in rows:
        out.append(" ".join(str(x + 1) for x in list(r) + [-1] * (max(dc) - len(r))))
    return "\n".join(out) + "\n"


def from_alist(text: str, k: int | None = None) -> SparseParityCheck:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    n, m = map(int, lines[0].split())
    cols = []
    for ln in lines[4 : 4 + n]:
        cols.append(np.array(sorted(int(x) - 1 for x in ln.split() if int(x) > 0), dtype=np.int64))
    return SparseParityCheck(n, n - m if k is None else k, cols)
