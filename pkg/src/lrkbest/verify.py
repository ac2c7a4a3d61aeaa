"""Self-checks run by ``lrkbest verify``.

Each suite compares a component against an independent reference on
random inputs and reports one line ``<suite> PASS|FAIL <detail>``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .fixedpoint import QFormat, fq_array, fx_add, fx_mul, quantize
from .kbest import count_conventional, kbest_search, on_demand_bound
from .lattice import LllParams, lll_reduce, verify_reduction
from .linalg import qr_cordic, qr_givens
from .model import QPSK, realify_matrix
from .softdec import LdpcCode, ldpc_decode, llr_extrinsic


@dataclass
class SuiteResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{self.name} {'PASS' if self.ok else 'FAIL'} {self.detail}"


def _extended(rng, n_tx=8, n_rx=8):
    Hc = (rng.standard_normal((n_rx, n_tx)) + 1j * rng.standard_normal((n_rx, n_tx))) / np.sqrt(2)
    a = np.sqrt(rng.uniform(0.05, 1.0))
    return np.vstack([realify_matrix(Hc), a * np.eye(2 * n_tx)])


def suite_qr(n=100, seed=0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst_g = worst_c = 0.0
    for _ in range(n):
        A = _extended(rng)
        for fn, tag in ((qr_givens, "g"), (qr_cordic, "c")):
            r = fn(A)
            err = np.linalg.norm(A - r.Q @ r.R) / np.linalg.norm(A)
            if tag == "g":
                worst_g = max(worst_g, err)
            else:
                worst_c = max(worst_c, err)
    ok = worst_g <= 1e-10 and worst_c <= 1e-5
    return SuiteResult("qr", ok, f"givens={worst_g:.2e} cordic={worst_c:.2e}")


def suite_lll(n=100, seed=1) -> SuiteResult:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n):
        B = _extended(rng)
        res = lll_reduce(B, LllParams(0.75))
        if not verify_reduction(B, res.reduced, res.transform.T, 0.75):
            bad += 1
    return SuiteResult("lll", bad == 0, f"failed={bad}/{n}")


def suite_kbest_ml(n=200, seed=2) -> SuiteResult:
    """Full-list search on 2x2 QPSK against exhaustive enumeration."""
    rng = np.random.default_rng(seed)
    hyps = np.array(list(itertools.product([-1.0, 1.0], repeat=4)))
    miss = 0
    for _ in range(n):
        Hc = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
        H = realify_matrix(Hc)
        s = hyps[rng.integers(len(hyps))]
        y = H @ s + 0.7 * rng.standard_normal(4)
        best = np.min(np.sum((y[None] - hyps @ H.T) ** 2, axis=1))
        # the integer box for 2z+1 in {-1,1}^4 is z in {-1,0}^4; K=9^4 covers [-4,4]^4
        Q, R = np.linalg.qr(H)
        sgn = np.sign(np.diag(R))
        Q, R = Q * sgn, (R.T * sgn).T
        yt = Q.T @ ((y - H.sum(axis=1)) / 2)
        cl, _ = kbest_search(R, yt, 9 ** 4)
        S = 2.0 * cl.z + 1.0
        inside = np.all(np.abs(S) <= 1, axis=1)
        got = np.min(np.sum((y[None] - S[inside] @ H.T) ** 2, axis=1))
        if abs(got - best) > 1e-9:
            miss += 1
    return SuiteResult("kbest_ml", miss == 0, f"mismatch={miss}/{n}")


def suite_node_bound(n=500, seed=3) -> SuiteResult:
    rng = np.random.default_rng(seed)
    bound = on_demand_bound(8, 4)
    worst = 0
    for _ in range(n):
        A = _extended(rng)
        R = qr_givens(A).R
        yt = rng.normal(scale=3.0, size=16)
        _, st = kbest_search(R, yt, 4)
        worst = max(worst, st.nodes_expanded)
    conv = count_conventional(8, 4, "16QAM")
    ok = worst <= bound and bound == 112 and conv == 1024
    return SuiteResult("node_bound", ok, f"max={worst} bound={bound} conventional={conv}")


def _brute_llr(x, d, la, sigma2, clip):
    L, B = x.shape
    out = np.empty(B)
    for k in range(B):
        best = {1.0: -np.inf, -1.0: -np.inf}
        for l in range(L):
            v = -d[l] / sigma2 + sum(x[l, j] * la[j] for j in range(B) if j != k)
            best[x[l, k]] = max(best[x[l, k]], v)
        if best[-1.0] == -np.inf:
            out[k] = clip
        elif best[1.0] == -np.inf:
            out[k] = -clip
        else:
            out[k] = min(max(0.5 * (best[1.0] - best[-1.0]), -clip), clip)
    return out


def suite_llr(n=2000, seed=4) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        L = int(rng.integers(1, 9))
        B = int(rng.integers(1, 9))
        x = rng.choice([-1.0, 1.0], size=(L, B))
        d = rng.uniform(0, 20, L)
        la = rng.normal(scale=3, size=B)
        s2 = rng.uniform(0.2, 3)
        got = llr_extrinsic(x, d, la, s2, clip=25.0)
        worst = max(worst, float(np.max(np.abs(got - _brute_llr(x, d, la, s2, 25.0)))))
    return SuiteResult("llr", worst <= 1e-12, f"max_err={worst:.2e}")


def suite_fixedpoint(n=20000, seed=5) -> SuiteResult:
    """Scalar ops against rationals; vector quantizer against the scalar one; golden file."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n):
        wl = int(rng.integers(4, 33))
        fl = int(rng.integers(0, wl))
        fmt = QFormat(wl, fl, rng.choice(["nearest", "truncate"]), rng.choice(["saturate", "wrap"]))
        span = 2.0 ** (wl - fl)
        a, b = quantize(rng.uniform(-span, span), fmt), quantize(rng.uniform(-span, span), fmt)
        for op, exact in ((fx_add, a.as_fraction() + b.as_fraction()),
                          (fx_mul, a.as_fraction() * b.as_fraction())):
            if op(a, b, fmt) != quantize(exact, fmt):
                bad += 1
        x = rng.uniform(-span, span, 4)
        if not np.array_equal(fq_array(x, fmt.packed()), [quantize(v, fmt).value for v in x]):
            bad += 1
    golden = check_golden()
    return SuiteResult("fixedpoint", bad == 0 and golden[0] == 0,
                       f"mismatch={bad} golden_mismatch={golden[0]}/{golden[1]}")


def check_golden() -> tuple[int, int]:
    """(mismatches, cases) of the shipped golden-value file."""
    text = resources.files("lrkbest.data").joinpath("fixedpoint_golden.json").read_text()
    cases = json.loads(text)["cases"]
    bad = 0
    for c in cases:
        fmt = QFormat(c["wl"], c["fl"], c["rounding"], c["overflow"])
        a = quantize(Fraction(c["a"]), fmt)
        b = quantize(Fraction(c["b"]), fmt)
        got = {"qa": a.raw, "qb": b.raw, "add": fx_add(a, b, fmt).raw, "mul": fx_mul(a, b, fmt).raw}
        if any(got[k] != c[k] for k in got):
            bad += 1
    return bad, len(cases)


def suite_ldpc(seed=6) -> SuiteResult:
    code = LdpcCode.load("builtin:tiny12")
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(50):
        cw = code.encode(rng.integers(0, 2, code.k))
        llr = 10.0 * (1 - 2.0 * cw)
        j = int(rng.integers(code.n))
        llr[j] = -0.2 * llr[j]
        post, ok, _ = ldpc_decode(llr, code)
        if not ok or np.any((post < 0) != (cw == 1)):
            bad += 1
    return SuiteResult("ldpc", bad == 0, f"uncorrected={bad}/50")


SUITES = {
    "qr": suite_qr,
    "lll": suite_lll,
    "kbest_ml": suite_kbest_ml,
    "node_bound": suite_node_bound,
    "llr": suite_llr,
    "fixedpoint": suite_fixedpoint,
    "ldpc": suite_ldpc,
}


def run_all(names=None, out=print) -> bool:
    ok = True
    for name in names or SUITES:
        try:
            res = SUITES[name]()
        except Exception as exc:  # a crashing suite is a failing suite
            res = SuiteResult(name, False, f"error={type(exc).__name__}: {exc}")
        out(res.line())
        ok &= res.ok
    return ok
