"""Per-channel bound reports, parameter sweeps and the executable property suites."""
import dataclasses
import json
import logging
import math
import time
from pathlib import Path

import numpy as np
import pandas as pd

from settings import ensure_dir, golden_path
from src import channels
from src.errors import ChannelError, QcapError
from src.sdp_models import (
    CodeClass,
    cb_norm_pt,
    deviation,
    fidelity,
    gamma,
    kappa,
    kappa_activated,
    lemma1_check,
    superactivation_bound,
    upsilon,
)

logger = logging.getLogger(__name__)

BOUND_IDS = ("qGamma", "qTheta", "kappaNS", "kappaPPTp", "kappaNSPPTp", "upsilon", "oneShotZeroErrorPPTp")
SUITES = ("duality", "additivity", "prop1", "theorem1", "theorem2", "lemma1", "ordering", "graph_invariance")
FAMILIES = ("nr",)

GAMMA_THETA_TOL = 2e-5
KAPPA_GAMMA_TOL = 1e-4
CSV_DIGITS = 12
DEFAULT_NR_GRID = tuple(round(0.05 * i, 2) for i in range(11))

_KAPPA_CODES = {"kappaNS": CodeClass.NS, "kappaPPTp": CodeClass.PPTP, "kappaNSPPTp": CodeClass.NS_PPTP}


@dataclasses.dataclass(frozen=True)
class ChainCheck:
    name: str
    passed: bool
    lhs: float
    rhs: float


@dataclasses.dataclass
class BoundReport:
    channel_name: str
    dims: tuple
    requested: tuple
    values: dict = dataclasses.field(default_factory=dict)
    wall_times: dict = dataclasses.field(default_factory=dict)
    solver_stats: dict = dataclasses.field(default_factory=dict)
    errors: dict = dataclasses.field(default_factory=dict)
    checks: tuple = ()

    @property
    def ok(self):
        return not self.errors and all(c.passed for c in self.checks)

    def to_dict(self, timing=True):
        out = {
            "channel_name": self.channel_name,
            "dims": list(self.dims),
            "requested": list(self.requested),
            "values": dict(self.values),
            "solver_stats": {k: list(v) for k, v in self.solver_stats.items()},
            "errors": dict(self.errors),
            "checks": [dataclasses.asdict(c) for c in self.checks],
        }
        if timing:
            out["wall_times"] = dict(self.wall_times)
        return out

    def to_json(self, timing=True):
        return json.dumps(self.to_dict(timing), indent=2)


@dataclasses.dataclass(frozen=True)
class SweepRow:
    parameter: float
    values: dict


def parse_ids(requested):
    """Validate bound identifiers, returned in canonical order."""
    if isinstance(requested, str):
        requested = [r.strip() for r in requested.split(",") if r.strip()]
    unknown = sorted(set(requested) - set(BOUND_IDS))
    if unknown:
        raise ValueError(f"unknown bound identifier(s) {unknown}; available: {', '.join(BOUND_IDS)}")
    if not requested:
        raise ValueError("no bound identifiers requested")
    return tuple(i for i in BOUND_IDS if i in set(requested))


def _compute(ch, ident, settings, cache):
    """(value, (iterations or evaluations, gap or bracket width)) for one identifier."""
    if ident == "qGamma":
        res = gamma(ch, side="both", settings=settings)
        return res.q_gamma, (res.iterations, res.gap)
    if ident == "qTheta":
        res = cb_norm_pt(ch, settings=settings)
        return res.q_theta, (res.iterations, res.gap)
    if ident == "upsilon":
        res = upsilon(channels.kraus_support(ch), settings=settings)
        return res.upsilon, (0, res.support_residual)
    if ident == "oneShotZeroErrorPPTp":
        res = cache.get("kappaPPTp") or kappa(ch, CodeClass.PPTP, settings=settings)
        cache["kappaPPTp"] = res
        return float(res.one_shot_zero_error), (res.evaluations, res.bracket[1] - res.bracket[0])
    res = cache.get(ident) or kappa(ch, _KAPPA_CODES[ident], settings=settings)
    cache[ident] = res
    return res.kappa, (res.evaluations, res.bracket[1] - res.bracket[0])


def chain_checks(values):
    """log2 kappa_PPTp <= Q_Gamma <= Q_Theta, for whichever of the three are present."""
    checks = []
    if "kappaPPTp" in values and "qGamma" in values:
        lhs = math.log2(values["kappaPPTp"])
        checks.append(ChainCheck("log2(kappa_pptp) <= Q_Gamma", lhs <= values["qGamma"] + KAPPA_GAMMA_TOL,
                                 lhs, values["qGamma"]))
    if "qGamma" in values and "qTheta" in values:
        checks.append(ChainCheck("Q_Gamma <= Q_Theta", values["qGamma"] <= values["qTheta"] + GAMMA_THETA_TOL,
                                 values["qGamma"], values["qTheta"]))
    return tuple(checks)


def report(ch, requested, settings=None):
    """Compute the requested bounds; a failing bound is recorded and the rest still run."""
    requested = parse_ids(requested)
    rep = BoundReport(ch.name, (ch.dim_in, ch.dim_out), requested)
    cache = {}
    for ident in requested:
        started = time.perf_counter()
        try:
            value, stats = _compute(ch, ident, settings, cache)
            rep.values[ident] = float(value)
            rep.solver_stats[ident] = stats
        except QcapError as e:
            logger.error("%s: %s failed: %s", ch.name, ident, e)
            rep.errors[ident] = str(e)
        rep.wall_times[ident] = time.perf_counter() - started
    rep.checks = chain_checks(rep.values)
    for check in rep.checks:
        if not check.passed:
            logger.warning("%s: %s violated (%.8g vs %.8g)", ch.name, check.name, check.lhs, check.rhs)
    return rep


# --------------------------------------------------
# Sweeps and CSV files
# --------------------------------------------------

def family_channel(family, parameter):
    if family == "nr":
        return channels.nr_channel(parameter)
    raise ChannelError(f"unknown channel family {family!r}; available: {', '.join(FAMILIES)}")


def sweep(family, grid, requested, settings=None):
    """One row of bound values per grid point, ordered by parameter."""
    requested = parse_ids(requested)
    if family not in FAMILIES:
        raise ChannelError(f"unknown channel family {family!r}; available: {', '.join(FAMILIES)}")
    grid = sorted(float(g) for g in grid)
    outside = [g for g in grid if not 0.0 <= g <= 0.5]
    if outside:
        raise ChannelError(f"{family} sweep parameters must lie in [0, 0.5], got {outside}")
    rows = []
    for param in grid:
        ch = family_channel(family, param)
        cache = {}
        values = {ident: float(_compute(ch, ident, settings, cache)[0]) for ident in requested}
        logger.info("sweep %s r=%g: %s", family, param, values)
        rows.append(SweepRow(param, values))
    return rows


def sweep_frame(rows):
    if not rows:
        return pd.DataFrame(columns=["param"])
    ids = list(rows[0].values)
    return pd.DataFrame([[row.parameter] + [row.values[i] for i in ids] for row in rows], columns=["param"] + ids)


def sweep_csv_text(rows):
    return sweep_frame(rows).to_csv(index=False, float_format=f"%.{CSV_DIGITS}g", lineterminator="\n")


def write_sweep_csv(rows, path):
    path = Path(path)
    ensure_dir(path.parent)
    path.write_text(sweep_csv_text(rows))
    return path


def read_sweep_csv(path):
    df = pd.read_csv(path)
    if "param" not in df.columns:
        raise ValueError(f"{path}: missing 'param' column")
    ids = [c for c in df.columns if c != "param"]
    return [SweepRow(float(rec["param"]), {i: float(rec[i]) for i in ids}) for rec in df.to_dict("records")]


def freeze_golden(rows, name):
    return write_sweep_csv(rows, golden_path / f"{name}.csv")


def compare_to_golden(rows, name):
    """Largest absolute deviation from the frozen CSV, or None when none is frozen."""
    path = golden_path / f"{name}.csv"
    if not path.exists():
        return None
    golden = read_sweep_csv(path)
    if [g.parameter for g in golden] != [round(r.parameter, CSV_DIGITS) for r in rows]:
        raise ValueError(f"{path}: parameter grid differs from the computed sweep")
    return max(abs(g.values[i] - r.values[i]) for g, r in zip(golden, rows) for i in r.values)


# --------------------------------------------------
# Erasure-channel dimension resolution
# --------------------------------------------------

@dataclasses.dataclass(frozen=True)
class ErasureCheck:
    values: dict
    matches: tuple
    target: float
    tol: float
    implied_dimension: float


def erasure_dimension_check(dims=(2, 3, 4), target=1.123, tol=0.01, p=0.5, settings=None):
    """Q_Gamma of the erasure channel per input dimension, and which dimensions hit the target.

    Gamma is affine in d over the computed points; implied_dimension is where the
    fitted line reaches 2**target.
    """
    values = {}
    gammas = {}
    for d in dims:
        res = gamma(channels.erasure_channel(d, p), side="both", settings=settings)
        values[d] = res.q_gamma
        gammas[d] = res.gamma
        logger.info("erasure(%d, %g): Gamma=%.10f Q_Gamma=%.10f", d, p, res.gamma, res.q_gamma)
    matches = tuple(d for d in dims if abs(values[d] - target) <= tol)
    implied = float("nan")
    if len(dims) >= 2:
        slope, intercept = np.polyfit(list(gammas), list(gammas.values()), 1)
        if abs(slope) > 1e-12:
            implied = float((2 ** target - intercept) / slope)
    return ErasureCheck(values, matches, target, tol, implied)


# --------------------------------------------------
# Verification suites
# --------------------------------------------------

@dataclasses.dataclass(frozen=True)
class VerifyCase:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclasses.dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    margin: float
    cases: tuple

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "margin": self.margin,
                "cases": [dataclasses.asdict(c) for c in self.cases]}


def _case(name, margin, detail):
    return VerifyCase(name, bool(margin >= 0), float(margin), detail)


def _random_channels(seed, count, dims=(2, 2)):
    """Seeded random channels cycling Kraus ranks 1..3 so that zero-error structure varies."""
    return [
        channels.random_channel(dims[0], dims[1], 1 + i % 3, seed + i)
        for i in range(count)
    ]


def _suite_duality(seed, quick, settings):
    cases = []
    chans = [channels.identity_channel(2), channels.werner_holevo(3), channels.nr_channel(0.2)]
    chans += _random_channels(seed, 1 if quick else 3)
    for ch in chans:
        g = gamma(ch, side="both", settings=settings)
        diff = abs(g.gamma - g.dual_mu)
        cases.append(_case(f"Gamma {ch.name}", 1e-6 * max(1.0, g.gamma) - diff,
                           f"primal {g.gamma:.10f} dual {g.dual_mu:.10f}"))
    for ch in chans[2:]:
        f = fidelity(ch, 1.5, CodeClass.PPTP, side="both", settings=settings)
        diff = abs(f.value - f.dual_value)
        cases.append(_case(f"F_pptp {ch.name} k=1.5", 1e-6 - diff,
                           f"primal {f.value:.10f} dual {f.dual_value:.10f}"))
    return cases


def _suite_additivity(seed, quick, settings):
    cases = []
    rng = np.random.default_rng(seed)
    pairs = [(channels.werner_holevo(3), channels.identity_channel(2)),
             (channels.nr_channel(0.1), channels.nr_channel(0.4))]
    count = 2 if quick else 20
    for i in range(count):
        n = channels.random_channel(2, 2, int(rng.integers(1, 5)), seed + 100 + 2 * i)
        m = channels.random_channel(2, 2, int(rng.integers(1, 5)), seed + 101 + 2 * i)
        pairs.append((n, m))
    for n, m in pairs:
        gn = gamma(n, side="primal", settings=settings).gamma
        gm = gamma(m, side="primal", settings=settings).gamma
        gnm = gamma(channels.tensor_channels(n, m), side="primal", settings=settings).gamma
        diff = abs(gnm - gn * gm)
        cases.append(_case(f"{n.name} x {m.name}", 1e-5 * gn * gm - diff,
                           f"Gamma(n x m)={gnm:.10f} Gamma(n)Gamma(m)={gn * gm:.10f}"))
    for n, m in pairs[:2]:
        bound = superactivation_bound(n, m, settings=settings)
        joint = gamma(channels.tensor_channels(n, m), side="primal", settings=settings).q_gamma
        cases.append(_case(f"superactivation {n.name} x {m.name}", 1e-5 - abs(bound - joint),
                           f"Q_Gamma(n)+Q_Gamma(m)={bound:.10f} Q_Gamma(n x m)={joint:.10f}"))
    return cases


def _suite_prop1(seed, quick, settings):
    cases = []
    chans = [channels.nr_channel(0.1), channels.nr_channel(0.3), _random_channels(seed, 1)[0]]
    if quick:
        chans = chans[:1]
    for ch in chans:
        joint = channels.tensor_channels(ch, channels.identity_channel(2))
        for k in (1.0, 1.2, 1.5):
            lhs = fidelity(joint, 2 * k, CodeClass.PPTP, settings=settings).value
            rhs = fidelity(ch, k, CodeClass.PPTP, settings=settings).value
            cases.append(_case(f"{ch.name} k={k:g}", 1e-5 - abs(lhs - rhs),
                               f"F(N x I_2, {2 * k:g})={lhs:.10f} F(N, {k:g})={rhs:.10f}"))
    if not quick:
        w3 = channels.werner_holevo(3)
        act = kappa_activated(w3, 3, settings=settings)
        kap = kappa(w3, CodeClass.PPTP, settings=settings).kappa
        cases.append(_case("kappa_activated(W_3, 3)", 1e-3 - abs(act - kap),
                           f"activated {act:.6f} kappa {kap:.6f}"))
    return cases


def _suite_theorem1(seed, quick, settings):
    cases = []
    chans = [channels.identity_channel(2), channels.werner_holevo(3)] + _random_channels(seed, 3 if quick else 10)
    for ch in chans:
        ks = channels.kraus_support(ch)
        for code in (CodeClass.PPTP, CodeClass.NS):
            for k in (1.5, 2.5):
                f = fidelity(ch, k, code, settings=settings).value
                d = deviation(ks, k, code, settings=settings)
                perfect, zero = f >= 1 - 1e-6, d >= -1e-6
                # distance of the nearer predicate from its threshold
                margin = min(abs(f - (1 - 1e-6)), abs(d + 1e-6)) if perfect == zero else -1.0
                cases.append(_case(f"{ch.name} {code.value} k={k:g}", margin, f"F={f:.10f} D={d:.3e}"))
    return cases


def _suite_theorem2(seed, quick, settings):
    cases = []
    for ch in _random_channels(seed, 3 if quick else 10):
        kap = kappa(ch, CodeClass.NS, settings=settings).kappa
        ups = upsilon(channels.kraus_support(ch), settings=settings).upsilon
        cases.append(_case(ch.name, 1e-3 - abs(kap ** 2 - ups), f"kappa_NS^2={kap ** 2:.6f} Upsilon={ups:.6f}"))
    return cases


def _suite_lemma1(seed, quick, settings):
    cases = []
    rng = np.random.default_rng(seed)
    for i in range(3 if quick else 10):
        n1 = channels.random_channel(2, 2, int(rng.integers(1, 4)), seed + 200 + 2 * i)
        n2 = channels.random_channel(2, 2, int(rng.integers(1, 4)), seed + 201 + 2 * i)
        k = float(rng.uniform(1.0, 2.0))
        lhs, mid, rhs = lemma1_check(n1, n2, k, settings=settings)
        margin = min(mid - lhs, rhs - mid) + 1e-6
        cases.append(_case(f"{n1.name} x {n2.name} k={k:.4f}", margin, f"{lhs:.8f} <= {mid:.8f} <= {rhs:.8f}"))
    return cases


def _suite_ordering(seed, quick, settings):
    cases = []
    chans = [channels.identity_channel(2), channels.werner_holevo(3), channels.nr_channel(0.2),
             channels.erasure_channel(2, 0.5)] + _random_channels(seed, 1 if quick else 4)
    for ch in chans:
        rep = report(ch, ("qGamma", "qTheta", "kappaPPTp"), settings)
        if rep.errors:
            detail = "; ".join(f"{ident}: {msg}" for ident, msg in rep.errors.items())
            cases.append(VerifyCase(ch.name, False, float("-inf"), detail))
            continue
        values = rep.values
        lk = math.log2(values["kappaPPTp"])
        margin = min(values["qGamma"] + 1e-4 - lk, values["qTheta"] + 2e-4 - values["qGamma"])
        cases.append(_case(ch.name, margin,
                           f"log2 kappa={lk:.6f} Q_Gamma={values['qGamma']:.6f} Q_Theta={values['qTheta']:.6f}"))
    return cases


def _suite_graph_invariance(seed, quick, settings):
    cases = []
    x = np.array([[0, 1], [1, 0]])
    z = np.array([[1, 0], [0, -1]])
    unitary_sets = [[np.eye(2), x], [np.eye(2), z, x]]
    prob_sets = [
        [(0.5, 0.5), (0.3, 0.7), (0.9, 0.1)],
        [(1 / 3, 1 / 3, 1 / 3), (0.6, 0.3, 0.1)],
    ]
    if quick:
        unitary_sets, prob_sets = unitary_sets[:1], [prob_sets[0][:2]]
    for us, probs in zip(unitary_sets, prob_sets):
        for code in (CodeClass.PPTP, CodeClass.NS):
            values = [kappa(channels.mixed_unitary(us, p, f"mixed{len(us)}{p}"), code, settings=settings).kappa
                      for p in probs]
            spread = max(values) - min(values)
            cases.append(_case(f"{len(us)} unitaries {code.value}", 2 * 1e-4 - spread,
                               "kappa " + ", ".join(f"{v:.6f}" for v in values)))
    return cases


_SUITE_RUNNERS = {
    "duality": _suite_duality,
    "additivity": _suite_additivity,
    "prop1": _suite_prop1,
    "theorem1": _suite_theorem1,
    "theorem2": _suite_theorem2,
    "lemma1": _suite_lemma1,
    "ordering": _suite_ordering,
    "graph_invariance": _suite_graph_invariance,
}


def parse_suites(suites):
    if isinstance(suites, str):
        suites = [s.strip() for s in suites.split(",") if s.strip()]
    unknown = sorted(set(suites) - set(SUITES))
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; available: {', '.join(SUITES)}")
    if not suites:
        raise ValueError("no suites requested")
    return tuple(s for s in SUITES if s in set(suites))


def verify_suite(suites, seed=42, quick=False, settings=None):
    """Run the named property suites; failures are reported, never raised."""
    results = {}
    for name in parse_suites(suites):
        started = time.perf_counter()
        try:
            cases = _SUITE_RUNNERS[name](seed, quick, settings)
        except QcapError as e:
            logger.error("suite %s aborted: %s", name, e)
            cases = [VerifyCase(f"{name} aborted", False, float("-inf"), str(e))]
        margin = min(c.margin for c in cases) if cases else 0.0
        results[name] = SuiteResult(name, all(c.passed for c in cases), margin, tuple(cases))
        logger.info("suite %s: %s (margin %.2e, %.1fs)", name, "pass" if results[name].passed else "FAIL",
                    margin, time.perf_counter() - started)
    return results
