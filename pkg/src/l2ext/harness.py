"""Scenario configuration, verification suites and JSON run reports.

A scenario fixes a domain, a built-in representation, a base vector and an
integrator.  ``run_extend``, ``run_verify`` and ``run_constant`` turn a list
of scenarios into a :class:`RunReport`; the CLI is a thin layer on top.
"""

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .errors import ConfigError, L2ExtError
from .hc_domain import (
    UnboundedPoint,
    factorize_pkp,
    hc_embed,
    point_to_group,
    zeta_coordinate,
)
from .lie_core import DomainSpec, bracket, circle_action, hodge_decompose_algebra
from .minimality import (
    competitor_test,
    extension_constant,
    frame_gram_min_det,
    frame_sections,
    orthogonality_suite,
    perturbed_section,
    s1_averaging_demo,
)
from .polarization import (
    builtin_polarization,
    k_invariance_residual,
    random_k_element,
    s1_orbit_check,
    verify_polarization,
)
from .quadrature import RNG_ALGORITHM, DiskRule, cached_mc_integrator
from .vhs import (
    BUILTIN_TAGS,
    SYM_SL2,
    build_section,
    check_shifting,
    eval_section,
    fiber_decompose,
    holomorphy_check,
    span_residual,
)

SCHEMA_VERSION = "1.0"
MIN_MC_SAMPLES = 10**4
SUITES = ("structure", "orthogonality", "averaging", "competitors", "constant")

PRESETS = {
    "elliptic": {
        "domain": {"kind": "upper_half_plane", "genus": 1},
        "representation": {"tag": "standard_sl2"},
        "max_degree": 6,
    },
    "sym2": {
        "domain": {"kind": "upper_half_plane", "genus": 1},
        "representation": {"tag": "sym_sl2", "degree": 2},
        "max_degree": 6,
    },
    "sp4": {
        "domain": {"kind": "siegel", "genus": 2},
        "representation": {"tag": "standard_sp"},
        "max_degree": 3,
    },
    "sp6": {
        "domain": {"kind": "siegel", "genus": 3},
        "representation": {"tag": "standard_sp"},
        "max_degree": 2,
    },
}
DEFAULT_SCENARIOS = ("elliptic", "sp4")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    domain_kind: str = "upper_half_plane"
    genus: int = 1
    tag: str = "standard_sl2"
    degree: int = 1
    base_vector: object = "standard"  # "standard" or a list of [re, im] pairs
    n_radial: int = 64
    n_angular: int = 128
    mc_samples: int = 10**6
    seed: int = 42
    max_degree: int = 6
    trials: int = 100
    suites: tuple = SUITES
    perturb: float = 0.0
    parallel: int = 1
    grid: object = None  # unbounded points for `extend`; generated from the seed when absent

    @property
    def spec(self):
        if self.domain_kind == "upper_half_plane":
            return DomainSpec.upper_half_plane()
        return DomainSpec.siegel(self.genus)

    @property
    def uses_mc(self):
        return self.genus > 1

    def echo(self):
        out = asdict(self)
        out["suites"] = list(self.suites)
        return out


def _scenario_from_dict(name, data):
    data = dict(data)
    domain = data.pop("domain", {})
    rep = data.pop("representation", {})
    integ = data.pop("integrator", {})
    kwargs = {"name": name}
    if domain:
        kwargs["domain_kind"] = domain.get("kind", "upper_half_plane")
        kwargs["genus"] = int(domain.get("genus", 1))
    if rep:
        kwargs["tag"] = rep.get("tag", "standard_sl2")
        kwargs["degree"] = int(rep.get("degree", 1))
    for key in ("n_radial", "n_angular", "mc_samples", "seed"):
        if key in integ:
            kwargs[key] = int(integ[key])
    for key in ("base_vector", "max_degree", "trials", "perturb", "parallel", "grid"):
        if key in data:
            kwargs[key] = data.pop(key)
    if "suites" in data:
        kwargs["suites"] = tuple(data.pop("suites"))
    data.pop("name", None)
    if data:
        raise ConfigError(f"unknown config keys for scenario {name!r}: {sorted(data)}")
    return ScenarioConfig(**kwargs)


def preset(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown scenario {name!r}; presets: {sorted(PRESETS)}")
    return _scenario_from_dict(name, PRESETS[name])


def validate(cfg):
    if cfg.domain_kind not in ("upper_half_plane", "siegel"):
        raise ConfigError(f"unknown domain kind {cfg.domain_kind!r}")
    if cfg.domain_kind == "upper_half_plane" and cfg.genus != 1:
        raise ConfigError("the upper half plane has genus 1")
    if cfg.tag not in BUILTIN_TAGS:
        raise ConfigError(f"unknown representation tag {cfg.tag!r}; builtins: {list(BUILTIN_TAGS)}")
    bad = set(cfg.suites) - set(SUITES)
    if bad:
        raise ConfigError(f"unknown suites {sorted(bad)}")
    if cfg.uses_mc and cfg.mc_samples < MIN_MC_SAMPLES and set(cfg.suites) - {"structure"}:
        raise ConfigError(f"Monte Carlo suites need mc_samples >= {MIN_MC_SAMPLES}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.max_degree < 1 or cfg.trials < 1 or cfg.parallel < 1:
        raise ConfigError("max_degree, trials and parallel must be positive")
    if cfg.n_radial < 1 or cfg.n_angular < 1:
        raise ConfigError("quadrature sizes must be positive")
    try:
        rep = _representation(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not isinstance(cfg.base_vector, str):
        try:
            v = _parse_vector(cfg.base_vector)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"base_vector must be 'standard' or a list of [re, im] pairs: {exc}") from exc
        if v.shape != (rep.dim,):
            raise ConfigError(f"base_vector needs {rep.dim} entries")
    elif cfg.base_vector != "standard":
        raise ConfigError(f"unknown named base vector {cfg.base_vector!r}")
    return cfg


def load_scenarios(config_path=None, names=None, overrides=None):
    """Scenarios from a JSON file and/or preset names, with flag overrides applied."""
    scenarios = []
    if config_path:
        try:
            with open(config_path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        entries = data.get("scenarios", [data])
        for i, entry in enumerate(entries):
            entry = dict(entry)
            name = entry.get("name", f"scenario{i}")
            base = dict(PRESETS.get(entry.pop("preset", None), {}))
            base.update(entry)
            scenarios.append(_scenario_from_dict(name, base))
    for name in names or ():
        scenarios.append(preset(name))
    if not scenarios:
        scenarios = [preset(n) for n in DEFAULT_SCENARIOS]
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    return [validate(replace(s, **overrides)) for s in scenarios]


def _parse_vector(entries):
    out = []
    for e in entries:
        if isinstance(e, (int, float)):
            out.append(complex(e))
        else:
            re, im = e
            out.append(complex(float(re), float(im)))
    return np.array(out, dtype=complex)


def _representation(cfg):
    from .vhs import Representation

    return Representation(cfg.spec, cfg.tag, cfg.degree if cfg.tag == SYM_SL2 else 1)


@dataclass
class Scenario:
    """Everything built from a config: representation, frame, polarization, section, integrator."""

    cfg: ScenarioConfig
    rep: object = None
    frame: object = None
    pol: object = None
    frames: list = None
    section: object = None
    _integrator: object = None

    @classmethod
    def build(cls, cfg):
        rep = _representation(cfg)
        frame = hodge_decompose_algebra(cfg.spec)
        pol = builtin_polarization(rep)
        frames = frame_sections(rep, frame)
        if cfg.base_vector == "standard":
            section = frames[0]
        else:
            section = build_section(_parse_vector(cfg.base_vector), rep.top_p, rep, frame)
        return cls(cfg, rep, frame, pol, frames, section)

    @property
    def integrator(self):
        if self._integrator is None:
            c = self.cfg
            if c.uses_mc:
                self._integrator = cached_mc_integrator(c.spec, c.mc_samples, c.seed, c.parallel)
            else:
                self._integrator = DiskRule(c.n_radial, c.n_angular)
        return self._integrator

    @property
    def tested_section(self):
        if self.cfg.perturb:
            return perturbed_section(self.section, self.frames, self.cfg.perturb)
        return self.section


def _check(value, tolerance, passed=None):
    value = float(value)
    if passed is None:
        passed = bool(value < tolerance)
    return {"value": value, "tolerance": float(tolerance), "passed": bool(passed)}


def random_points(spec, n, rng):
    """Points of the unbounded model with moderately sized imaginary part."""
    g = spec.genus
    out = []
    for _ in range(n):
        A = rng.normal(size=(g, g))
        B = rng.normal(size=(g, g))
        X = 0.5 * (A + A.T)
        Y = B @ B.T / g + 0.5 * np.eye(g)
        M = X + 1j * Y
        out.append(UnboundedPoint(spec, M[0, 0] if spec.scalar_points else M))
    return out


def _k_elements(spec, rng, n):
    out = [circle_action(spec, th) for th in rng.uniform(0, 2 * np.pi, size=n)]
    if spec.genus > 1:
        out += [random_k_element(spec, rng) for _ in range(n)]
    return out


def bracket_relations(frame):
    """Max residual of the bracket inclusions among g^{0,0}, g^{-1,1}, g^{1,-1}."""
    rules = [
        (frame.g00, frame.g00, frame.residual_00),
        (frame.g00, frame.g_m11, frame.residual_m11),
        (frame.g00, frame.g_1m1, frame.residual_1m1),
        (frame.g_m11, frame.g_1m1, frame.residual_00),
        (frame.g_m11, frame.g_m11, np.linalg.norm),
        (frame.g_1m1, frame.g_1m1, np.linalg.norm),
    ]
    worst = 0.0
    for A, B, resid in rules:
        for X in A:
            for Y in B:
                worst = max(worst, resid(bracket(X, Y)))
    return worst


def structure_suite(sc, rng):
    rep, frame, pol, sec = sc.rep, sc.frame, sc.pol, sc.section
    spec = rep.spec
    s1_tol = 1e-10 if spec.genus == 1 else 1e-9
    points = random_points(spec, 10, rng)
    out = {"bracket_relations": _check(bracket_relations(frame), 1e-14)}
    out["shifting"] = _check(check_shifting(rep, frame).max_residual, 1e-12)

    recon = 0.0
    equiv = 0.0
    coords = 0.0
    paths = 0.0
    ks = _k_elements(spec, rng, 3)
    for p in points:
        g = point_to_group(p)
        fac = factorize_pkp(g, frame)
        recon = max(recon, np.linalg.norm(fac.product() - g) / np.linalg.norm(g))
        for k in ks:
            kinv = np.linalg.inv(k)
            lhs = factorize_pkp(k @ g @ kinv, frame).p_plus
            equiv = max(equiv, np.linalg.norm(lhs - k @ fac.p_plus @ kinv))
        coords = max(coords, np.abs(zeta_coordinate(p, frame).coords - hc_embed(p).coords).max())
        paths = max(paths, np.abs(eval_section(sec, p, "exp") - eval_section(sec, p, "zeta")).max())
    out["pkp_reconstruction"] = _check(recon, 1e-12)
    out["zeta_equivariance"] = _check(equiv, 1e-12)
    out["zeta_vs_harish_chandra"] = _check(coords, 1e-12)
    out["evaluation_paths"] = _check(paths, 1e-10)

    membership = 0.0
    ref = fiber_decompose(rep)
    for p_level, _, B in ref.components:
        for v in ref.filtration(p_level).T:
            s = build_section(v, p_level, rep, frame)
            for p in points[:4]:
                val = eval_section(s, p)
                F = fiber_decompose(rep, p).filtration(p_level)
                membership = max(membership, span_residual(F, val) / max(1.0, np.linalg.norm(val)))
    out["fiber_membership"] = _check(membership, 1e-10)
    out["holomorphy"] = _check(holomorphy_check(sec, seed=int(rng.integers(2**31))).holdout_residual, 1e-10)

    orbit = 0.0
    for p in points[:4]:
        for e in sc.frames:
            orbit = max(orbit, s1_orbit_check(e, sec, p, pol, 16))
    out["s1_invariance"] = _check(orbit, s1_tol)
    out["k_invariance"] = _check(k_invariance_residual(pol, rep, rng, 10), 1e-11)
    checks = verify_polarization(pol, rep)
    positivity = min(checks["weil_min_eigenvalue"], checks["hodge_min_eigenvalue"])
    out["polarization_positivity"] = _check(positivity, 1e-10, passed=positivity > 1e-10)
    gram = frame_gram_min_det(sc.frames, pol)
    out["frame_gram_min_det"] = _check(gram, 1e-10, passed=gram > 1e-10)
    return {"checks": out, "passed": all(c["passed"] for c in out.values())}


def _timed(timings, key, fn, *args, **kwargs):
    t0 = time.perf_counter()
    result = fn(*args, **kwargs)
    timings[key] = time.perf_counter() - t0
    return result


def verify_scenario(sc):
    cfg = sc.cfg
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    timings = {}
    suites = {}
    tested = sc.tested_section
    integ = None
    if set(cfg.suites) - {"structure"}:
        integ = _timed(timings, "integrator", lambda: sc.integrator)
    if "structure" in cfg.suites:
        suites["structure"] = _timed(timings, "structure", structure_suite, sc, rng)
    if "orthogonality" in cfg.suites:
        rep = _timed(timings, "orthogonality", orthogonality_suite,
                     tested, sc.frames, sc.pol, cfg.max_degree, integ, cfg.parallel)
        suites["orthogonality"] = rep.as_dict()
    if "averaging" in cfg.suites:
        alpha = (1,) + (0,) * (sc.frame.n_coords - 1)
        theta = np.pi / 2 if integ.deterministic else np.pi / 4
        res = _timed(timings, "averaging", s1_averaging_demo, tested, sc.frames, sc.pol, alpha, integ, theta)
        d = res.as_dict()
        tol = 1e-10 if integ.deterministic else 3.0 * res.integral.std_error
        d["twist_check"] = _check(res.twist_residual, 1e-10)
        d["rotated_equals_integral"] = _check(abs(res.rotated.value - res.integral.value),
                                              1e-10 if integ.deterministic else 3.0 * np.hypot(res.rotated.std_error, res.integral.std_error),
                                              passed=None)
        d["vanishing"] = _check(abs(res.integral.value), tol, passed=abs(res.integral.value) <= tol)
        d["passed"] = d["twist_check"]["passed"] and d["vanishing"]["passed"]
        suites["averaging"] = d
    if "competitors" in cfg.suites:
        rep = _timed(timings, "competitors", competitor_test, tested, sc.frames, sc.pol, integ,
                     cfg.trials, cfg.seed)
        suites["competitors"] = rep.as_dict()
    if "constant" in cfg.suites:
        rep = _timed(timings, "constant", extension_constant, tested, sc.pol, integ)
        d = rep.as_dict()
        d["passed"] = rep.strict
        suites["constant"] = d
    return suites, timings


def integrator_metadata(sc):
    if sc.cfg.uses_mc:
        return {"kind": "monte_carlo", "rng": RNG_ALGORITHM, "seed": sc.cfg.seed,
                "n_samples": sc.cfg.mc_samples,
                "n_candidates": sc.integrator.n_candidates if sc._integrator is not None else None}
    return {"kind": "disk_rule", "n_radial": sc.cfg.n_radial, "n_angular": sc.cfg.n_angular}


@dataclass
class RunReport:
    command: str
    scenarios: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    tables: list = field(default_factory=list)

    @property
    def passed(self):
        return all(s.get("passed", True) for s in self.scenarios.values())

    def as_dict(self, include_timings=True):
        out = {
            "schema_version": SCHEMA_VERSION,
            "library": {"name": "l2ext", "version": __version__},
            "command": self.command,
            "measure": "Lebesgue measure on Re/Im of the upper-triangular coordinates of Z "
                       "(fixed g^{-1,1} basis M (x) S_jk)",
            "scenarios": self.scenarios,
            "passed": self.passed,
        }
        if self.tables:
            out["table"] = self.tables
        if include_timings:
            out["timings"] = self.timings
        return out

    def to_json(self, include_timings=True):
        return json.dumps(_jsonable(self.as_dict(include_timings)), sort_keys=True, indent=2) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def strip_timings(report_dict):
    """Copy of a report dictionary without wall-clock fields."""
    return {k: v for k, v in report_dict.items() if k != "timings"}


def _scenario_header(sc):
    return {
        "config": sc.cfg.echo(),
        "representation": sc.rep.label,
        "domain": sc.rep.spec.label,
        "integrator": integrator_metadata(sc),
        "rng": {"algorithm": RNG_ALGORITHM, "seed": sc.cfg.seed},
    }


def run_verify(configs):
    report = RunReport("verify")
    for cfg in configs:
        t0 = time.perf_counter()
        try:
            sc = Scenario.build(cfg)
            suites, timings = verify_scenario(sc)
            entry = _scenario_header(sc)
            entry["suites"] = suites
            entry["passed"] = all(s["passed"] for s in suites.values())
        except L2ExtError as exc:
            entry = {"config": cfg.echo(), "error": f"{type(exc).__name__}: {exc}", "passed": False}
            timings = {}
        timings["total"] = time.perf_counter() - t0
        report.scenarios[cfg.name] = entry
        report.timings[cfg.name] = timings
    return report


def _default_grid(cfg, rng, n=5):
    return random_points(cfg.spec, n, rng)


def _parse_grid(cfg):
    pts = []
    for entry in cfg.grid:
        if cfg.spec.scalar_points:
            pts.append(UnboundedPoint(cfg.spec, complex(*entry) if isinstance(entry, (list, tuple)) else complex(entry)))
        else:
            M = np.array([[complex(*e) for e in row] for row in entry])
            pts.append(UnboundedPoint(cfg.spec, M))
    return pts


def _vec(v):
    return [[float(x.real), float(x.imag)] for x in np.asarray(v, dtype=complex)]


def run_extend(configs):
    report = RunReport("extend")
    for cfg in configs:
        t0 = time.perf_counter()
        try:
            sc = Scenario.build(cfg)
            sec = sc.tested_section
            rng = np.random.Generator(np.random.PCG64(cfg.seed))
            grid = _parse_grid(cfg) if cfg.grid else _default_grid(cfg, rng)
            coeffs = sc.section.coefficients()
            top = sc.rep.top_p
            values = []
            worst = 0.0
            for p in grid:
                val = sec.evaluate_coords(hc_embed(p).coords)
                F = fiber_decompose(sc.rep, p).basis(top)
                r = span_residual(F, val) / max(1.0, np.linalg.norm(val))
                worst = max(worst, r)
                point = p.matrix
                values.append({
                    "point": _vec(point.ravel()),
                    "bounded_coords": _vec(hc_embed(p).coords),
                    "value": _vec(val),
                    "fiber_residual": r,
                })
            entry = _scenario_header(sc)
            entry["base_vector"] = _vec(sc.section.base_vector)
            entry["coordinates"] = "upper-triangular entries of Z in the bounded model"
            entry["coefficients"] = {
                "".join(map(str, a)): _vec(c) for a, c in sorted(coeffs.items())
            }
            entry["degree"] = max((sum(a) for a, c in coeffs.items() if np.abs(c).max() > 0), default=0)
            entry["grid"] = values
            entry["fiber_membership"] = _check(worst, 1e-10)
            entry["passed"] = entry["fiber_membership"]["passed"]
        except L2ExtError as exc:
            entry = {"config": cfg.echo(), "error": f"{type(exc).__name__}: {exc}", "passed": False}
        report.scenarios[cfg.name] = entry
        report.timings[cfg.name] = {"total": time.perf_counter() - t0}
    return report


CSV_COLUMNS = ("scenario", "representation", "domain", "C", "C_std_error", "mu_D", "mu_D_std_error",
               "ratio", "gap", "gap_std_error", "strict_inequality")


def run_constant(configs):
    report = RunReport("constant")
    for cfg in configs:
        t0 = time.perf_counter()
        try:
            sc = Scenario.build(cfg)
            rep = extension_constant(sc.tested_section, sc.pol, sc.integrator)
            entry = _scenario_header(sc)
            entry["constant"] = rep.as_dict()
            entry["passed"] = rep.strict
            report.tables.append({
                "scenario": cfg.name,
                "representation": sc.rep.label,
                "domain": sc.rep.spec.label,
                "C": rep.constant.value.real,
                "C_std_error": rep.constant.std_error,
                "mu_D": rep.volume.value.real,
                "mu_D_std_error": rep.volume.std_error,
                "ratio": rep.ratio,
                "gap": rep.gap.value.real,
                "gap_std_error": rep.gap.std_error,
                "strict_inequality": rep.strict,
            })
        except L2ExtError as exc:
            entry = {"config": cfg.echo(), "error": f"{type(exc).__name__}: {exc}", "passed": False}
        report.scenarios[cfg.name] = entry
        report.timings[cfg.name] = {"total": time.perf_counter() - t0}
    return report


def table_csv(report):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in report.tables:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def summary_lines(report):
    """Aligned plain-text summary, one line per check."""
    rows = []
    for name, entry in report.scenarios.items():
        if "error" in entry:
            rows.append((name, "error", entry["error"], "", "FAIL"))
            continue
        if report.command == "verify":
            for suite, res in entry["suites"].items():
                if suite == "structure":
                    for key, c in res["checks"].items():
                        rows.append((name, f"structure.{key}", f"{c['value']:.3e}", f"{c['tolerance']:.1e}",
                                     "PASS" if c["passed"] else "FAIL"))
                elif suite == "orthogonality":
                    rows.append((name, suite, f"worst |I|/tol = {res['worst_ratio']:.3e}",
                                 f"{len(res['cells'])} cells", "PASS" if res["passed"] else "FAIL"))
                elif suite == "competitors":
                    rows.append((name, suite, f"min diff {res['min_difference']:.3e}",
                                 f"slope {res['scaling_exponent']:.4f}", "PASS" if res["passed"] else "FAIL"))
                elif suite == "constant":
                    rows.append((name, suite, f"C = {res['C']['re']:.12g}", f"mu = {res['mu_D']['re']:.6g}",
                                 "PASS" if res["passed"] else "FAIL"))
                else:
                    rows.append((name, suite, f"|I| = {res['vanishing']['value']:.3e}",
                                 f"{res['vanishing']['tolerance']:.1e}", "PASS" if res["passed"] else "FAIL"))
        elif report.command == "extend":
            c = entry["fiber_membership"]
            rows.append((name, f"degree {entry['degree']}", f"{c['value']:.3e}", f"{c['tolerance']:.1e}",
                         "PASS" if c["passed"] else "FAIL"))
        else:
            c = entry["constant"]
            rows.append((name, "C / mu(D)", f"{c['C']['re']:.10g} / {c['mu_D']['re']:.6g}",
                         f"ratio {c['ratio']:.6f}", "PASS" if entry["passed"] else "FAIL"))
    if not rows:
        return []
    widths = [max(len(str(r[i])) for r in rows) for i in range(5)]
    return ["  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows]
