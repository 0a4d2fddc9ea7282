"""Experiment runner: dispatch by mode, comparison reports and flat-file output."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .checks import run_checks
from .config import ExperimentConfig
from .covering import MdimEstimate, mdim_bowen_estimate
from .entropy import IntegratedEntropy, integrated_local_entropy, measure_from_descriptor
from .errors import ConfigError, FkError, InstanceTooLarge
from .metrics import average_distance, bowen_distance, fk_distance
from .packing import mdim_packing_estimate
from .systems import orbit

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_RESOURCE = 0, 2, 3, 4
CSV_COLUMNS = ("epsilon", "n", "count", "s_value", "ratio", "r2")
CHAIN_TOL = 1e-9
DIST_MAX_N = 4096  # the n x n distance table stays below ~130 MB


def _clean(value: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(value, float):
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return _clean(value.item())
    return value


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"


def _sampler_measure(cfg: ExperimentConfig) -> str:
    first = cfg.measures[0] if cfg.measures else "uniform"
    return first if first.split(":")[0] in ("uniform", "bernoulli") else "uniform"


# -- comparison of the two sides of the variational principle ---------------

@dataclass
class VpReport:
    config: dict
    rows: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.get("passed") is True for r in self.rows)

    def as_dict(self) -> dict:
        return {"kind": "vp-check", "version": __version__, "config": self.config,
                "claim": "direction only: cover_side >= max(measure_side) - slack; "
                         "equality is not asserted",
                "discretization": "covers and packings use balls centred at sample points; "
                                  "the measure side uses finitely many empirical measures",
                "rows": self.rows, "passed": self.passed}


def _entropies(cfg: ExperimentConfig, system) -> dict[tuple[str, float], IntegratedEntropy | str]:
    window = cfg.measure_window
    out: dict[tuple[str, float], IntegratedEntropy | str] = {}
    for desc in cfg.measures:
        try:
            mu = measure_from_descriptor(system, desc, cfg.m, cfg.seed, window[1])
        except FkError as exc:
            for eps in cfg.epsilon_list:
                out[(desc, eps)] = f"{type(exc).__name__}: {exc}"
            continue
        for eps in cfg.epsilon_list:
            try:
                out[(desc, eps)] = integrated_local_entropy(
                    mu, eps, window, min(cfg.eval_points, len(mu)), cfg.seed)
            except FkError as exc:
                out[(desc, eps)] = f"{type(exc).__name__}: {exc}"
    return out


def run_vp_check(cfg: ExperimentConfig) -> VpReport:
    """Cover (or packing) growth ratios against integrated FK local entropies.

    The ``bowen`` side pairs cover growth with lower local entropies, the
    ``packing`` side pairs packing growth with upper local entropies; both
    are normalised by ``log(1/eps)``.
    """
    if not cfg.measures:
        raise ConfigError("vp-check needs at least one measure")
    system = cfg.make_system()
    sides = ("bowen", "packing") if cfg.side == "both" else (cfg.side,)
    entropies = _entropies(cfg, system)
    report = VpReport(cfg.as_dict())
    for side in sides:
        estimator = mdim_bowen_estimate if side == "bowen" else mdim_packing_estimate
        try:
            est: MdimEstimate | None = estimator(system, cfg.epsilon_list, cfg.sample_size,
                                                 cfg.n_range, cfg.seed, _sampler_measure(cfg))
            cover_error = None
        except FkError as exc:
            est, cover_error = None, f"{type(exc).__name__}: {exc}"
        for k, eps in enumerate(cfg.epsilon_list):
            scale = math.log(1.0 / eps)
            row: dict[str, Any] = {"side": side, "epsilon": eps}
            if est is not None:
                ce = est.estimates[k]
                row.update(cover_side=est.rows[k][2], s_value=ce.s_value, r2=ce.regression_r2,
                           fit_window=list(ce.window), saturated_from=ce.saturated_from,
                           counts=[c for _, c in ce.per_n_counts])
            measure_rows, errors = [], []
            for desc in cfg.measures:
                ent = entropies[(desc, eps)]
                if isinstance(ent, str):
                    errors.append(f"{desc}: {ent}")
                    continue
                measure_rows.append({"measure": desc, "lower": ent.lower / scale,
                                     "upper": ent.upper / scale,
                                     "lower_se": ent.lower_se / scale,
                                     "upper_se": ent.upper_se / scale,
                                     "floored": ent.any_floored})
            row["measure_side"] = measure_rows
            key = "lower" if side == "bowen" else "upper"
            if est is None or not measure_rows:
                row["passed"] = False
                row["failure"] = "; ".join(filter(None, [cover_error, *errors])) or "no estimate"
            else:
                best = max(r[key] for r in measure_rows)
                row["measure_max"] = best
                row["gap"] = row["cover_side"] - best
                row["passed"] = row["gap"] >= -cfg.slack
                if errors:
                    row["measure_errors"] = errors
            row["smallest_epsilon_proxy"] = eps == min(cfg.epsilon_list)
            report.rows.append(row)
    return report


# -- mode runners -------------------------------------------------------------

@dataclass
class Outcome:
    status: int
    files: dict[str, str]  # file suffix -> content
    summary: str


def _mdim_files(cfg: ExperimentConfig, est: MdimEstimate, kind: str) -> tuple[dict, dict]:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for (eps, s_value, ratio), ce in zip(est.rows, est.estimates):
        for n, count in ce.per_n_counts:
            w.writerow([repr(eps), n, count, repr(s_value), repr(ratio), repr(ce.regression_r2)])
    report = {"kind": kind, "version": __version__, "config": cfg.as_dict(),
              "sample_rule": f"{cfg.sample_size} seeded draws from {_sampler_measure(cfg)}; "
                             "ball centres restricted to sample points",
              "estimates": [{"epsilon": eps, "s_value": s, "ratio": r,
                             "r2": ce.regression_r2, "fit_window": list(ce.window),
                             "saturated_from": ce.saturated_from,
                             "counts": [[n, c] for n, c in ce.per_n_counts]}
                            for (eps, s, r), ce in zip(est.rows, est.estimates)],
              "proxy": est.proxy,
              "proxy_rule": "max ratio over the two smallest epsilon values; not extrapolated"}
    plot = "# epsilon ratio\n" + "".join(f"{eps!r} {ratio!r}\n" for eps, _, ratio in est.rows)
    return {"csv": buf.getvalue(), "json": dumps(report), "plot.txt": plot}, report


def _run_growth(cfg: ExperimentConfig, kind: str) -> Outcome:
    system = cfg.make_system()
    fn = mdim_bowen_estimate if kind in ("cover", "mdim-b") else mdim_packing_estimate
    kwargs = {"verify": True} if kind == "cover" else {}
    est = fn(system, cfg.epsilon_list, cfg.sample_size, cfg.n_range, cfg.seed,
             _sampler_measure(cfg), **kwargs)
    files, report = _mdim_files(cfg, est, kind)
    if kind in ("cover", "pack"):
        files.pop("plot.txt")
    lines = [f"epsilon={e!r} s_value={s:.6f} ratio={r:.6f}" for e, s, r in est.rows]
    return Outcome(EXIT_OK, files, "\n".join(lines + [f"proxy={est.proxy:.6f}"]))


def _run_dist(cfg: ExperimentConfig) -> Outcome:
    system = cfg.make_system()
    n = cfg.n or cfg.n_range[0]
    if n > DIST_MAX_N:
        raise InstanceTooLarge(f"dist supports orbit lengths up to {DIST_MAX_N}, got {n}")
    xs = [system.encode(v if system.is_shift else float(v), n=n) for v in (cfg.x, cfg.y)]
    a, b = orbit(system, xs[0], n), orbit(system, xs[1], n)
    fk = fk_distance(a, b, mode=cfg.distance_mode, tol=cfg.tol, certificate=True)
    dn, dbar = bowen_distance(a, b), average_distance(a, b)
    band = system.band + CHAIN_TOL
    chain_fk = fk.value - fk.tolerance <= math.sqrt(dbar) + band
    chain_avg = dbar <= dn + band
    report = {"kind": "dist", "version": __version__, "config": cfg.as_dict(), "n": n,
              "bowen": dn, "average": dbar, "fk": fk.value, "fk_mode": fk.mode,
              "fk_tolerance": fk.tolerance,
              "match_certificate": [list(p) for p in fk.certificate.pairs],
              "chain": {"fk_le_sqrt_average": chain_fk, "average_le_bowen": chain_avg}}
    ok = chain_fk and chain_avg and fk.certificate.verify(a, b, system.band)
    text = (f"n={n} d_n={dn!r} dbar_n={dbar!r} d_FK_n={fk.value!r}\n"
            f"d_FK_n <= sqrt(dbar_n): {chain_fk}; dbar_n <= d_n: {chain_avg}")
    return Outcome(EXIT_OK if ok else EXIT_VERIFY, {"json": dumps(report)}, text)


def _run_entropy(cfg: ExperimentConfig) -> Outcome:
    system = cfg.make_system()
    window = cfg.measure_window
    out = []
    for desc in cfg.measures:
        mu = measure_from_descriptor(system, desc, cfg.m, cfg.seed, window[1])
        for eps in cfg.epsilon_list:
            ent = integrated_local_entropy(mu, eps, window, min(cfg.eval_points, len(mu)), cfg.seed)
            out.append({
                "measure": desc, "source": mu.source, "atoms": len(mu), "epsilon": eps,
                "n_window": list(window), "lower_integral": ent.lower,
                "upper_integral": ent.upper, "lower_se": ent.lower_se, "upper_se": ent.upper_se,
                "any_floored": ent.any_floored,
                "points": [{"lower": p.lower, "upper": p.upper, "floored": p.floored,
                            "per_n": [list(r) for r in p.per_n]} for p in ent.points]})
    report = {"kind": "local-entropy", "version": __version__, "config": cfg.as_dict(),
              "proxy_rule": "lower/upper = min/max of -log(mass)/n over the top half of the window",
              "estimates": out}
    lines = [f"{r['measure']} epsilon={r['epsilon']!r} lower={r['lower_integral']:.6f} "
             f"upper={r['upper_integral']:.6f}" for r in out]
    return Outcome(EXIT_OK, {"json": dumps(report)}, "\n".join(lines))


def _run_vp(cfg: ExperimentConfig) -> Outcome:
    rep = run_vp_check(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("side", "epsilon", "cover_side", "measure_side", "gap", "passed"))
    plot = ["# epsilon ratio side"]
    lines = []
    for r in rep.rows:
        cs, ms, gap = r.get("cover_side"), r.get("measure_max"), r.get("gap")
        w.writerow([r["side"], repr(r["epsilon"]), "" if cs is None else repr(cs),
                    "" if ms is None else repr(ms), "" if gap is None else repr(gap), r["passed"]])
        if cs is not None:
            plot.append(f"{r['epsilon']!r} {cs!r} {r['side']}")
        lines.append(f"{r['side']} epsilon={r['epsilon']!r} cover_side={cs} measure_side={ms} "
                     f"{'PASS' if r['passed'] else 'FAIL'}")
    status = EXIT_OK if rep.passed else EXIT_VERIFY
    return Outcome(status, {"json": dumps(rep.as_dict()), "csv": buf.getvalue(),
                            "plot.txt": "\n".join(plot) + "\n"}, "\n".join(lines))


def _run_lemmas(cfg: ExperimentConfig) -> Outcome:
    res = run_checks(cfg.which, cfg.trials, cfg.seed)
    report = {"kind": "verify-lemmas", "version": __version__, "config": cfg.as_dict(),
              "checks": res}
    ok = all(v["failed"] == 0 for v in res.values())
    lines = [f"{k} {v['check']}: {v['passed']}/{v['trials']} passed" for k, v in res.items()]
    return Outcome(EXIT_OK if ok else EXIT_VERIFY, {"json": dumps(report)}, "\n".join(lines))


def run_mode(cfg: ExperimentConfig) -> Outcome:
    if cfg.mode == "dist":
        return _run_dist(cfg)
    if cfg.mode in ("cover", "pack", "mdim-b", "mdim-p"):
        return _run_growth(cfg, cfg.mode)
    if cfg.mode == "local-entropy":
        return _run_entropy(cfg)
    if cfg.mode == "vp-check":
        return _run_vp(cfg)
    if cfg.mode == "verify-lemmas":
        return _run_lemmas(cfg)
    raise ConfigError(f"unknown mode {cfg.mode!r}")


def write_outputs(cfg: ExperimentConfig, outcome: Outcome) -> list[Path]:
    """Write ``<output>/<mode>.<suffix>`` for every produced file."""
    out = Path(cfg.output_path)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for suffix, content in sorted(outcome.files.items()):
        p = out / f"{cfg.mode}.{suffix}"
        p.write_text(content)
        paths.append(p)
    return paths


def run_experiment(cfg: ExperimentConfig) -> tuple[int, Outcome, list[Path]]:
    """Run one configured mode and write its files; returns the exit status."""
    outcome = run_mode(cfg)
    return outcome.status, outcome, write_outputs(cfg, outcome)
