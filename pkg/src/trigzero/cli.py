"""Command-line front end: campaigns, moment integrals and verdict suites.

Outputs are bit-stable: CSV floats carry 17 significant digits, JSON keys are
sorted, and every simulate run writes a manifest that reproduces the records
exactly when re-fed through --config.

Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 IO failure.
"""

from __future__ import annotations

import functools
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .chaos_variance import total_variance_constant
from .covariance import kernel_bounds_check
from .errors import CampaignError, NumericError, UsageError
from .experiments import (
    ExperimentConfig,
    IntervalSpec,
    clt_test,
    run_campaign,
    standardize_counts,
)
from .rice import rice_mean, rice_second_moment, window_bounds
from .zeros import oracle_agreement

_EXIT_NUMERIC = 3
_EXIT_IO = 4


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _parse_pi_token(tok: str) -> float:
    tok = tok.strip().lower()
    if tok.endswith("pi"):
        head = tok[:-2]
        mult = 1.0 if head in ("", "+") else float(head)
        return mult * math.pi
    return float(tok)


def parse_interval(text: str) -> IntervalSpec:
    """Parse '0:pi', '0:2pi', general 'a:b' (units of pi allowed), or 'window'."""
    text = text.strip().lower()
    if text == "window":
        return IntervalSpec("window")
    if ":" not in text:
        raise UsageError(f"bad interval {text!r}; expected 'lo:hi' or 'window'")
    lo_s, hi_s = text.split(":", 1)
    try:
        lo, hi = _parse_pi_token(lo_s), _parse_pi_token(hi_s)
    except ValueError as exc:
        raise UsageError(f"bad interval {text!r}: {exc}") from None
    if not 0.0 <= lo < hi <= 2.0 * math.pi + 1e-12:
        raise UsageError("interval must satisfy 0 <= lo < hi <= 2pi")
    return IntervalSpec("original", lo, hi)


def _interval_text(spec: IntervalSpec) -> str:
    if spec.kind == "window":
        return "window"
    return f"{spec.lo / math.pi:g}pi:{spec.hi / math.pi:g}pi"


def _dump_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is None:
        click.echo(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


class _Bundle:
    """Tracks files written by one command so failures leave no partial output."""

    def __init__(self, outdir):
        self.outdir = Path(outdir)
        self.written = []

    def path(self, name):
        self.outdir.mkdir(parents=True, exist_ok=True)
        p = self.outdir / name
        self.written.append(p)
        return p

    def cleanup(self):
        for p in self.written:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _guarded(fn):
    @functools.wraps(fn)
    def runner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (UsageError,) as exc:
            raise click.UsageError(str(exc))
        except (NumericError, CampaignError) as exc:
            click.echo(f"numeric failure: {exc}", err=True)
            sys.exit(_EXIT_NUMERIC)
        except OSError as exc:
            click.echo(f"io failure: {exc}", err=True)
            sys.exit(_EXIT_IO)

    return runner


@click.group()
@click.version_option(__version__)
def main():
    """Zero statistics of random cosine polynomials."""


def _write_records_csv(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("replicate,K,seed,count,method,warnings\n")
        for r in records:
            fh.write(f"{r.replicate},{r.K},{r.seed},{r.count},{r.method},{r.warnings}\n")


def _summary_payload(result):
    return {
        "version": __version__,
        "per_K": [row.as_dict() for row in result.summaries],
        "exclusion_fraction": result.exclusion_fraction,
    }


def _manifest_payload(cfg: ExperimentConfig):
    return {
        "command": "simulate",
        "version": __version__,
        "config": {
            "K": list(cfg.K_list),
            "reps": cfg.replicates,
            "seed": cfg.seed,
            "interval": _interval_text(cfg.interval),
            "alpha": cfg.alpha,
            "ensemble": cfg.ensemble,
            "oversample": cfg.oversample,
        },
    }


def config_from_manifest(doc) -> ExperimentConfig:
    c = doc["config"]
    return ExperimentConfig(
        K_list=tuple(int(k) for k in c["K"]),
        replicates=int(c["reps"]),
        interval=parse_interval(c["interval"]),
        alpha=float(c["alpha"]),
        seed=int(c["seed"]),
        ensemble=c.get("ensemble", "cosine"),
        oversample=int(c.get("oversample", 16)),
    )


@main.command()
@click.option("--K", "k_values", type=int, multiple=True, help="degree (repeatable)")
@click.option("--reps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--interval", "interval_text", default=None, help="0:pi | 0:2pi | a:b | window")
@click.option("--alpha", type=float, default=None, help="window exponent in (0, 1/2)")
@click.option("--ensemble", type=click.Choice(["cosine", "stationary"]), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="manifest JSON; explicit flags override its fields")
@click.option("--out", "outdir", type=click.Path(), required=True)
@_guarded
def simulate(k_values, reps, seed, interval_text, alpha, ensemble, config_path, outdir):
    """Run a zero-count campaign; write records CSV, summary and manifest."""
    if config_path is not None:
        base = config_from_manifest(json.loads(Path(config_path).read_text(encoding="utf-8")))
        cfg = ExperimentConfig(
            K_list=tuple(k_values) or base.K_list,
            replicates=reps if reps is not None else base.replicates,
            interval=parse_interval(interval_text) if interval_text else base.interval,
            alpha=alpha if alpha is not None else base.alpha,
            seed=seed if seed is not None else base.seed,
            ensemble=ensemble or base.ensemble,
            oversample=base.oversample,
        )
    else:
        if not k_values:
            raise UsageError("at least one --K is required")
        cfg = ExperimentConfig(
            K_list=tuple(k_values),
            replicates=reps if reps is not None else 1000,
            interval=parse_interval(interval_text or "0:pi"),
            alpha=alpha if alpha is not None else 0.25,
            seed=seed if seed is not None else 0,
            ensemble=ensemble or "cosine",
        )
    bundle = _Bundle(outdir)
    try:
        result = run_campaign(cfg)
        _write_records_csv(bundle.path("records.csv"), result.records)
        _dump_json(_summary_payload(result), bundle.path("summary.json"))
        _dump_json(_manifest_payload(cfg), bundle.path("manifest.json"))
    except OSError:
        bundle.cleanup()
        raise
    click.echo(f"wrote {len(result.records)} records to {bundle.outdir}")


def _mean_original_axis(K, lo, hi):
    """Zero-count mean over an original-axis interval within [0, 2*pi].

    Intervals reaching past pi are folded through the cosine symmetry
    t <-> 2*pi - t, under which the zero set is invariant.
    """
    value = 0.0
    err = 0.0
    if lo < math.pi:
        res = rice_mean(K, interval=(lo * K, min(hi, math.pi) * K))
        value += res.value
        err += res.quadrature_error_estimate
    if hi > math.pi:
        res = rice_mean(K, interval=((2.0 * math.pi - hi) * K, min(2.0 * math.pi - lo, math.pi) * K))
        value += res.value
        err += res.quadrature_error_estimate
    return value, err


@main.command()
@click.option("--K", "k_value", type=int, required=True)
@click.option("--moment", type=int, default=1)
@click.option("--interval", "interval_text", default="0:pi")
@click.option("--alpha", type=float, default=0.25)
@_guarded
def rice(k_value, moment, interval_text, alpha):
    """Print a Rice moment integral as JSON."""
    if moment not in (1, 2):
        raise UsageError("--moment must be 1 or 2")
    spec = parse_interval(interval_text)
    if moment == 1:
        if spec.kind == "window":
            res = rice_mean(k_value, alpha=alpha)
            value, err, interval = res.value, res.quadrature_error_estimate, res.interval
        else:
            value, err = _mean_original_axis(k_value, spec.lo, spec.hi)
            interval = (spec.lo * k_value, spec.hi * k_value)
    else:
        if spec.kind == "window":
            res = rice_second_moment(k_value, alpha=alpha)
        else:
            res = rice_second_moment(
                k_value, alpha=alpha, interval=(spec.lo * k_value, spec.hi * k_value)
            )
        value, err, interval = res.value, res.quadrature_error_estimate, res.interval
    _dump_json(
        {
            "K": k_value,
            "moment": moment,
            "interval_rescaled": list(interval),
            "value": value,
            "error_estimate": err,
        }
    )


@main.command("chaos-var")
@click.option("--qmax", type=int, default=20)
@click.option("--tail", type=float, default=1e4)
@click.option("--out", "outdir", type=click.Path(), default=None)
@_guarded
def chaos_var(qmax, tail, outdir):
    """Per-order variance constants and their total, as JSON (and CSV)."""
    if qmax < 2:
        # degenerate request: order 1 vanishes identically
        _dump_json({"qmax": qmax, "terms": [], "total": 0.0})
        return
    vc = total_variance_constant(q_max=qmax, tail=tail)
    payload = {
        "qmax": qmax,
        "tail": tail,
        "terms": [
            {
                "q": t.q,
                "sigma_sq": t.sigma_sq,
                "quadrature_error": t.quadrature_error,
            }
            for t in vc.terms
        ],
        "series_tail": vc.series_tail,
        "truncation_indicator": vc.truncation_indicator,
        "total": vc.total,
    }
    _dump_json(payload)
    if outdir is not None:
        bundle = _Bundle(outdir)
        try:
            with open(bundle.path("chaos_terms.csv"), "w", encoding="utf-8", newline="") as fh:
                fh.write("q,sigma_sq,quadrature_error\n")
                for t in vc.terms:
                    fh.write(f"{t.q},{_fmt(t.sigma_sq)},{_fmt(t.quadrature_error)}\n")
        except OSError:
            bundle.cleanup()
            raise


@main.command()
@click.option("--K", "k_value", type=int, required=True)
@click.option("--reps", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", "outdir", type=click.Path(), required=True)
@_guarded
def clt(k_value, reps, seed, outdir):
    """Normality report for standardized zero counts, plus plot data."""
    if reps < 500:
        raise UsageError("--reps must be at least 500")
    cfg = ExperimentConfig(
        K_list=(k_value,),
        replicates=reps,
        interval=IntervalSpec("original", 0.0, math.pi),
        alpha=0.25,
        seed=seed,
    )
    result = run_campaign(cfg)
    counts = result.counts_by_K[k_value]
    report = clt_test(counts, k_value)
    z = standardize_counts(counts, k_value)
    bundle = _Bundle(outdir)
    try:
        _dump_json(report.as_dict(), bundle.path("report.json"))
        with open(bundle.path("standardized.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write("standardized\n")
            for val in z:
                fh.write(_fmt(val) + "\n")
        edges = np.linspace(-5.0, 5.0, 52)
        clipped = np.clip(z, -5.0 + 1e-12, 5.0 - 1e-12)
        hist, _ = np.histogram(clipped, bins=edges)
        with open(bundle.path("histogram.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write("bin_lo,bin_hi,count\n")
            for i in range(51):
                fh.write(f"{_fmt(edges[i])},{_fmt(edges[i + 1])},{int(hist[i])}\n")
    except OSError:
        bundle.cleanup()
        raise
    _dump_json(report.as_dict())


@main.command("oracle-check")
@click.option("--K", "k_values", type=int, multiple=True, default=(5, 10, 20))
@click.option("--reps", type=int, default=200)
@click.option("--seed", type=int, default=0)
@_guarded
def oracle_check(k_values, reps, seed):
    """Cross-validate the scan counter against the eigenvalue oracle."""
    report = oracle_agreement(list(k_values), reps, seed)
    _dump_json(report)
    if not report["passed"]:
        sys.exit(_EXIT_NUMERIC)


@main.command("bounds-check")
@click.option("--K", "k_values", type=int, multiple=True, default=(10, 50, 500))
@click.option("--points", type=int, default=400)
@_guarded
def bounds_check(k_values, points):
    """Check the lag-covariance decay inequalities on log-spaced grids."""
    out = []
    ok = True
    for K in k_values:
        grid = np.geomspace(0.05, K * math.pi, points)
        rep = kernel_bounds_check(K, grid)
        ok &= rep.passed
        out.append(
            {
                "K": K,
                "checked": rep.checked,
                "passed": rep.passed,
                "violation": list(rep.violation) if rep.violation else None,
            }
        )
    _dump_json(out)
    if not ok:
        sys.exit(_EXIT_NUMERIC)


if __name__ == "__main__":
    main()
