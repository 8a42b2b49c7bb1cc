"""Lambda sweeps: solve, shoot, classify and write plot-ready artifacts."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import check_bounds, detect_jumps, shooting_class
from .densities import make_density
from .grid_energy import Grid, Signal
from .minimizer import solve
from .signals import StepDatum, gen_signal, read_signal, write_csv

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("lambda", "classification", "u0", "max_slope", "jump_height", "duality_gap")


@dataclass(frozen=True)
class ExperimentSpec:
    family: str = "phi-mu"
    density_params: dict = field(default_factory=lambda: {"mu": 3.0})
    datum: str = "step"  # step | triangle | rectangle | noisy-<base> | csv
    datum_params: dict = field(default_factory=dict)
    csv_path: str | None = None
    lambdas: tuple = ()
    n: int = 1001
    out_dir: str = "out"
    workers: int = 1
    shoot: bool = True

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        if any(not (x > 0 and math.isfinite(x)) for x in lams):
            raise ValueError("lambda values must be positive and finite")
        object.__setattr__(self, "lambdas", lams)
        if self.datum == "csv":
            if self.csv_path is None or not Path(self.csv_path).is_file():
                raise FileNotFoundError(f"datum csv not found: {self.csv_path}")
        if self.n < 2 or self.workers < 1:
            raise ValueError("need n >= 2 and workers >= 1")
        if float(self.datum_params.get("amplitude", 0.0)) < 0:
            raise ValueError("noise amplitude must be nonnegative")
        make_density(self.family, **self.density_params)  # fail early on bad parameters

    def density(self):
        return make_density(self.family, **self.density_params)

    def signal(self) -> Signal:
        if self.datum == "csv":
            return read_signal(self.csv_path)
        return gen_signal(self.datum, self.datum_params, Grid(self.n))

    def is_unit_step(self) -> bool:
        return self.datum == "step" and float(self.datum_params.get("at", 0.5)) == 0.5


def lam_tag(lam: float) -> str:
    return format(lam, "g")


def _one(spec: ExperimentSpec, lam: float) -> dict:
    out = Path(spec.out_dir)
    d = spec.density()
    f = spec.signal()
    tag = lam_tag(lam)
    row = {"lambda": lam, "classification": "error", "u0": math.nan, "max_slope": math.nan,
           "jump_height": math.nan, "duality_gap": math.nan}
    lines = [f"lambda={lam!r}", f"density={spec.family}"]
    lines += [f"{k}={v!r}" for k, v in sorted(spec.density_params.items())]
    lines += [f"datum={spec.datum}", f"n={f.n}"]
    try:
        res = solve(f, d, lam)
        rep = detect_jumps(res, d)
        write_csv(out / f"u_{tag}.csv", {"t": f.grid.nodes, "value": res.u})
        write_csv(out / f"sigma_{tag}.csv", {"t": f.grid.nodes, "value": res.sigma})
        row.update(classification=rep.classification, u0=float(res.u[0]), max_slope=rep.max_slope,
                   jump_height=rep.jump_height, duality_gap=res.duality_gap)
        lines += [f"converged={str(res.converged).lower()}", f"newton_iterations={res.iterations}",
                  f"energy={res.J!r}", f"dual_value={res.dual_value!r}", f"duality_gap={res.duality_gap!r}",
                  f"sigma_defect={res.defect!r}"]
        lines += rep.lines()
        if spec.shoot and spec.is_unit_step():
            cls, sres = shooting_class(d, lam, StepDatum())
            lines += [f"shooting_classification={cls}", f"shooting_u0={sres.u0!r}",
                      f"shooting_residual={sres.residual!r}"]
            if cls == "smooth":
                row["u0"] = sres.u0
                lines += [f"bounds_{ln}" for ln in check_bounds(sres, d, lam).lines()]
    except Exception as exc:  # recorded per lambda, the sweep continues
        log.warning("lambda=%s failed: %s", tag, exc)
        lines.append(f"error={type(exc).__name__}: {exc}")
    (out / f"report_{tag}.txt").write_text("\n".join(lines) + "\n")
    return row


def sweep_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([repr(float(r["lambda"])), r["classification"]] + [repr(float(r[k])) for k in SWEEP_COLUMNS[2:]])
    return buf.getvalue()


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    """Run every lambda of the spec; returns the summary rows (also in sweep.csv)."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lams = list(spec.lambdas)
    if spec.workers > 1 and len(lams) > 1:
        with ProcessPoolExecutor(max_workers=min(spec.workers, len(lams))) as pool:
            rows = list(pool.map(_one, [spec] * len(lams), lams))
    else:
        rows = [_one(spec, lam) for lam in lams]
    (out / "sweep.csv").write_text(sweep_text(rows))
    return rows


def read_sweep(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {k: (v if k == "classification" else float(v)) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


def step_mu3_spec(out_dir="out/step_mu3", workers=1) -> ExperimentSpec:
    """mu = 3, unit step, lambda in {4, 4.16, 5}."""
    return ExperimentSpec(lambdas=(4.0, 4.16, 5.0), out_dir=str(out_dir), workers=workers)


__all__ = ["ExperimentSpec", "run_experiment", "read_sweep", "step_mu3_spec", "lam_tag", "SWEEP_COLUMNS"]
