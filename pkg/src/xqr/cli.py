"""Batch command-line interface.

Subcommands: simulate (testbed datasets), fit-uni / fit-biv (posterior
sampling + summaries), regions (region curves from stored draws),
diagnostics (chain health from stored draws).  Configuration comes from an
optional YAML file merged with command-line flags (flags win); every run
writes a manifest sufficient to reproduce it byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .likelihoods import BivariateSample
from .margins import CensoredSample
from .regions import (
    QuantileTarget,
    default_w_grid,
    summarize_posterior_quantiles,
    summarize_posterior_regions,
    write_region_csv,
)
from .samplers import ChainConfig, PosteriorChain, run_bivariate_chain, run_univariate_chain
from .testbeds import make_testbed

_DEFAULT_P = (1.0 / 750.0, 1.0 / 1500.0, 1.0 / 3000.0)


@dataclass
class RunConfig:
    mode: str = ""
    data: str | None = None
    out_dir: str = "out"
    testbed: str | None = None
    n: int = 1500
    level: float = 0.90
    prior: str = "A"
    m_nb: float = 3.2
    sigma_nb: float = 4.48
    p0_max: float = 0.1
    p1_max: float = 0.1
    iterations: int = 50_000
    burn_in: int = 30_000
    seed: int = 0
    p: tuple[float, ...] = _DEFAULT_P
    quantile_level: float = 0.95
    region_level: float = 0.90
    w_grid: int = 199
    thin: int = 5
    covariate: str | None = None
    covariate_value: float | None = None
    paper_exact_c: bool = False
    fit_dir: str | None = None
    testbed_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError("censoring level must lie in (0,1)")

    def chain_config(self) -> ChainConfig:
        return ChainConfig(
            iterations=self.iterations,
            burn_in=self.burn_in,
            seed=self.seed,
            prior=self.prior,
            m_nb=self.m_nb,
            sigma_nb=self.sigma_nb,
            p0_max=self.p0_max,
            p1_max=self.p1_max,
            paper_exact_c=self.paper_exact_c,
        )


# ---------------------------------------------------------------------------
# CSV I/O


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def load_csv(path, need_y2: bool = False, covariate: str | None = None) -> dict:
    """Read a dataset CSV with columns date?, y1, y2?, <covariate>?.

    Rows missing a value in any used column are dropped (reported); a
    malformed numeric cell raises with its row and column.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [hcol.strip() for hcol in header]
        used = ["y1"] + (["y2"] if need_y2 else []) + ([covariate] if covariate else [])
        for col in used:
            if col not in header:
                raise ValueError(f"{path}: required column {col!r} not in header {header}")
        pos = {col: header.index(col) for col in used}

        rows: list[list[float]] = []
        dropped: list[int] = []
        for i, record in enumerate(reader, start=2):  # header is line 1
            vals = []
            missing = False
            for col in used:
                cell = record[pos[col]].strip() if pos[col] < len(record) else ""
                if cell == "" or cell.upper() in ("NA", "NAN"):
                    missing = True
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(f"{path}: malformed numeric cell at row {i}, column {col!r}: {cell!r}") from None
            if missing:
                dropped.append(i)
            else:
                rows.append(vals)
    if dropped:
        warnings.warn(f"{path}: dropped {len(dropped)} rows with missing values (rows {dropped})", stacklevel=2)
    if not rows:
        raise ValueError(f"{path}: no usable rows")
    arr = np.asarray(rows, dtype=float)
    out = {"y1": arr[:, 0]}
    col = 1
    if need_y2:
        out["y2"] = arr[:, col]
        col += 1
    if covariate:
        out["covariate"] = arr[:, col]
    return out


def _write_csv(path, header, columns, written):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])
    written.append(path)


def _marginal_headers(prefix: str, d: int) -> list[str]:
    loc = ["mu"] if d == 3 else ["beta0", "beta1", "beta2"]
    return [prefix + c for c in loc + ["log_sigma", "gamma"]]


def _write_draws(chain: PosteriorChain, path, written) -> None:
    header = ["iteration"] + _marginal_headers("" if not chain.is_bivariate else "m1_", chain.theta1.shape[1])
    cols = [[str(i) for i in range(chain.theta1.shape[0])]]
    cols += [chain.theta1[:, j] for j in range(chain.theta1.shape[1])]
    if chain.is_bivariate:
        header += _marginal_headers("m2_", chain.theta2.shape[1])
        cols += [chain.theta2[:, j] for j in range(chain.theta2.shape[1])]
        header += ["kappa", "eta"]
        cols.append([str(k) for k in chain.kappa])
        cols.append([";".join(_fmt(v) for v in e) for e in chain.eta])
    header += ["tau1", "accept1"]
    cols += [chain.tau1, [str(int(a)) for a in chain.accept1]]
    if chain.is_bivariate:
        header += ["tau2", "accept2", "accept_dep"]
        cols += [chain.tau2, [str(int(a)) for a in chain.accept2], [str(int(a)) for a in chain.accept3]]
    _write_csv(path, header, cols, written)


def load_draws(path, k, n, burn_in) -> PosteriorChain:
    """Rebuild a PosteriorChain from a draws CSV plus manifest metadata."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    col = {name: i for i, name in enumerate(header)}
    bivariate = "kappa" in col

    def fcol(name):
        return np.array([float(r[col[name]]) for r in rows])

    def theta(prefix):
        names = [name for name in header if name.startswith(prefix)] if prefix else None
        loc = ["beta0", "beta1", "beta2"] if (prefix + "beta0" in col) else ["mu"]
        return np.column_stack([fcol(prefix + c) for c in loc + ["log_sigma", "gamma"]])

    kwargs = {}
    if bivariate:
        kwargs.update(
            theta2=theta("m2_"),
            tau2=fcol("tau2"),
            accept2=fcol("accept2").astype(bool),
            kappa=fcol("kappa").astype(int),
            eta=[np.array([float(v) for v in r[col["eta"]].split(";")]) for r in rows],
            accept3=fcol("accept_dep").astype(bool),
        )
    return PosteriorChain(
        theta1=theta("m1_" if bivariate else ""),
        tau1=fcol("tau1"),
        accept1=fcol("accept1").astype(bool),
        burn_in=burn_in,
        k=tuple(k),
        n=n,
        **kwargs,
    )


# ---------------------------------------------------------------------------
# summaries and manifest


def _param_summary(draws: np.ndarray, names, level: float) -> dict:
    alpha = (1.0 - level) / 2.0
    out = {}
    for j, name in enumerate(names):
        x = draws[:, j]
        out[name] = {
            "mean": float(x.mean()),
            "interval": [float(np.quantile(x, alpha)), float(np.quantile(x, 1.0 - alpha))],
        }
    return out


def _chain_summary(chain: PosteriorChain, config: RunConfig) -> dict:
    idx = chain.retained()
    summary: dict = {
        "n": chain.n,
        "k": list(chain.k),
        "burn_in": chain.burn_in,
        "iterations": int(chain.theta1.shape[0]),
        "acceptance": {"margin1": float(chain.accept1[idx].mean())},
        "tau_final": {"margin1": float(chain.tau1[-1])},
    }
    names1 = _marginal_headers("m1_" if chain.is_bivariate else "", chain.theta1.shape[1])
    summary["parameters"] = _param_summary(chain.theta1[idx], names1, config.quantile_level)
    if chain.is_bivariate:
        names2 = _marginal_headers("m2_", chain.theta2.shape[1])
        summary["parameters"].update(_param_summary(chain.theta2[idx], names2, config.quantile_level))
        summary["acceptance"]["margin2"] = float(chain.accept2[idx].mean())
        summary["acceptance"]["dependence"] = float(chain.accept3[idx].mean())
        summary["tau_final"]["margin2"] = float(chain.tau2[-1])
        kappas, counts = np.unique(chain.kappa[idx], return_counts=True)
        summary["kappa_posterior"] = {int(kk): float(cc / idx.size) for kk, cc in zip(kappas, counts)}
    return summary


def _quantile_summary(chain: PosteriorChain, config: RunConfig) -> dict:
    margins = [1, 2] if chain.is_bivariate else [1]
    out = {}
    for m in margins:
        per_p = summarize_posterior_quantiles(
            chain, config.p, level=config.quantile_level, covariate=config.covariate_value, margin=m
        )
        out[f"margin{m}"] = {
            _fmt(p): {
                "mean": r["mean"],
                "interval": list(r["interval"]),
                "level": r["level"],
                "hist_counts": r["hist_counts"].tolist(),
                "hist_edges": r["hist_edges"].tolist(),
            }
            for p, r in per_p.items()
        }
    return out


def _config_dict(config: RunConfig) -> dict:
    d = asdict(config)
    d["p"] = list(d["p"])
    return d


def _write_manifest(config: RunConfig, out_dir: Path, extra: dict, written) -> None:
    d = _config_dict(config)
    payload = json.dumps(d, sort_keys=True).encode()
    manifest = {
        "config": d,
        "config_sha256": hashlib.sha256(payload).hexdigest(),
        "seed": config.seed,
        "versions": {
            "xqr": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
    }
    manifest.update(extra)
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)


def _write_json(obj, path, written) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)


# ---------------------------------------------------------------------------
# subcommand drivers


def _region_files(chain: PosteriorChain, config: RunConfig, out_dir: Path, written) -> None:
    w = default_w_grid(config.w_grid)
    for i, p in enumerate(config.p):
        target = QuantileTarget(p, chain.k[0], chain.n)
        curve = summarize_posterior_regions(chain, target, w_grid=w, level=config.region_level, thin=config.thin)
        write_region_csv(curve, out_dir / f"region_p{i}.csv")
        written.append(out_dir / f"region_p{i}.csv")


def _load_manifest(fit_dir: Path) -> dict:
    with open(fit_dir / "manifest.json") as fh:
        return json.load(fh)


def run(config: RunConfig) -> int:
    """Execute one mode; on failure remove partial outputs and re-raise."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    stage = "setup"
    try:
        if config.mode == "simulate":
            stage = "simulate"
            if config.testbed is None:
                raise ValueError("simulate requires --testbed")
            spec = make_testbed(config.testbed, **config.testbed_params)
            rng = np.random.default_rng(config.seed)
            data = spec.sample(config.n, rng)
            path = out_dir / "data.csv"
            if getattr(spec, "is_bivariate", False):
                _write_csv(path, ["y1", "y2"], [data[:, 0], data[:, 1]], written)
            else:
                _write_csv(path, ["y1"], [data], written)
            _write_manifest(config, out_dir, {"outputs": ["data.csv"]}, written)

        elif config.mode in ("fit-uni", "fit-biv"):
            stage = "load"
            if config.data is None:
                raise ValueError(f"{config.mode} requires --data")
            cols = load_csv(config.data, need_y2=config.mode == "fit-biv", covariate=config.covariate)
            stage = "fit"
            if config.mode == "fit-uni":
                sample = CensoredSample.from_values(cols["y1"], config.level, covariates=cols.get("covariate"))
                chain = run_univariate_chain(sample, config.chain_config())
            else:
                pairs = np.column_stack([cols["y1"], cols["y2"]])
                sample = BivariateSample.from_pairs(pairs, config.level, covariates=cols.get("covariate"))
                chain = run_bivariate_chain(sample, config.chain_config())
            stage = "write draws"
            _write_draws(chain, out_dir / "draws.csv", written)
            stage = "summaries"
            summary = _chain_summary(chain, config)
            if config.covariate is None or config.covariate_value is not None:
                summary["quantiles"] = _quantile_summary(chain, config)
            _write_json(summary, out_dir / "summary.json", written)
            if config.mode == "fit-biv" and config.covariate is None:
                stage = "regions"
                _region_files(chain, config, out_dir, written)
            stage = "manifest"
            _write_manifest(
                config,
                out_dir,
                {"n": chain.n, "k": list(chain.k), "outputs": sorted(p.name for p in written)},
                written,
            )

        elif config.mode == "regions":
            stage = "load draws"
            if config.fit_dir is None:
                raise ValueError("regions requires --fit-dir pointing at a fit-biv output directory")
            fit_dir = Path(config.fit_dir)
            manifest = _load_manifest(fit_dir)
            chain = load_draws(
                fit_dir / "draws.csv", manifest["k"], manifest["n"], manifest["config"]["burn_in"]
            )
            if not chain.is_bivariate:
                raise ValueError("regions requires bivariate draws")
            stage = "regions"
            _region_files(chain, config, out_dir, written)
            _write_manifest(config, out_dir, {"outputs": sorted(p.name for p in written)}, written)

        elif config.mode == "diagnostics":
            stage = "load draws"
            if config.fit_dir is None:
                raise ValueError("diagnostics requires --fit-dir pointing at a fit output directory")
            fit_dir = Path(config.fit_dir)
            manifest = _load_manifest(fit_dir)
            chain = load_draws(
                fit_dir / "draws.csv", manifest["k"], manifest["n"], manifest["config"]["burn_in"]
            )
            stage = "diagnostics"
            idx = chain.retained()
            diag = {
                "acceptance": _chain_summary(chain, config)["acceptance"],
                "tau": {
                    "margin1": {
                        "final": float(chain.tau1[-1]),
                        "retained_mean": float(chain.tau1[idx].mean()),
                        "retained_sd": float(chain.tau1[idx].std()),
                    }
                },
                "retained_draws": int(idx.size),
            }
            if chain.is_bivariate:
                diag["tau"]["margin2"] = {
                    "final": float(chain.tau2[-1]),
                    "retained_mean": float(chain.tau2[idx].mean()),
                    "retained_sd": float(chain.tau2[idx].std()),
                }
                diag["kappa_posterior"] = _chain_summary(chain, config)["kappa_posterior"]
            _write_json(diag, out_dir / "diagnostics.json", written)
            _write_manifest(config, out_dir, {"outputs": ["diagnostics.json"]}, written)

        else:
            raise ValueError(f"unknown mode {config.mode!r}")
    except Exception as exc:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise RuntimeError(f"stage {stage!r} failed: {exc}") from exc
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub):
    sub.add_argument("--config", help="YAML configuration file; flags override its values")
    sub.add_argument("--out-dir", dest="out_dir")
    sub.add_argument("--seed", type=int)


def _add_fit_common(sub):
    _add_common(sub)
    sub.add_argument("--data")
    sub.add_argument("--level", type=float, help="censoring level (default 0.90)")
    sub.add_argument("--prior", choices=["A", "B", "C"])
    sub.add_argument("--iterations", type=int)
    sub.add_argument("--burn-in", dest="burn_in", type=int)
    sub.add_argument("--p", type=float, nargs="+")
    sub.add_argument("--quantile-level", dest="quantile_level", type=float)
    sub.add_argument("--covariate", help="covariate column name for the quadratic location model")
    sub.add_argument("--covariate-value", dest="covariate_value", type=float)


def _add_region_common(sub):
    sub.add_argument("--region-level", dest="region_level", type=float)
    sub.add_argument("--w-grid", dest="w_grid", type=int)
    sub.add_argument("--thin", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xqr", description="Bayesian extreme quantile (region) estimation")
    sub = parser.add_subparsers(dest="mode", required=True)

    sim = sub.add_parser("simulate", help="draw a testbed dataset and write it as CSV")
    _add_common(sim)
    sim.add_argument("--testbed", choices=sorted(
        ["frechet", "half_t", "inv_gamma", "cauchy2", "trunc_t2", "asymmetric", "clover"]
    ))
    sim.add_argument("--n", type=int)
    sim.add_argument("--nu", type=float, help="trunc_t2 degrees of freedom")
    sim.add_argument("--rho", type=float, help="trunc_t2 correlation")

    uni = sub.add_parser("fit-uni", help="univariate censored-tail fit")
    _add_fit_common(uni)

    biv = sub.add_parser("fit-biv", help="bivariate censored-tail fit with region extraction")
    _add_fit_common(biv)
    _add_region_common(biv)
    biv.add_argument("--m-nb", dest="m_nb", type=float)
    biv.add_argument("--sigma-nb", dest="sigma_nb", type=float)
    biv.add_argument("--p0-max", dest="p0_max", type=float)
    biv.add_argument("--p1-max", dest="p1_max", type=float)
    biv.add_argument("--paper-exact-c", dest="paper_exact_c", action="store_true", default=None)

    reg = sub.add_parser("regions", help="region curves from stored bivariate draws")
    _add_common(reg)
    _add_region_common(reg)
    reg.add_argument("--fit-dir", dest="fit_dir")
    reg.add_argument("--p", type=float, nargs="+")

    diag = sub.add_parser("diagnostics", help="chain diagnostics from stored draws")
    _add_common(diag)
    diag.add_argument("--fit-dir", dest="fit_dir")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_values = yaml.safe_load(fh) or {}
        if not isinstance(file_values, dict):
            raise ValueError(f"{args.config}: expected a mapping of option names to values")
        values.update(file_values)
    for key, val in vars(args).items():
        if key in ("config", "nu", "rho") or val is None:
            continue
        values[key] = val
    tb_params = values.setdefault("testbed_params", {})
    for key in ("nu", "rho"):
        if getattr(args, key, None) is not None:
            tb_params[key] = getattr(args, key)
    if "p" in values:
        values["p"] = tuple(float(p) for p in values["p"])
    return RunConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(config_from_args(args))
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
