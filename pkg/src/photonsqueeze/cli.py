"""Command-line interface: state preparation, gates, plot data and the figure pipelines.

Every command writes into ``--out`` and records the files it produced, with
sha256 checksums, in ``manifest.json``.  Exit codes: 0 success, 2 invalid
input or configuration, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .fock import (
    CutoffError,
    DimensionError,
    StateError,
    as_dm,
    embed,
    fidelity,
    make_coherent,
    make_css,
    make_fock,
)
from .gates import (
    AncillaModel,
    LossBudget,
    prepare_experimental_photon,
    subtracted_squeezed_vacuum,
)
from .metrics import (
    anticorrelation,
    coherent_mixture_bound,
    fit_css_amplitude,
    gaussian_mixture_bound,
    metric_curve_beta,
    metric_curve_phase,
)
from .phasespace import (
    GridSupportError,
    marginal,
    marginal_variances,
    marginals_to_csv,
    phase_spread,
    suggested_extent,
    wigner,
    wigner_min,
)
from .serialize import dumps, load_state, save_state, write_text
from .squeezer import ConvergenceError, SqueezeGateConfig, mb_squeeze_channel
from .tomography import maxlik_reconstruct, records_to_csv, sample_quadratures, uniform_phases

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3

FIG2_GAMMAS = (0.26, 0.37, 0.67)
FIG3_GAMMA = -0.26
FIG3_ALPHA = 0.97


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- configuration


@dataclass(frozen=True)
class TomographySettings:
    phases: int = 12
    samples: int = 100_000
    bin_width: float = 0.1
    max_iters: int = 2000
    tol: float = 1e-9
    efficiency: float = 1.0
    cutoff: int = 15

    def __post_init__(self):
        if self.phases < 1 or self.samples < self.phases:
            raise ConfigError("tomography needs >= 1 phase and >= 1 sample per phase")
        if self.bin_width <= 0 or not 0 < self.efficiency <= 1 or self.cutoff < 2:
            raise ConfigError("invalid tomography settings")


@dataclass(frozen=True)
class RunConfig:
    cutoff: int = 40
    seed: int = 0
    input_state: dict = field(default_factory=lambda: {"kind": "experimental-photon"})
    gate: dict = field(default_factory=lambda: {"gamma": 0.26, "ancilla": "paper"})
    loss_budget: dict = field(default_factory=dict)
    tomography: TomographySettings = field(default_factory=TomographySettings)
    dephasing_stddev: float = 0.0
    out: str = "out"

    def __post_init__(self):
        if self.cutoff < 3:
            raise ConfigError("cutoff must be at least 3")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.dephasing_stddev < 0:
            raise ConfigError("dephasing_stddev must be non-negative")

    def validate(self) -> "RunConfig":
        """Build every sub-configuration once so invalid input fails before a run."""
        self.budget()
        self.gate_config()
        self.prepare_input()
        return self

    def budget(self) -> LossBudget:
        b = dict(self.loss_budget)
        if not b or b.get("preset") == "paper":
            return LossBudget.paper(b.get("single_photon_fraction", 0.84))
        if b.get("preset") == "ideal":
            return LossBudget.ideal()
        b.pop("preset", None)
        return LossBudget(**b)

    def gate_config(self, gamma: float | None = None) -> SqueezeGateConfig:
        return gate_from_spec({**self.gate, **({} if gamma is None else {"gamma": gamma})})

    def prepare_input(self):
        return prepare_state(self.input_state, self.cutoff, self.budget())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "tomography" in d:
            d["tomography"] = TomographySettings(**d["tomography"])
        return cls(**d)


def gate_from_spec(spec: dict) -> SqueezeGateConfig:
    gamma = float(spec["gamma"])
    anc = spec.get("ancilla", "paper")
    if anc == "paper":
        model = AncillaModel.paper()
    elif anc == "ideal":
        model = AncillaModel.pure(float(spec.get("squeezed_variance", 5e-5)))
    elif isinstance(anc, dict) and "squeezing_db" in anc:
        model = AncillaModel.from_db(float(anc["squeezing_db"]), float(anc["antisqueezing_db"]))
    elif isinstance(anc, dict) and "squeezed_variance" in anc:
        model = AncillaModel(float(anc["squeezed_variance"]), float(anc["antisqueezed_variance"]))
    else:
        raise ConfigError(f"unrecognized ancilla spec {anc!r}")
    return SqueezeGateConfig.with_ancilla(
        gamma, model,
        feedforward_gain=spec.get("feedforward_gain"),
        quadrature_nodes=int(spec.get("quadrature_nodes", 64)),
    )


def prepare_state(spec: dict, N: int, budget: LossBudget):
    kind = spec.get("kind")
    if kind == "fock":
        return make_fock(int(spec.get("n", 1)), N)
    if kind == "coherent":
        a = spec.get("alpha", 1.0)
        return make_coherent(complex(*a) if isinstance(a, list) else complex(a), N)
    if kind == "css":
        return make_css(float(spec.get("alpha", FIG3_ALPHA)), spec.get("parity", "odd"), N)
    if kind == "experimental-photon":
        if "single_photon_fraction" in spec:
            budget = LossBudget.paper(float(spec["single_photon_fraction"]))
        return prepare_experimental_photon(budget, N)
    if kind == "subtracted-squeezed":
        return subtracted_squeezed_vacuum(float(spec.get("r", 0.3)), N)
    raise ConfigError(f"unknown input state kind {kind!r}")


# ---------------------------------------------------------------- run context


class Run:
    """Output directory plus a manifest of emitted files."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / "manifest.json"
        self.manifest = json.loads(path.read_text()) if path.exists() else {"stages": {}}
        self.command = command
        self.files: dict[str, str] = {}

    def text(self, name: str, text: str):
        self.files[name] = write_text(self.out / name, text)

    def json(self, name: str, obj):
        self.text(name, dumps(obj))

    def state(self, name: str, state, metadata=None):
        self.files[name] = save_state(self.out / name, state, metadata)

    def finish(self, extra: dict | None = None):
        # The output location is left out so relocated runs stay byte-identical.
        self.manifest["config"] = {k: v for k, v in self.cfg.to_dict().items() if k != "out"}
        self.manifest["versions"] = {"photonsqueeze": __version__, "numpy": np.__version__,
                                     "scipy": scipy.__version__}
        self.manifest.setdefault("seeds", {})[self.command] = self.cfg.seed
        self.manifest["stages"][self.command] = {"files": dict(sorted(self.files.items())), **(extra or {})}
        write_text(self.out / "manifest.json", dumps(self.manifest))


# ---------------------------------------------------------------- commands


def cmd_prepare(cfg: RunConfig, args) -> dict:
    run = Run(cfg, "prepare")
    state = cfg.prepare_input()
    run.state(args.name, state, {"input_state": cfg.input_state})
    pops = as_dm(state).populations()
    summary = {"state": args.name, "populations": [float(p) for p in pops[:6]]}
    run.finish(summary)
    return summary


def cmd_apply(cfg: RunConfig, args) -> dict:
    run = Run(cfg, "apply")
    rho = load_state(args.state)
    gate = cfg.gate_config(args.gamma)
    out = mb_squeeze_channel(rho, gate, dephasing_stddev=cfg.dephasing_stddev)
    run.state(args.name, out, {"gate": gate.to_dict(), "dephasing_stddev": cfg.dephasing_stddev})
    value, loc = wigner_min(out)
    summary = {"state": args.name, "wigner_min": value, "wigner_min_at": loc}
    run.finish(summary)
    return summary


def _wigner_outputs(run: Run, tag: str, rho, extent=None, points=201) -> dict:
    half = suggested_extent(rho) if extent is None else extent
    g = wigner(rho, (-half, half), nx=points)
    run.text(f"wigner_{tag}.csv", g.to_csv())
    value, loc = wigner_min(rho)
    return {"wigner_min": value, "wigner_min_at": list(loc), "extent": half}


def cmd_wigner(cfg: RunConfig, args) -> dict:
    run = Run(cfg, "wigner")
    rho = load_state(args.state)
    summary = _wigner_outputs(run, Path(args.state).stem, rho, args.extent, args.points)
    run.finish(summary)
    return summary


def _marginal_outputs(run: Run, tag: str, rho, n_phases: int) -> dict:
    phases = np.arange(n_phases) * 2 * np.pi / n_phases
    half = suggested_extent(rho, sigmas=7.0)
    xs = np.linspace(-half, half, 401)
    run.text(f"marginals_{tag}.csv", marginals_to_csv(marginal(rho, th, xs) for th in phases))
    var = marginal_variances(rho, phases)
    rows = "theta,variance\n" + "".join(f"{t:.12f},{v:.12e}\n" for t, v in zip(phases, var))
    run.text(f"variances_{tag}.csv", rows)
    return {"variance_spread": phase_spread(var), "variance_min": float(var.min()),
            "variance_max": float(var.max())}


def cmd_marginals(cfg: RunConfig, args) -> dict:
    run = Run(cfg, "marginals")
    rho = load_state(args.state)
    summary = _marginal_outputs(run, Path(args.state).stem, rho, args.phases)
    run.finish(summary)
    return summary


def cmd_metrics(cfg: RunConfig, args) -> dict:
    run = Run(cfg, "metrics")
    rho = load_state(args.state)
    tag = Path(args.state).stem
    betas = np.linspace(args.beta_max / args.beta_points, args.beta_max, args.beta_points)
    curve = metric_curve_beta(rho, betas, label=tag)
    run.text(f"metrics_{tag}.csv", curve.to_csv())
    report = {"d_max": curve.d_max, "v_min": curve.v_min}
    if args.anticorrelation:
        report["anticorrelation"] = anticorrelation(rho, args.eta, args.singles).to_dict()
    if args.fit:
        a, f = fit_css_amplitude(rho)
        report["css_fit"] = {"alpha": a, "fidelity": f}
    run.json(f"metrics_{tag}.json", report)
    run.finish(report)
    return report


def cmd_tomo(cfg: RunConfig, args) -> dict:
    run = Run(cfg, "tomo")
    rho = load_state(args.state)
    tag = Path(args.state).stem
    t = cfg.tomography
    per_phase = -(-t.samples // t.phases)
    recs = sample_quadratures(rho, uniform_phases(t.phases), per_phase, cfg.seed)
    run.text(f"records_{tag}.csv", records_to_csv(recs))
    rep = maxlik_reconstruct(recs, t.cutoff, t.efficiency, t.max_iters, t.tol, t.bin_width)
    est = embed(rep.rho, rho.dim) if rho.dim >= t.cutoff else rep.rho
    truth = rho if rho.dim >= t.cutoff else embed(rho, t.cutoff)
    report = {
        **rep.metadata(),
        "seed": cfg.seed,
        "phases": t.phases,
        "samples_per_phase": per_phase,
        "fidelity_to_truth": fidelity(est, truth),
        "wigner_min_truth": wigner_min(rho)[0],
        "wigner_min_reconstructed": wigner_min(rep.rho)[0],
        "populations": [float(p) for p in rep.rho.populations()[:6]],
    }
    run.state(f"reconstruction_{tag}.json", rep.rho, report)
    run.finish(report)
    if not rep.converged:
        raise ConvergenceError("reconstruction did not converge; artifacts were written")
    return report


# ---------------------------------------------------------------- figure pipelines


def _photon_table(states: dict, n_max: int = 10) -> str:
    names = list(states)
    lines = ["n," + ",".join(names)]
    pops = {k: embed(as_dm(v), max(v.dim, n_max)).populations() for k, v in states.items()}
    for n in range(n_max):
        lines.append(f"{n}," + ",".join(f"{pops[k][n]:.12e}" for k in names))
    return "\n".join(lines) + "\n"


def reproduce_fig2(run: Run, cfg: RunConfig) -> dict:
    photon = prepare_experimental_photon(cfg.budget(), cfg.cutoff)
    states = {"input": photon}
    for g in FIG2_GAMMAS:
        states[f"gamma_{g:.2f}"] = mb_squeeze_channel(
            photon, cfg.gate_config(g), dephasing_stddev=cfg.dephasing_stddev)
    summary: dict = {"gammas": list(FIG2_GAMMAS), "states": {}}
    for i, (tag, rho) in enumerate(states.items()):
        run.state(f"state_{tag}.json", rho)
        info = _wigner_outputs(run, tag, rho)
        info.update(_marginal_outputs(run, tag, rho, 24))
        a, f = fit_css_amplitude(rho)
        info["css_fit"] = {"alpha": a, "fidelity": f}
        recs = sample_quadratures(rho, uniform_phases(12), 1000, [cfg.seed, i])
        run.text(f"records_{tag}.csv", records_to_csv(recs))
        summary["states"][tag] = info
    run.text("photon_numbers.csv", _photon_table(states))
    run.json("summary.json", summary)
    return summary


def reproduce_fig3(run: Run, cfg: RunConfig) -> dict:
    css = make_css(FIG3_ALPHA, "odd", cfg.cutoff)
    gate = cfg.gate_config(FIG3_GAMMA)
    ideal = SqueezeGateConfig.ideal(FIG3_GAMMA)
    states = {
        "input": css,
        "output": mb_squeeze_channel(css, gate, dephasing_stddev=cfg.dephasing_stddev),
        "output_ideal_ancilla": mb_squeeze_channel(css, ideal),
    }
    summary: dict = {"gamma": FIG3_GAMMA, "alpha": FIG3_ALPHA, "states": {}}
    one = make_fock(1, cfg.cutoff)
    for i, (tag, rho) in enumerate(states.items()):
        run.state(f"state_{tag}.json", rho)
        info = _wigner_outputs(run, tag, rho)
        info.update(_marginal_outputs(run, tag, rho, 24))
        info["fidelity_single_photon"] = fidelity(rho, one)
        info["anticorrelation"] = anticorrelation(rho).a_value
        recs = sample_quadratures(rho, uniform_phases(12), 1000, [cfg.seed, i])
        run.text(f"records_{tag}.csv", records_to_csv(recs))
        summary["states"][tag] = info
    run.text("photon_numbers.csv", _photon_table(states))
    run.json("summary.json", summary)
    return summary


def _suppl_states(cfg: RunConfig) -> dict:
    photon = prepare_experimental_photon(cfg.budget(), cfg.cutoff)
    states = {"single_photon": photon}
    for g in FIG2_GAMMAS:
        states[f"gamma_{g:.2f}"] = mb_squeeze_channel(photon, cfg.gate_config(g))
    return states


def reproduce_supplfig1(run: Run, cfg: RunConfig) -> dict:
    betas = np.round(np.linspace(0.05, 2.5, 50), 10)
    coh = np.array([coherent_mixture_bound(b) for b in betas])
    gau = np.array([gaussian_mixture_bound(b) for b in betas])
    summary = {"states": {}}
    ideal_one = make_fock(1, cfg.cutoff)
    states = {"ideal_single_photon": ideal_one, **_suppl_states(cfg)}
    for tag, rho in states.items():
        c = metric_curve_beta(rho, betas, label=tag)
        run.text(f"dv_{tag}.csv", c.to_csv({"coherent_bound": coh, "gaussian_bound": gau}))
        summary["states"][tag] = {"d_max": c.d_max, "v_min": c.v_min,
                                  "below_gaussian_bound": bool(np.any(c.v_values < gau))}
    run.json("summary.json", summary)
    return summary


def reproduce_supplfig2(run: Run, cfg: RunConfig) -> dict:
    betas = np.linspace(0.05, 2.5, 246)
    phases = np.round(np.linspace(0.0, 2 * np.pi, 73), 12)
    summary = {"states": {}}
    states = {"ideal_single_photon": make_fock(1, cfg.cutoff), **_suppl_states(cfg)}
    for tag, rho in states.items():
        c = metric_curve_beta(rho, betas, label=tag)
        bd, bv = c.d_max[0], c.v_min[0]
        cd = metric_curve_phase(rho, bd, phases, label=tag)
        cv = metric_curve_phase(rho, bv, phases, label=tag)
        run.text(f"phase_d_{tag}.csv", cd.to_csv())
        run.text(f"phase_v_{tag}.csv", cv.to_csv())
        summary["states"][tag] = {
            "beta0_d": bd, "beta0_v": bv,
            "d_modulation": float(np.ptp(cd.d_values)), "v_modulation": float(np.ptp(cv.v_values)),
        }
    run.json("summary.json", summary)
    return summary


FIGURES = {
    "fig2": reproduce_fig2,
    "fig3": reproduce_fig3,
    "supplfig1": reproduce_supplfig1,
    "supplfig2": reproduce_supplfig2,
}


def cmd_reproduce(cfg: RunConfig, args) -> dict:
    out = Path(cfg.out) / args.figure
    fig_cfg = replace(cfg, out=str(out))
    run = Run(fig_cfg, f"reproduce-{args.figure}")
    summary = FIGURES[args.figure](run, fig_cfg)
    run.finish({"summary": "summary.json"})
    return summary


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="photonsqueeze", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--cutoff", type=int, help="Fock cutoff N")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dephasing", type=float, help="gate phase jitter (radians, std dev)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prepare", help="prepare an input state")
    s.add_argument("--state", choices=["fock", "coherent", "css", "experimental-photon",
                                       "subtracted-squeezed"])
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--alpha", type=float, default=FIG3_ALPHA)
    s.add_argument("--parity", choices=["odd", "even"], default="odd")
    s.add_argument("--r", type=float, default=0.3)
    s.add_argument("--name", default="state.json")

    s = sub.add_parser("apply", help="apply the measurement-based squeezer")
    s.add_argument("state", type=Path)
    s.add_argument("--gamma", type=float)
    s.add_argument("--ancilla", choices=["paper", "ideal"])
    s.add_argument("--name", default="output.json")

    s = sub.add_parser("wigner", help="Wigner grid CSV and minimum")
    s.add_argument("state", type=Path)
    s.add_argument("--extent", type=float)
    s.add_argument("--points", type=int, default=201)

    s = sub.add_parser("marginals", help="quadrature marginals over a period")
    s.add_argument("state", type=Path)
    s.add_argument("--phases", type=int, default=24)

    s = sub.add_parser("metrics", help="D/V curves, anticorrelation, CSS fit")
    s.add_argument("state", type=Path)
    s.add_argument("--beta-max", type=float, default=2.5)
    s.add_argument("--beta-points", type=int, default=50)
    s.add_argument("--anticorrelation", action="store_true")
    s.add_argument("--eta", type=float, default=1.0)
    s.add_argument("--singles", choices=["marginal", "exactly-one"], default="marginal")
    s.add_argument("--fit", action="store_true")

    s = sub.add_parser("tomo", help="simulate homodyne records and reconstruct")
    s.add_argument("state", type=Path)
    s.add_argument("--phases", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--tomo-cutoff", type=int)

    s = sub.add_parser("reproduce", help="run a figure pipeline")
    s.add_argument("figure", choices=sorted(FIGURES))
    return p


def config_from_args(args) -> RunConfig:
    base = json.loads(args.config.read_text()) if args.config else {}
    cfg = RunConfig.from_dict(base)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.cutoff is not None:
        over["cutoff"] = args.cutoff
    if args.out is not None:
        over["out"] = args.out
    if args.dephasing is not None:
        over["dephasing_stddev"] = args.dephasing
    if args.command == "prepare" and args.state:
        over["input_state"] = {"kind": args.state, "n": args.n, "alpha": args.alpha,
                               "parity": args.parity, "r": args.r}
    if args.command == "apply":
        gate = dict(cfg.gate)
        if args.gamma is not None:
            gate["gamma"] = args.gamma
        if args.ancilla:
            gate["ancilla"] = args.ancilla
        over["gate"] = gate
    if args.command == "tomo":
        t = asdict(cfg.tomography)
        for key, val in (("phases", args.phases), ("samples", args.samples), ("cutoff", args.tomo_cutoff)):
            if val is not None:
                t[key] = val
        over["tomography"] = TomographySettings(**t)
    return replace(cfg, **over).validate()


COMMANDS = {
    "prepare": cmd_prepare,
    "apply": cmd_apply,
    "wigner": cmd_wigner,
    "marginals": cmd_marginals,
    "metrics": cmd_metrics,
    "tomo": cmd_tomo,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        summary = COMMANDS[args.command](cfg, args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ConfigError, StateError, CutoffError, DimensionError, GridSupportError,
            ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(dumps(summary), end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
