"""sectorlab command line.

Exit codes: 0 when every requested stage met its tolerance, 1 when a stage
ran but missed it (or a check came out false), 2 for bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, nonlinear, plotting, spectral
from .config import DEFAULTS, ConfigError, RunConfig, parse_overrides, read_meta, write_meta
from .discretization import (
    FieldFormatError,
    OperatorSet,
    PolarGrid,
    ScalarField,
    assemble_linearized,
    read_field,
    theta_derivative,
    write_field,
)
from .domain import RectDomain, SectorDomain
from .special import BesselError, bessel_j, bessel_zero, critical_angle, eigen_catalog

log = logging.getLogger("sectorlab")

EXIT_OK, EXIT_TOL, EXIT_INPUT = 0, 1, 2


class Artifacts:
    """Files written under one output directory, listed in ``manifest.txt``."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.names: list[str] = []

    def path(self, name: str) -> Path:
        if name not in self.names:
            self.names.append(name)
        return self.root / name

    def text(self, name: str, content: str) -> Path:
        p = self.path(name)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        return p

    def finish(self) -> Path:
        lines = []
        for name in sorted(self.names):
            digest = hashlib.sha256((self.root / name).read_bytes()).hexdigest()
            lines.append(f"{digest}  {name}\n")
        p = self.root / "manifest.txt"
        p.write_text("".join(lines), encoding="utf-8")
        return p


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        digest, _, name = line.partition("  ")
        if len(digest) != 64 or not name:
            raise ValueError(f"bad manifest line {line!r}")
        out[name] = digest
    return out


def verify_manifest(root) -> list[str]:
    """Names whose current content no longer matches the manifest."""
    root = Path(root)
    return [
        name
        for name, digest in read_manifest(root / "manifest.txt").items()
        if hashlib.sha256((root / name).read_bytes()).hexdigest() != digest
    ]


# -- config -> objects --------------------------------------------------------


def build_grid(cfg: RunConfig) -> PolarGrid:
    if cfg["domain.shape"] == "rect":
        dom = RectDomain(cfg["domain.beta"], cfg["domain.width"])
    else:
        dom = SectorDomain(cfg["domain.r_inner"], cfg["domain.r_outer"], cfg["domain.beta"])
    return PolarGrid(dom, cfg["grid.n_r"], cfg["grid.n_theta"])


def build_nonlinearity(cfg: RunConfig) -> nonlinear.Nonlinearity:
    kind = cfg["problem.kind"]
    if kind == "linear":
        return nonlinear.Nonlinearity.linear(cfg["problem.lambda"])
    if kind == "henon":
        return nonlinear.Nonlinearity.henon(cfg["problem.alpha"], cfg["problem.p"])
    if kind == "lane_emden":
        return nonlinear.Nonlinearity.lane_emden(cfg["problem.p"])
    return nonlinear.Nonlinearity.power(cfg["problem.weight"], cfg["problem.p"])


def build_spec(cfg: RunConfig, grid: PolarGrid | None = None) -> nonlinear.ProblemSpec:
    return nonlinear.ProblemSpec(
        grid or build_grid(cfg), build_nonlinearity(cfg), cfg["problem.g_outer"], cfg["problem.g_inner"]
    )


def sidecar(path) -> Path:
    return Path(path).with_suffix(".meta")


def problem_keys(meta: dict[str, str]) -> dict[str, str]:
    return {k: v for k, v in meta.items() if k in DEFAULTS and k.split(".")[0] in ("domain", "grid", "problem")}


def load_solution(path, cfg_sources) -> tuple[ScalarField, RunConfig]:
    """Field plus the config it was produced under: defaults < config < sidecar < --set."""
    field = read_field(path)
    base, overrides = cfg_sources
    meta = read_meta(sidecar(path)) if sidecar(path).exists() else {}
    cfg = RunConfig.build(base, problem_keys(meta), overrides)
    return field, cfg


def config_text(cfg: RunConfig) -> str:
    # the output location is not part of the experiment
    return "".join(f"{k} = {v}\n" for k, v in cfg.raw if k != "output.dir")


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _linearisation(cfg: RunConfig, grid: PolarGrid, space) -> OperatorSet:
    path = cfg["spectrum.field"]
    u = read_field(path) if path else None
    if u is not None and not u.grid.same_as(grid):
        raise ConfigError(f"{path}: field grid does not match the configured grid")
    return assemble_linearized(grid, u, build_nonlinearity(cfg), space)


# -- subcommands ----------------------------------------------------------------


def cmd_bessel(args) -> int:
    rows = ["nu,k,zero"]
    nus = args.nu or [0.0]
    ks = [args.k] if args.k else list(range(1, args.k_max + 1))
    for nu in nus:
        if args.x is not None:
            print(f"J({nu!r},{args.x!r}) = {bessel_j(nu, args.x)!r}")
            continue
        for k in ks:
            rows.append(f"{nu!r},{k},{bessel_zero(nu, k)!r}")
    if len(rows) > 1:
        text = "\n".join(rows) + "\n"
        sys.stdout.write(text)
        if args.csv:
            Path(args.csv).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_critical_angle(args) -> int:
    from .config import eval_number

    target = bessel_zero(0.0, 2) if args.target is None else eval_number(args.target)
    beta = critical_angle(target)
    print(f"beta_hat = {beta!r}")
    print(f"target = {target!r}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, out: Artifacts) -> int:
    grid = build_grid(cfg)
    ops = _linearisation(cfg, grid, cfg["spectrum.space"])
    tol = cfg["solver.eig_tol"]
    spec = spectral.smallest_eigenpairs(ops, min(cfg["solver.eig_m"], ops.n), tol, seed=cfg["solver.seed"])
    morse = spectral.morse_index(spec)
    spectral.write_spectrum_csv(out.path("spectrum.csv"), spec)
    if cfg["output.eigenvectors"]:
        for k in range(len(spec)):
            write_field(out.path(f"eigenvector_{k + 1}.field"), spec.eigenvector(k))
    lines = [
        f"space={spec.space}",
        f"morse.index={morse.index}",
        f"morse.zero_modes={morse.zero_modes}",
        f"morse.zero_tol={morse.zero_tol!r}",
        f"morse.inertia_index={morse.inertia_index}",
        f"morse.undercounted={morse.undercounted}",
        f"inertia_checked={spec.inertia_checked}",
        f"iterations={spec.iterations}",
    ]
    for a, b in spec.near_degenerate(morse.zero_tol):
        lines.append(f"near_degenerate=lambda{a + 1},lambda{b + 1}")
    labels = [spectral.mode_label(spec.eigenvector(k)) for k in range(len(spec))]
    lines.append("modes=" + " ".join(f"({n},{k})" for n, k in labels))
    out.text("morse.txt", "\n".join(lines) + "\n")

    V = ops.potential
    if not grid.cartesian and grid.staggered and spec.space.name == "H1_gamma" and np.ptp(V) == 0 and V.size:
        shift = float(V[0])
        R = grid.dom.r_outer
        rows = ["rank,n,k,exact,discrete,discrete_mode"]
        cat = eigen_catalog(grid.beta, len(spec), len(spec))[: len(spec)]
        for r, ((lam, (n, k)), d, lab) in enumerate(zip(cat, spec.eigenvalues, labels), 1):
            rows.append(f"{r},{n},{k},{lam / R**2 - shift!r},{float(d)!r},({lab[0]};{lab[1]})")
        out.text("catalog.csv", "\n".join(rows) + "\n")
    ok = bool(np.all(spec.residuals <= tol))
    print(f"eigenvalues: {', '.join(f'{x:.8g}' for x in spec.eigenvalues)}")
    print(f"Morse index {morse.index} (zero modes {morse.zero_modes}, zero_tol {morse.zero_tol:.3g})")
    return EXIT_OK if ok else EXIT_TOL


def _newton_start(cfg: RunConfig, grid: PolarGrid) -> ScalarField:
    init = cfg["solver.initial"]
    scale = cfg["solver.initial_scale"]
    if init == "bump":
        u = nonlinear.start_field(grid, "radial")
    elif init.startswith("eigen:"):
        k = int(init.split(":", 1)[1])
        spec = spectral.smallest_eigenpairs(
            assemble_linearized(grid, None, lambda r, u: 0.0 * r), k, cfg["solver.eig_tol"], seed=cfg["solver.seed"]
        )
        u = spec.eigenvector(k - 1)
    else:
        u = read_field(init)
        if not u.grid.same_as(grid):
            raise ConfigError(f"{init}: start field grid does not match the configured grid")
    return ScalarField(grid, scale * u.values)


def cmd_solve(cfg: RunConfig, out: Artifacts) -> int:
    spec = build_spec(cfg)
    tol = cfg["solver.tol"]
    try:
        if cfg["solver.method"] == "ground_state":
            starts = tuple(s.strip() for s in cfg["solver.starts"].split(",") if s.strip())
            rec = nonlinear.ground_state(
                spec, starts=starts, gtol=cfg["solver.gtol"], tol=tol, max_iter=cfg["solver.max_iter"]
            )
        else:
            rec = nonlinear.newton_solve(
                spec, _newton_start(cfg, spec.grid), tol, max_iter=cfg["solver.newton_max_iter"], with_morse=True
            )
    except (nonlinear.NewtonError, nonlinear.GroundStateError) as exc:
        trace = getattr(exc, "trace", [])
        out.text("failure.txt", f"error={exc}\n" + "".join(f"trace.{i}={t!r}\n" for i, t in enumerate(trace)))
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_TOL
    write_field(out.path("solution.field"), rec.field)
    write_meta(out.path("solution.meta"), rec.metadata())
    if rec.candidates:
        cols = ["start", "energy", "residual", "gradient_norm", "descent_iterations", "newton_iterations", "error"]
        rows = [",".join(cols)]
        for c in rec.candidates:
            rows.append(",".join(_fmt(c[k]) if c.get(k) is not None else "" for k in cols).replace("\n", " "))
        out.text("candidates.csv", "\n".join(rows) + "\n")
    if rec.trace:
        out.text("trace.csv", "iteration,residual\n" + "".join(f"{i},{t!r}\n" for i, t in enumerate(rec.trace)))
    if cfg["output.plots"]:
        plotting.write_heatmaps(
            out.path("solution.svg"),
            [(rec.field, "u", "sequential"), (theta_derivative(rec.field), "u_theta", "diverging")],
        )
    print(f"{rec.solver}: residual {rec.residual_norm:.3e}, energy {rec.energy!r}")
    if rec.morse is not None:
        print(f"Morse index {rec.morse.index} (zero modes {rec.morse.zero_modes})")
    return EXIT_OK if rec.residual_norm <= tol else EXIT_TOL


def cmd_classify(args, cfg_sources, out: Artifacts) -> int:
    u, cfg = load_solution(args.field, cfg_sources)
    rep = analysis.classify(
        u,
        build_nonlinearity(cfg),
        c_const=cfg["analysis.c_const"],
        alignment_min=cfg["analysis.alignment_min"],
        eig_tol=cfg["solver.eig_tol"],
    )
    n_alpha = cfg["analysis.n_alpha"] or None
    sweep = analysis.rotating_plane(u, n_alpha)
    analysis.write_report(out.path("classification.txt"), rep)
    analysis.write_sweep_csv(out.path("sweep.csv"), sweep)
    if cfg["output.plots"]:
        plotting.write_heatmaps(
            out.path("classification.svg"),
            [(u, "u", "sequential"), (theta_derivative(u), "u_theta", "diverging")],
        )
    print(f"verdict: {rep.verdict.value}")
    print(f"Morse index (H1_gamma) {rep.morse_index}; lambda1(H1_0) {rep.lambda1_dirichlet:.6g}; "
          f"alignment {rep.utheta_alignment:.6f}")
    for line in rep.implications + rep.flags:
        print(f"  {line}")
    if args.expect and rep.verdict.value != args.expect:
        print(f"expected {args.expect}", file=sys.stderr)
        return EXIT_TOL
    return EXIT_OK


def cmd_rescale(args, cfg_sources, out: Artifacts) -> int:
    u, cfg = load_solution(args.field, cfg_sources)
    p = cfg["problem.p"]
    alpha = cfg["problem.alpha"] if cfg["problem.kind"] == "henon" else cfg["problem.weight"]
    n_r, n_t = cfg["rescale.n_r"] or None, cfg["rescale.n_theta"] or None
    rec = nonlinear.sector_rescale(u, cfg["rescale.beta"], p, alpha, n_r=n_r, n_theta=n_t, order=int(cfg["rescale.order"]))
    write_field(out.path("rescaled.field"), rec.field)
    write_meta(out.path("rescaled.meta"), rec.metadata())
    print(f"weight exponent {rec.spec.nonlinearity.weight!r}, c = {rec.notes['rescale.c']}")
    print(f"residual {rec.residual_norm:.6e}")
    if "rescale.flag" in rec.notes:
        print(f"warning: {rec.notes['rescale.flag']}", file=sys.stderr)
    return EXIT_OK if rec.residual_norm <= cfg["rescale.max_residual"] else EXIT_TOL


def cmd_splitting(cfg: RunConfig, out: Artifacts) -> int:
    grid = build_grid(cfg)
    ops = _linearisation(cfg, grid, "H1_gamma")
    alpha = cfg["split.alpha"]
    if alpha is None:
        alpha = 0.5 * grid.beta
    chk = spectral.splitting_inequality_check(ops, alpha, cfg["solver.eig_tol"], cfg["split.slack_c"])
    lines = [f"{k}={_fmt(getattr(chk, k))}" for k in chk.__dataclass_fields__]
    out.text("split.txt", "\n".join(lines) + "\n")
    print(f"lambda2 = {chk.lhs:.8g} <= max({chk.lam_left:.8g}, {chk.lam_right:.8g}) + {chk.slack:.2g}: {chk.holds}")
    return EXIT_OK if chk.holds else EXIT_TOL


# -- argument parsing -------------------------------------------------------------


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--beta", help="shorthand for --set domain.beta=VALUE")
    p.add_argument("--grid", type=int, help="shorthand for grid.n_r = grid.n_theta = N")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sectorlab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bessel", help="Bessel zeros j_{nu,k} (CSV) or J_nu(x)")
    b.add_argument("--nu", type=float, action="append")
    b.add_argument("--k", type=int)
    b.add_argument("--k-max", type=int, default=5)
    b.add_argument("--x", type=float, help="evaluate J_nu(x) instead of zeros")
    b.add_argument("--csv", help="also write the table here")

    c = sub.add_parser("critical-angle", help="opening beta with j_{pi/beta,1} = target (default j_{0,2})")
    c.add_argument("--target")

    for name, helptext in (
        ("spectrum", "low eigenpairs and Morse index of L_u"),
        ("solve", "Newton solve or Nehari ground state"),
        ("splitting-check", "discrete splitting inequality"),
    ):
        _add_run_options(sub.add_parser(name, help=helptext))
    cl = sub.add_parser("classify", help="symmetry verdict for a solution field")
    cl.add_argument("field")
    cl.add_argument("--expect", choices=[v.value for v in analysis.Verdict])
    _add_run_options(cl)
    rs = sub.add_parser("rescale", help="map a half-disc solution to another opening")
    rs.add_argument("field")
    rs.add_argument("--target-beta", help="shorthand for --set rescale.beta=VALUE")
    _add_run_options(rs)
    return ap


def _config_sources(args) -> tuple[dict[str, str], dict[str, str]]:
    from .config import parse_lines

    base: dict[str, str] = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = parse_lines(fh.read(), args.config)
    over = parse_overrides(args.set)
    if args.beta is not None:
        over["domain.beta"] = args.beta
    if args.grid is not None:
        over["grid.n_r"] = over["grid.n_theta"] = str(args.grid)
    if getattr(args, "target_beta", None) is not None:
        over["rescale.beta"] = args.target_beta
    if args.out is not None:
        over["output.dir"] = args.out
    return base, over


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "bessel":
            return cmd_bessel(args)
        if args.command == "critical-angle":
            return cmd_critical_angle(args)
        sources = _config_sources(args)
        cfg = RunConfig.build(*sources)
        out = Artifacts(cfg["output.dir"])
        if args.command in ("classify", "rescale"):
            handler = cmd_classify if args.command == "classify" else cmd_rescale
            code = handler(args, sources, out)
            _, used = load_solution(args.field, sources)
            out.text("config.txt", config_text(used))
        else:
            handler = {"spectrum": cmd_spectrum, "solve": cmd_solve, "splitting-check": cmd_splitting}[args.command]
            out.text("config.txt", config_text(cfg))
            code = handler(cfg, out)
        out.finish()
        return code
    except (ConfigError, FieldFormatError, BesselError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (spectral.EigenSolverError, ArithmeticError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_TOL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
