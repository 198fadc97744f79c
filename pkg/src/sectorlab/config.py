"""key=value run configuration with documented defaults.

One ``key = value`` per line; ``#`` starts a comment.  Numeric values may be
arithmetic expressions in ``pi`` and ``e`` (``pi/2``, ``2*pi/3``).  Unknown
keys are rejected.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass

__all__ = ["ConfigError", "DEFAULTS", "RunConfig", "eval_number", "read_meta", "write_meta"]


class ConfigError(ValueError):
    pass


# key -> (kind, default, description)
DEFAULTS: dict[str, tuple[str, str, str]] = {
    "domain.shape": ("choice:sector,rect", "sector", "sector (disc or annular) or rect"),
    "domain.r_inner": ("float", "0", "inner radius; 0 gives the disc sector"),
    "domain.r_outer": ("float", "1", "outer radius"),
    "domain.beta": ("float", "pi/2", "opening angle (sector) or x1-length (rect)"),
    "domain.width": ("float", "1", "x2-width of the rectangle"),
    "grid.n_r": ("int", "64", "radial (or x2) nodes"),
    "grid.n_theta": ("int", "64", "angular (or x1) nodes"),
    "problem.kind": ("choice:linear,henon,lane_emden,power", "henon", "nonlinearity"),
    "problem.lambda": ("float", "0", "coefficient of the linear problem"),
    "problem.alpha": ("float", "0", "Henon exponent in |x|^alpha u^p"),
    "problem.weight": ("float", "0", "weight exponent of the power kind"),
    "problem.p": ("float", "3", "power, p > 1"),
    "problem.g_outer": ("float", "0", "Dirichlet value on the outer arc"),
    "problem.g_inner": ("float", "0", "Dirichlet value on the inner arc (annulus and rect)"),
    "solver.method": ("choice:ground_state,newton", "ground_state", "solve stage"),
    "solver.tol": ("float", "1e-9", "Newton residual tolerance (M^-1 norm)"),
    "solver.gtol": ("float", "1e-6", "relative Sobolev-gradient tolerance of the Nehari descent"),
    "solver.max_iter": ("int", "3000", "Nehari descent iteration cap"),
    "solver.newton_max_iter": ("int", "50", "Newton iteration cap"),
    "solver.starts": ("str", "radial,biased,mirrored", "multistart set for ground states"),
    "solver.initial": ("str", "bump", "Newton start: bump, eigen:K (K-th H1_gamma mode) or a field path"),
    "solver.initial_scale": ("float", "1", "factor applied to the Newton start"),
    "solver.eig_m": ("int", "4", "eigenpairs computed"),
    "solver.eig_tol": ("float", "1e-7", "eigen residual tolerance (M^-1 norm)"),
    "solver.seed": ("int", "0", "seed of the eigensolver start block"),
    "spectrum.space": ("str", "H1_gamma", "H1_gamma, H1_0 or H1_gamma+alpha[COL]"),
    "spectrum.field": ("str", "", "field file to linearise at; empty means u = 0"),
    "analysis.n_alpha": ("int", "0", "rotating-plane samples; 0 means every interior column"),
    "analysis.c_const": ("float", "10", "theta-constancy factor in c h^2 max|u|"),
    "analysis.alignment_min": ("float", "0.99", "u_theta alignment threshold"),
    "rescale.beta": ("float", "pi/2", "target opening"),
    "rescale.order": ("choice:2,4", "4", "interpolation stencil width (2 bilinear, 4 bicubic)"),
    "rescale.n_r": ("int", "0", "target radial nodes; 0 keeps the source size"),
    "rescale.n_theta": ("int", "0", "target angular nodes; 0 keeps the source size"),
    "rescale.max_residual": ("float", "inf", "residual above which the stage fails"),
    "split.alpha": ("float", "", "cut angle; empty means beta/2"),
    "split.slack_c": ("float", "1", "slack constant C in C h^2 (1 + max|V|)"),
    "output.dir": ("str", "runs/default", "output directory"),
    "output.plots": ("bool", "true", "write SVG heatmaps"),
    "output.eigenvectors": ("bool", "true", "write eigenvector field files"),
}

_BIN = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UN = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}


def eval_number(text: str) -> float:
    """Evaluate a numeric literal or a small arithmetic expression safely."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BIN:
            return _BIN[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UN:
            return _UN[type(node.op)](ev(node.operand))
        raise ConfigError(f"not a number: {text!r}")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except SyntaxError:
        raise ConfigError(f"not a number: {text!r}") from None
    except ZeroDivisionError:
        raise ConfigError(f"division by zero in {text!r}") from None


def _convert(key: str, raw: str):
    kind = DEFAULTS[key][0]
    raw = raw.strip()
    if kind == "float":
        return None if raw == "" else eval_number(raw)
    if kind == "int":
        val = eval_number(raw)
        if val != int(val):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        return int(val)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if kind.startswith("choice:"):
        options = kind[len("choice:") :].split(",")
        if raw not in options:
            raise ConfigError(f"{key}: {raw!r} is not one of {', '.join(options)}")
        return raw
    return raw


def parse_lines(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{n}: expected key = value")
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        out[key] = value.strip()
    return out


@dataclass(frozen=True)
class RunConfig:
    raw: tuple[tuple[str, str], ...]

    @classmethod
    def build(cls, *sources: dict[str, str]) -> "RunConfig":
        """Defaults overlaid by each source in turn; values validated eagerly."""
        merged = {k: v[1] for k, v in DEFAULTS.items()}
        for src in sources:
            for k, v in src.items():
                if k not in DEFAULTS:
                    raise ConfigError(f"unknown key {k!r}")
                merged[k] = v
        for k, v in merged.items():
            _convert(k, v)
        return cls(tuple(sorted(merged.items())))

    @classmethod
    def from_text(cls, text: str, *overrides: dict[str, str], source: str = "<config>") -> "RunConfig":
        return cls.build(parse_lines(text, source), *overrides)

    @classmethod
    def from_file(cls, path, *overrides: dict[str, str]) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), *overrides, source=str(path))

    def __getitem__(self, key: str):
        return _convert(key, dict(self.raw)[key])

    def get_raw(self, key: str) -> str:
        return dict(self.raw)[key]

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.raw)


def parse_overrides(items: list[str] | None) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}")
        out[key] = value.strip()
    return out


def write_meta(path, meta: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{k}={v}\n" for k, v in sorted(meta.items()))


def read_meta(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            k, sep, v = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{n}: expected key=value")
            out[k] = v
    return out
