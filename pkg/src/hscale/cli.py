"""Command-line front end: ``hscale <command> [options]``.

Every command accepts ``--config FILE`` with ``key = value`` lines (keys
are the long option names; repeating a key builds a list) and ``--output
FILE``.  Numbers are printed with 12 significant digits.  Exit codes: 0
success, 2 parse error, 3 invalid setup, 4 incompatible right-hand side,
5 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import errors
from .params import (
    InterpolationSetup,
    certify_or,
    matuszewska_indices,
    parse,
)

EXIT_OK, EXIT_PARSE, EXIT_SETUP, EXIT_INCOMPATIBLE, EXIT_NUMERICAL = 0, 2, 3, 4, 5

DEFAULT_SETUPS = (
    "0 3 * (pow 1) (logpow 2)",
    "-1 1 pow 0.5",
    "0 2 * (pow 1) (logpow 1)",
)


def g(v):
    return f"{v:.12g}"


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment; repeated keys become lists."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise errors.ParseError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key in out:
                prev = out[key]
                out[key] = (prev if isinstance(prev, list) else [prev]) + [value]
            else:
                out[key] = value
    return out


def _phi(text):
    return parse(text)


# -- commands --------------------------------------------------------------

def cmd_indices(args):
    idx = matuszewska_indices(_phi(args.phi), T=args.T)
    lines = [f"sigma0={g(idx.sigma0)} sigma1={g(idx.sigma1)}", f"provenance={idx.provenance}"]
    if idx.provenance == "analytic":
        lines.append(f"lower_attained={str(idx.lower_attained).lower()} "
                     f"upper_attained={str(idx.upper_attained).lower()}")
    else:
        lines.append(f"window=[{g(idx.window[0])}, {g(idx.window[1])}] grid={idx.grid[0]}x{idx.grid[1]}")
    return "\n".join(lines) + "\n"


def cmd_or_certify(args):
    cert = certify_or(_phi(args.phi), a=args.a, T=args.T, grid=args.grid)
    return str(cert) + "\n"


def _section_or_random(args, rank=1):
    from .torus_spaces import FrequencyLattice, SpectralSection

    if getattr(args, "section", None):
        with open(args.section, encoding="utf-8") as fh:
            return SpectralSection.from_jsonl(fh.read())
    lat = FrequencyLattice(args.n, args.N)
    return SpectralSection.random(lat, rank, np.random.default_rng(args.seed), args.decay)


def _parse_setup(text):
    parts = text.split(None, 2)
    if len(parts) != 3:
        raise errors.ParseError(f"setup must be 's0 s1 PHI', got {text!r}")
    try:
        s0, s1 = float(parts[0]), float(parts[1])
    except ValueError:
        raise errors.ParseError(f"bad exponents in setup {text!r}") from None
    return InterpolationSetup(s0, s1, parse(parts[2]))


def cmd_interp_verify(args):
    from .interpolation import DeviationRecord, deviation_csv, verify_prop1_identity

    setups = args.setup or list(DEFAULT_SETUPS)
    u = _section_or_random(args)
    records = []
    for text in setups:
        setup = _parse_setup(text)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            dev = verify_prop1_identity(setup, u)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        records.append(DeviationRecord("prop1_identity", text, dev, args.tol))
    return deviation_csv(records)


_KIND = {"Compact": "COMPACT", "ContinuousDense": "CONTINUOUS_DENSE",
         "NoEmbedding": "NO_EMBEDDING", "Indeterminate": "INDETERMINATE",
         "Embeds": "EMBEDS", "Fails": "FAILS"}


def _cq_text(v):
    line = f"{_KIND[v.kind]} confidence={v.confidence}"
    if v.integral is not None:
        line += f" integral={g(v.integral)}"
    return line + "\n"


def cmd_embed(args):
    from .torus_spaces import cq_embedding_check, embedding_check

    if args.phi is not None:
        if args.q is None:
            raise CLIError("--phi requires --q (and optionally --n)", EXIT_SETUP)
        return _cq_text(cq_embedding_check(_phi(args.phi), args.q, args.n))
    if args.phi1 is None or args.phi2 is None:
        raise CLIError("give --phi1 and --phi2, or --phi with --q", EXIT_SETUP)
    v = embedding_check(_phi(args.phi1), _phi(args.phi2), T=args.T)
    return f"{_KIND[v.kind]} confidence={v.confidence}\n"


def cmd_cq_embed(args):
    from .torus_spaces import cq_embedding_check

    return _cq_text(cq_embedding_check(_phi(args.phi), args.q, args.n))


def cmd_norm(args):
    from .torus_spaces import h_norm, norm_reports_csv

    u = _section_or_random(args, rank=args.rank)
    return norm_reports_csv([h_norm(u, _phi(p)) for p in args.phi])


def _system(path):
    from .psdo import parse_system

    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read(), name=path)


def _rhs(args, A):
    from .torus_spaces import FrequencyLattice, SpectralSection

    if args.f:
        with open(args.f, encoding="utf-8") as fh:
            return SpectralSection.from_jsonl(fh.read())
    if args.mode is None:
        raise CLIError("give --f FILE or --mode K", EXIT_SETUP)
    lat = FrequencyLattice(A.n, args.N)
    k = tuple(int(v) for v in args.mode.split(","))
    return SpectralSection.single_mode(lat, k, rank=A.p, component=args.component)


def cmd_solve(args):
    from .psdo import fredholm_solve

    A = _system(args.system)
    rep = fredholm_solve(A, _rhs(args, A), _phi(args.phi))
    out = rep.to_json() + "\n"
    if not rep.solvable:
        raise CLIError(f"incompatible right-hand side: max |<f, w>| = {g(rep.max_pairing)}",
                       EXIT_INCOMPATIBLE, ) from _Partial(out)
    return out


class _Partial(Exception):
    """Carries output to emit before a nonzero exit."""

    def __init__(self, text):
        super().__init__("partial output")
        self.text = text


def cmd_regularity(args):
    from .psdo import regularity_experiment
    from .torus_spaces import FrequencyLattice, SpectralSection

    A = _system(args.system)
    phi = _phi(args.phi)
    Ns = sorted(args.N or [16, 32, 64, 128])
    lat = FrequencyLattice(A.n, max(Ns))
    rows = ["decay,N,u_norm,f_norm,beta_u,beta_f,u_converges,f_converges,agree"]
    for a in args.decay:
        coeffs = (lat.bracket ** (-a))[:, None] * np.ones((1, A.p))
        rep = regularity_experiment(A, phi, SpectralSection(lat, coeffs), Ns)
        for r in rep.rows:
            rows.append(",".join([g(a), str(r.N), g(r.u_norm), g(r.f_norm), g(r.beta_u),
                                  g(r.beta_f), str(r.u_converges).lower(),
                                  str(r.f_converges).lower(), str(r.agree).lower()]))
    return "\n".join(rows) + "\n"


def cmd_apriori(args):
    from .psdo import LocalizationWindow, apriori_estimate

    A = _system(args.system)
    window = (LocalizationWindow.global_window() if args.window == "global"
              else LocalizationWindow(tuple(args.chi_arc), tuple(args.eta_arc), args.width))
    Ns = tuple(args.N or [64, 128])
    rep = apriori_estimate(A, window, _phi(args.phi), args.lam, args.trials, Ns, args.seed,
                           args.decay, args.variant)
    rows = ["N,c,c_principal"]
    rows += [f"{N},{g(c)},{g(cp)}" for N, c, cp in zip(rep.Ns, rep.c, rep.c_principal)]
    rows.append(f"# drift={g(rep.drift)} stable={str(rep.stable).lower()}")
    return "\n".join(rows) + "\n"


def cmd_atlas(args):
    from .charts import CircleAtlas, atlas_csv, atlas_independence_experiment

    a1 = CircleAtlas(rotation=args.rotation1)
    a2 = CircleAtlas(rotation=args.rotation2)
    rows = []
    for p in args.phi:
        phi = _phi(p)
        for N in args.N or [32, 64]:
            lo, hi = atlas_independence_experiment(phi, a1, a2, N, args.random, args.seed)
            rows.append((a1.describe(), a2.describe(), p, N, lo, hi))
    return atlas_csv(rows)


def cmd_parametrix(args):
    from .psdo import parametrix, parametrix_residuals

    A = _system(args.system)
    B = parametrix(A, args.R, N=args.N)
    res = parametrix_residuals(A, B, args.N, args.R)
    support = ";".join(" ".join(str(c) for c in k) for k in res.support)
    return (f"R={g(args.R)} N={args.N} residual_BA={g(res.beyond_BA)} "
            f"residual_AB={g(res.beyond_AB)}\nremainder_support={support}\n")


# -- parser ------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="key = value file providing option defaults")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--seed", type=int, default=42)


def _add_lattice(p, N=32):
    p.add_argument("--section", help="JSON-lines spectral section")
    p.add_argument("--n", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--N", type=int, default=N)
    p.add_argument("--decay", type=float, default=1.0,
                   help="random sections are damped by <k>^-decay")


def build_parser():
    parser = argparse.ArgumentParser(prog="hscale", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("indices", help="Matuszewska indices of a function parameter")
    p.add_argument("--phi", help="function parameter in prefix notation (required)")
    p.add_argument("--T", type=float, default=1e8)
    p.set_defaults(func=cmd_indices)

    p = sub.add_parser("or-certify", help="windowed OR certificate")
    p.add_argument("--phi", help="function parameter in prefix notation (required)")
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--T", type=float, default=1e6)
    p.add_argument("--grid", type=int, default=256)
    p.set_defaults(func=cmd_or_certify)

    p = sub.add_parser("interp-verify", help="interpolation identity deviations as CSV")
    p.add_argument("--setup", action="append", help="'s0 s1 PHI' (repeatable)")
    p.add_argument("--tol", type=float, default=1e-12)
    _add_lattice(p)
    p.set_defaults(func=cmd_interp_verify)

    p = sub.add_parser("embed", help="embedding H^phi2 -> H^phi1, or H^phi -> C^q")
    p.add_argument("--phi1")
    p.add_argument("--phi2")
    p.add_argument("--phi")
    p.add_argument("--q", type=int)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--T", type=float, default=1e8)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cq-embed", help="embedding H^phi(T^n) -> C^q")
    p.add_argument("--phi", help="function parameter in prefix notation (required)")
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--n", type=int, default=1)
    p.set_defaults(func=cmd_cq_embed)

    p = sub.add_parser("norm", help="H^phi norms of a section as CSV")
    p.add_argument("--phi", action="append")
    p.add_argument("--rank", type=int, default=1)
    _add_lattice(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("solve", help="Fredholm solve of A u = f, JSON report")
    p.add_argument("--system", help="plain-text system file (required)")
    p.add_argument("--f", help="JSON-lines right-hand side")
    p.add_argument("--mode", help="single-mode right-hand side, e.g. '1' or '1,0'")
    p.add_argument("--component", type=int, default=0)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--phi", default="pow 0")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("regularity", help="graded norms of u and Au across truncations")
    p.add_argument("--system", help="plain-text system file (required)")
    p.add_argument("--phi", default="pow 0")
    p.add_argument("--decay", type=float, action="append")
    p.add_argument("--N", type=int, action="append")
    p.set_defaults(func=cmd_regularity)

    p = sub.add_parser("apriori", help="empirical a priori estimate constant")
    p.add_argument("--system", help="plain-text system file (required)")
    p.add_argument("--phi", default="pow 0")
    p.add_argument("--lam", type=float, default=-1.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--N", type=int, action="append")
    p.add_argument("--window", choices=("local", "global"), default="local")
    p.add_argument("--variant", choices=("local", "shifted"), default="local")
    p.add_argument("--chi-arc", type=float, nargs=2, default=(1.2, 2.8))
    p.add_argument("--eta-arc", type=float, nargs=2, default=(0.5, 3.5))
    p.add_argument("--width", type=float, default=0.05)
    p.add_argument("--decay", type=float, default=0.0)
    p.set_defaults(func=cmd_apriori)

    p = sub.add_parser("atlas", help="atlas-independence ratio windows as CSV")
    p.add_argument("--phi", action="append")
    p.add_argument("--N", type=int, action="append")
    p.add_argument("--rotation1", type=float, default=0.0)
    p.add_argument("--rotation2", type=float, default=float(np.pi / 2))
    p.add_argument("--random", type=int, default=16)
    p.set_defaults(func=cmd_atlas)

    p = sub.add_parser("parametrix", help="parametrix residuals beyond the cutoff")
    p.add_argument("--system", help="plain-text system file (required)")
    p.add_argument("--R", type=float, default=0.0)
    p.add_argument("--N", type=int, default=32)
    p.set_defaults(func=cmd_parametrix)

    for sp in sub.choices.values():
        _add_common(sp)
    return parser


_LIST_DEFAULTS = {"phi": ["pow 0"], "decay": [1.5, 2.0, 2.5, 3.0, 3.5]}

# options that must come from the command line or the config file
_REQUIRED = {
    "indices": ("phi",), "or-certify": ("phi",), "cq-embed": ("phi",),
    "solve": ("system",), "regularity": ("system",), "apriori": ("system",),
    "parametrix": ("system",),
}


def _apply_config(parser, argv):
    """Re-parse with config-file values as defaults for the chosen command."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in actions or key in ("config", "help"):
            raise errors.ParseError(f"unknown config key {key!r} for {args.command}")
        act = actions[key]
        values = value if isinstance(value, list) else [value]
        conv = act.type or (lambda s: s)
        if act.nargs in (2, "+", "*"):
            values = [conv(v) for item in values for v in item.split()]
            defaults[key] = values
        elif isinstance(act, argparse._AppendAction):
            defaults[key] = [conv(v) for v in values]
        else:
            if len(values) > 1:
                raise errors.ParseError(f"config key {key!r} given more than once")
            defaults[key] = conv(values[0])
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _check_required(parser, args):
    missing = [f"--{name}" for name in _REQUIRED.get(args.command, ())
               if getattr(args, name) is None]
    if missing:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.error(f"the following arguments are required: {', '.join(missing)}")


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        _check_required(parser, args)
    except errors.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    for key, default in _LIST_DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None and \
                isinstance(parser._subparsers._group_actions[0].choices[args.command]
                           ._option_string_actions.get(f"--{key}"), argparse._AppendAction):
            setattr(args, key, list(default))
    text, code = "", EXIT_OK
    try:
        text = args.func(args)
    except CLIError as exc:
        if isinstance(exc.__cause__, _Partial):
            text = exc.__cause__.text
        print(f"error: {exc}", file=sys.stderr)
        code = exc.code
    except errors.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (errors.InvalidSetupError, errors.PreconditionError, errors.NotEllipticError,
            errors.SingularSymbolError, errors.HomogeneityError, errors.DomainError) as exc:
        print(f"invalid setup: {exc}", file=sys.stderr)
        return EXIT_SETUP
    except (errors.QuadratureError, errors.EstimationError, errors.NumericalOverflowError,
            errors.UnboundedSymbolError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        print(f"invalid setup: {exc}", file=sys.stderr)
        return EXIT_SETUP
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
