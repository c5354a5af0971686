"""Command-line front end.

Every subcommand accepts ``--seed`` (default :data:`DEFAULT_SEED`),
``--workers`` and ``--out``.  With ``--out`` the primary output goes to
that file and a run manifest to ``<out>.manifest.json``; without it the
output goes to stdout.  Errors are reported as one JSON object on stderr
and the exit code follows :data:`EXIT_CODES`.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .convergence import SequenceSpec, converge_test, generate
from .core import (INTERVAL, DiscreteDistribution, FiniteMetric, PushforwardMeasure,
                   complete_graph_space, from_graph, sphere_empirical)
from .distances import (AnnealBudget, GridKernel, box1_result, kernel_from_space,
                        underline_box1)
from .errors import MMSpaceError
from .invariants import (SearchBudget, obs_diam, obs_diam_exact_small, partial_diameter_result,
                         separation)
from .jsonio import dumps, load_space, load_target, sha256_file
from .sampling import moment_signature, sample_matrix

#: seed used when ``--seed`` is omitted
DEFAULT_SEED = 20240601
EXIT_CODES = {"ok": 0, "usage": 2, "infeasible": 3, "budget": 4, "internal": 5}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(x):
    """JSON-safe copy: numpy scalars and arrays to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _json(doc) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


# ---------------------------------------------------------------------------
# subcommands; each returns (primary output text, input paths)
# ---------------------------------------------------------------------------

def cmd_generate(args):
    fam = args.family
    if fam == "complete":
        if args.n is None or args.n < 1:
            raise UsageError("--family complete needs --n >= 1")
        space = complete_graph_space(args.n)
    elif fam == "empty":
        if args.n is None or args.n < 1:
            raise UsageError("--family empty needs --n >= 1")
        space = from_graph(np.zeros((args.n, args.n), dtype=bool))
    elif fam == "random-graph":
        if args.n is None or args.n < 1 or args.p is None or not 0 <= args.p <= 1:
            raise UsageError("--family random-graph needs --n >= 1 and --p in [0, 1]")
        spec = SequenceSpec("random_graphs", [args.n], seed=args.seed, p=args.p)
        space = generate(spec, args.n)
    elif fam == "sphere":
        if args.dim is None or args.dim < 1 or args.count < 2:
            raise UsageError("--family sphere needs --dim >= 1 and --count >= 2")
        space = sphere_empirical(args.dim, args.count, args.seed)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown family {fam!r}")
    return dumps(space), []


def _measure_for_pdiam(obj):
    if isinstance(obj, DiscreteDistribution):
        return PushforwardMeasure(INTERVAL, obj)
    if hasattr(obj, "dist") and hasattr(obj, "weights"):
        return PushforwardMeasure(FiniteMetric(np.asarray(obj.dist)), np.asarray(obj.weights))
    raise UsageError("pdiam needs a 'measure' document or an mm-space")


def cmd_invariant(args):
    obj = load_space(args.space)
    inputs = [args.space]
    out = {"kind": args.kind}
    if args.kind == "sep":
        if args.kappas is None:
            raise UsageError("sep needs --kappas")
        res = separation(obj, _floats(args.kappas), mode=args.mode)
        out.update(delta=res.delta, mode=res.mode, witness=res.witness.to_dict())
    elif args.kind == "pdiam":
        if args.kappa is None:
            raise UsageError("pdiam needs --kappa")
        res = partial_diameter_result(_measure_for_pdiam(obj), args.kappa)
        out.update(value=res.value, approximate=res.approximate, support=res.support)
    else:
        if args.kappa is None:
            raise UsageError("obsdiam needs --kappa")
        target = load_target(args.target)
        if target != INTERVAL:
            inputs.append(args.target)
        if args.exact_small:
            if target == INTERVAL:
                raise UsageError("--exact-small needs a finite target")
            value, wit = obs_diam_exact_small(obj, target, args.kappa, return_witness=True)
            out.update(value=value, mode="exact", witness=wit.to_dict())
        else:
            budget = SearchBudget(iterations=args.iterations, anchors=args.anchors)
            res = obs_diam(obj, target, args.kappa, budget=budget, seed=args.seed)
            out.update(value=res.lower_bound, mode="lower_bound", witness=res.witness.to_dict(),
                       budget={"iterations": budget.iterations, "anchors": budget.anchors})
        out["kappa"] = args.kappa
    return _json(out), inputs


def cmd_sample(args):
    space = load_space(args.space)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    s = sample_matrix(space, args.n, args.seed)
    return _json({"seed": args.seed, "n": args.n, "points": s.points,
                  "entries": s.entries}), [args.space]


def cmd_moments(args):
    space = load_space(args.space)
    mode = "exact" if args.exact else ("mc" if args.mc else "auto")
    sig = moment_signature(space, args.r, args.k, samples=args.samples, seed=args.seed,
                           mode=mode, workers=args.workers)
    doc = sig.to_dict()
    doc.update(r_max=args.r, k_max=args.k)
    return _json(doc), [args.space]


def _as_kernel(obj):
    return obj if isinstance(obj, GridKernel) else kernel_from_space(obj)


def cmd_box1(args):
    x, y = load_space(args.x), load_space(args.y)
    inputs = [args.x, args.y]
    if args.aligned or isinstance(x, GridKernel) or isinstance(y, GridKernel):
        res = box1_result(_as_kernel(x), _as_kernel(y))
        doc = {"value": res.value, "exact": res.exact, "cover": res.cover,
               "interval": [res.lo, res.hi], "mode": "fixed_grid"}
    else:
        mode = "exact" if args.exact else "anneal"
        budget = AnnealBudget(iterations=args.iterations)
        res = underline_box1(x, y, mode=mode, budget=budget, seed=args.seed)
        doc = {"value": res.upper_bound, "exact": res.exact, "mode": mode,
               "alignment": res.alignment.to_dict()}
    return _json(doc), inputs


def cmd_converge(args):
    files = args.files.split(",") if args.files else None
    indices = _ints(args.indices) if args.indices else (list(range(len(files))) if files else None)
    if not indices or len(indices) < 2:
        raise UsageError("converge needs at least two --indices")
    try:
        spec = SequenceSpec(args.family, indices, seed=args.seed, p=args.p, count=args.count,
                            files=files)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep = converge_test(spec, args.r, args.k, samples=args.samples, tol=args.tol,
                        seed=args.seed, workers=args.workers)
    if args.csv:
        Path(args.csv).write_text(rep.to_csv(), newline="")
    return _json(rep.to_dict()), list(files or [])


def cmd_replay(args):
    manifest = json.loads(Path(args.manifest).read_text())
    for path, digest in manifest.get("inputs", {}).items():
        if sha256_file(path) != digest:
            raise UsageError(f"input {path} changed since the recorded run")
    argv = list(manifest["argv"])
    recorded = manifest.get("outputs", {})
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "replay.out"
        if "--out" in argv:
            argv[argv.index("--out") + 1] = str(out)
        else:
            argv += ["--out", str(out)]
        code = main(argv, _write_manifest=False)
        if code != 0:
            return _json({"reproduced": False, "exit_code": code}), [args.manifest]
        digest = sha256_file(out)
        if args.output:
            Path(args.output).write_bytes(out.read_bytes())
    want = next(iter(recorded.values()), None)
    ok = want is None or want == digest
    doc = {"reproduced": ok, "sha256": digest, "recorded": want}
    if not ok:
        raise _ReplayMismatch(_json(doc))
    return _json(doc), [args.manifest]


class _ReplayMismatch(Exception):
    pass


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"random seed (default {DEFAULT_SEED})")
    p.add_argument("--workers", type=int, default=1, help="threads for Monte-Carlo chunks")
    p.add_argument("--out", help="output file; a manifest is written next to it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmsampling", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a space file")
    p.add_argument("--family", required=True,
                   choices=["complete", "empty", "random-graph", "sphere"])
    p.add_argument("--n", type=int, help="vertex count for graph families")
    p.add_argument("--p", type=float, help="edge probability for random graphs")
    p.add_argument("--dim", type=int, help="sphere dimension")
    p.add_argument("--count", type=int, default=400, help="sphere point count (default 400)")
    _common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("invariant", help="separation, observable or partial diameter")
    p.add_argument("kind", choices=["sep", "obsdiam", "pdiam"])
    p.add_argument("space", help="space (or measure) JSON file")
    p.add_argument("--kappas", help="comma-separated masses for sep")
    p.add_argument("--kappa", type=float, help="mass left out for obsdiam and pdiam")
    p.add_argument("--mode", choices=["exact", "heuristic"], default="exact",
                   help="sep search mode")
    p.add_argument("--target", default=INTERVAL, help="'interval' or a metric JSON file")
    p.add_argument("--iterations", type=int, default=SearchBudget.iterations)
    p.add_argument("--anchors", type=int, default=SearchBudget.anchors)
    p.add_argument("--exact-small", action="store_true",
                   help="enumerate every map into a finite target")
    _common(p)
    p.set_defaults(func=cmd_invariant)

    p = sub.add_parser("sample", help="draw one n-point sample matrix")
    p.add_argument("space")
    p.add_argument("--n", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("moments", help="moment signature")
    p.add_argument("space")
    p.add_argument("--r", type=int, default=2, help="largest tuple size")
    p.add_argument("--k", type=int, default=2, help="largest monomial power")
    p.add_argument("--samples", type=int, default=100_000)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="enumerate all tuples")
    g.add_argument("--mc", action="store_true", help="Monte-Carlo only")
    _common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("box1", help="box distance between two spaces or kernels")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--exact", action="store_true", help="exact alignment search")
    p.add_argument("--aligned", action="store_true",
                   help="compare on the given grid without realignment")
    p.add_argument("--iterations", type=int, default=AnnealBudget.iterations)
    _common(p)
    p.set_defaults(func=cmd_box1)

    p = sub.add_parser("converge", help="moment trajectories along a sequence")
    p.add_argument("--family", required=True,
                   choices=["complete", "sphere", "random-graph", "files"])
    p.add_argument("--indices", help="comma-separated increasing indices")
    p.add_argument("--files", help="comma-separated space files (family 'files')")
    p.add_argument("--p", type=float)
    p.add_argument("--count", type=int, default=400)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--csv", help="also write the trajectory table as CSV")
    _common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    p.add_argument("--output", help="keep the regenerated output here")
    _common(p)
    p.set_defaults(func=cmd_replay)
    return parser


def _manifest(args, argv, inputs, out_path):
    return {
        "command": args.command,
        "argv": list(argv),
        "seed": args.seed,
        "version": __version__,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(out_path): sha256_file(out_path)},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None, _write_manifest=True) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        text, inputs = args.func(args)
        if args.out:
            Path(args.out).write_text(text, newline="")
            if _write_manifest and args.command != "replay":
                manifest = _manifest(args, argv, inputs, args.out)
                Path(str(args.out) + ".manifest.json").write_text(_json(manifest))
        else:
            sys.stdout.write(text)
        return 0
    except UsageError as exc:
        return _fail("UsageError", str(exc), EXIT_CODES["usage"])
    except MMSpaceError as exc:
        return _fail(type(exc).__name__, str(exc), getattr(exc, "exit_code", 2))
    except (FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_CODES["usage"])
    except _ReplayMismatch as exc:
        return _fail("ReplayMismatch", str(exc), EXIT_CODES["internal"])
    except Exception as exc:  # pragma: no cover - last resort
        return _fail(type(exc).__name__, str(exc), EXIT_CODES["internal"])


def main_exit():  # pragma: no cover - console entry point
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_exit()
