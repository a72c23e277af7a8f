"""Command-line entry point: ``cusptree {build,delta,tree,qi,sphere,scan}``.

Exit status is 0 on success, 1 when a requested bound check fails and 2 on
usage, input or domain errors.  Every output embeds the run configuration
and the sha256 of each input file.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .boundary_tree import combined_tree
from .cusp import (
    ConedSpace,
    CuspedSpace,
    Horoball,
    build_coned_space,
    build_cusped_space,
    build_horoball,
    space_depth,
    space_from_dict,
    space_graph,
    space_to_dict,
    truncation_safe,
)
from .errors import CuspTreeError, InputError
from .groups import cayley_ball, coset_pieces, model_from_dict
from .hyperbolicity import RECIPES, THREADS_ENV, delta_growth_scan, four_point_delta, scan_to_csv
from .metric_graph import distance_matrix, graph_from_dict, graph_to_dict
from .qi import (
    CosetCorrespondence,
    QIReport,
    check_cusped_bound,
    cone_extension_check,
    cone_lambda,
    cusped_lambda,
    extend_to_cusped,
    extend_to_horoball,
    fit_constants,
    image_safe_mask,
    map_from_dict,
    measure_density,
    minimal_additive,
)
from .qi import _bound_scan  # shared pair scan
from .sphere import boundary_pipeline, sphere_graph, sweep

log = logging.getLogger("cusptree")


@dataclass
class RunConfig:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    params: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "json"
    version: str = __version__


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_json(path: str, cfg: RunConfig):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    cfg.inputs[path] = _sha256(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename it into place."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def _json_out(cfg: RunConfig, payload: dict, path: str | None) -> None:
    cfg.output = path
    payload = dict(payload)
    payload["run"] = asdict(cfg)
    _emit(cfg, json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_jsonable) + "\n", path)


def _jsonable(x):
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _comment_header(cfg: RunConfig, prefix: str) -> str:
    return f"{prefix} run={json.dumps(asdict(cfg), sort_keys=True, separators=(',', ':'))}\n"


def _load_space(path: str, cfg: RunConfig):
    return space_from_dict(_load_json(path, cfg))


# -- subcommands -----------------------------------------------------------------------


def cmd_build(args, cfg: RunConfig) -> int:
    cfg.params.update(kind=args.kind, radius=args.radius, depth=args.depth, peripheral=args.peripheral)
    if args.kind == "horoball":
        if not args.base:
            raise InputError("build horoball needs --base GRAPH.json")
        base = graph_from_dict(_load_json(args.base, cfg))
        if args.depth is None:
            raise InputError("build horoball needs --depth")
        space = build_horoball(base, args.depth)
    else:
        if not args.spec:
            raise InputError(f"build {args.kind} needs --spec GROUP.json")
        if args.radius is None:
            raise InputError("--radius is required")
        model = model_from_dict(_load_json(args.spec, cfg))
        ball = cayley_ball(model, args.radius)
        if args.kind == "ball":
            _json_out(cfg, graph_to_dict(ball.graph) | {"kind": "graph"}, args.output)
            return 0
        names = [args.peripheral] if args.peripheral else [p.name for p in model.peripherals]
        if not names:
            raise InputError("the group spec lists no peripheral subgroups")
        pieces = [pc for name in names for pc in coset_pieces(ball, model, name)]
        if args.kind == "cusped":
            space = build_cusped_space(ball, pieces, args.depth)
        else:
            space = build_coned_space(ball, pieces)
    _json_out(cfg, space_to_dict(space), args.output)
    return 0


def cmd_delta(args, cfg: RunConfig) -> int:
    cfg.params.update(mode=args.mode, seed=args.seed, count=args.count, threads=os.environ.get(THREADS_ENV))
    if args.mode == "sampled" and args.seed is None:
        raise InputError("sampled mode requires --seed")
    g = space_graph(_load_space(args.space, cfg))
    report = four_point_delta(distance_matrix(g), args.mode, args.seed, args.count)
    _json_out(cfg, report.to_dict(), args.output)
    return 0


def cmd_tree(args, cfg: RunConfig) -> int:
    cfg.params.update(dot=args.dot)
    g = space_graph(_load_space(args.graph, cfg))
    t = combined_tree(g)
    if args.dot:
        cfg.format = "dot"
        write_atomic(args.dot, _comment_header(cfg, "//") + t.to_dot())
        cfg.format = "json"
    _json_out(cfg, t.to_dict(), args.output)
    return 0


def _bound_plain(Q, X, Y, lam):
    """``3 Lambda d + Lambda`` check for maps between plain graphs or horoballs."""
    gx, gy = space_graph(X), space_graph(Y)
    dX, safeX = truncation_safe(gx, space_depth(X))
    dY, safeY = truncation_safe(gy, space_depth(Y))
    mask = safeX & image_safe_mask(Q, safeY)
    return _bound_scan(Q, dX, dY, {v: v for v in range(gy.n)}, mask, lam)


def cmd_qi(args, cfg: RunConfig) -> int:
    cfg.params.update(k=args.k, lam=args.lam)
    data = _load_json(args.map, cfg)
    X = _load_space(args.source, cfg)
    Y = _load_space(args.target, cfg)
    k = Fraction(args.k) if args.k is not None else None
    lam = Fraction(args.lam) if args.lam is not None else None
    extra: dict = {}
    if isinstance(X, (CuspedSpace, ConedSpace)):
        if type(X) is not type(Y):
            raise InputError("source and target spaces must be of the same kind")
        if "map" not in data:
            raise InputError("map file needs a 'map' of Cayley vertices")
        if "correspondence" not in data:
            raise InputError("map file needs a coset 'correspondence' for horoball spaces")
        q = map_from_dict(data["map"])
        corr = CosetCorrespondence(map_from_dict(data["correspondence"]))
        if isinstance(X, CuspedSpace):
            ext = extend_to_cusped(q, corr, X, Y)
            Q = ext.Q
            if lam is None:
                lam, info = cusped_lambda(q, corr, X, Y, ext)
                extra["lambda_parts"] = info
            bound = check_cusped_bound(Q, X, Y, lam)
        else:
            from .qi import cone_map

            Q = cone_map(q, corr, X, Y)
            if lam is None:
                lam, info = cone_lambda(q, corr, X, Y)
                extra["lambda_parts"] = info
            bound = cone_extension_check(q, corr, X, Y, lam)
        extra["offset_T"] = extra.get("lambda_parts", {}).get("T")
    else:
        if "base_map" in data:
            if not (isinstance(X, Horoball) and isinstance(Y, Horoball)):
                raise InputError("'base_map' needs horoball source and target")
            Q = extend_to_horoball(map_from_dict(data["base_map"]), X, Y)
        elif "map" in data:
            Q = map_from_dict(data["map"])
        else:
            raise InputError("map file needs 'map' or 'base_map'")
        bound = _bound_plain(Q, X, Y, lam) if lam is not None else None
    gx, gy = space_graph(X), space_graph(Y)
    if sorted(Q) != list(range(gx.n)) or any(not 0 <= w < gy.n for w in Q.values()):
        raise InputError("map must be total on the source and land in the target")
    dX, safeX = truncation_safe(gx, space_depth(X))
    dY, safeY = truncation_safe(gy, space_depth(Y))
    mask = safeX & image_safe_mask(Q, safeY)
    if k is None:
        k, c = fit_constants(Q, dX, dY, mask)
    else:
        c = minimal_additive(Q, dX, dY, k, mask)
    extra = {key: ({kk: _jsonable(vv) if isinstance(vv, Fraction) else vv for kk, vv in val.items()}
                   if isinstance(val, dict) else val) for key, val in extra.items()}
    report = QIReport(k, c, measure_density(Q, dY), gx.n, gy.n, bound, extra)
    _json_out(cfg, report.to_dict(), args.output)
    return 0 if bound is None or bound.passed else 1


def cmd_sphere(args, cfg: RunConfig) -> int:
    cfg.params.update(base=args.base, R=args.R, s=args.s, tree=args.tree)
    space = _load_space(args.space, cfg)
    if any(r < 1 for r in args.R):
        raise InputError("R must be at least 1")
    if len(args.R) == 1 and (args.s is None or len(args.s) == 1) and not args.tree:
        sg = sphere_graph(space, args.base, args.R[0], None if args.s is None else args.s[0])
        _json_out(cfg, sg.to_dict(), args.output)
        return 0
    if args.s is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            results = [boundary_pipeline(space, args.base, r) for r in args.R]
    else:
        results = sweep(space, args.base, args.R, args.s)
    _json_out(cfg, {"diagnostic": True, "sweep": [r.to_dict() for r in results]}, args.output)
    return 0


def cmd_scan(args, cfg: RunConfig) -> int:
    cfg.params.update(family=args.family, params=args.params, mode=args.mode, seed=args.seed, count=args.count)
    cfg.format = "csv"
    if args.mode == "sampled" and args.seed is None:
        raise InputError("sampled mode requires --seed")
    series = delta_growth_scan(args.family, args.params, args.mode, args.seed, args.count)
    cfg.output = args.output
    _emit(cfg, _comment_header(cfg, "#") + scan_to_csv(series), args.output)
    return 0


# -- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cusptree", description="Cusped spaces, hyperbolicity and boundary trees.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a Cayley ball, cusped space, coned space or horoball")
    b.add_argument("kind", choices=["cusped", "coned", "ball", "horoball"])
    b.add_argument("--spec", help="group spec JSON")
    b.add_argument("--base", help="base graph JSON (horoball only)")
    b.add_argument("--radius", type=int)
    b.add_argument("--depth", type=int)
    b.add_argument("--peripheral", help="use only this peripheral (default: all)")
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_build)

    d = sub.add_parser("delta", help="four-point delta of a space or graph")
    d.add_argument("space")
    d.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    d.add_argument("--seed", type=int)
    d.add_argument("--count", type=int, default=100_000)
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_delta)

    t = sub.add_parser("tree", help="cut-point / cut-pair tree of a graph")
    t.add_argument("graph")
    t.add_argument("--dot", help="also write DOT here")
    t.add_argument("-o", "--output")
    t.set_defaults(func=cmd_tree)

    q = sub.add_parser("qi", help="measure a vertex map and check the extension bound")
    q.add_argument("--map", required=True)
    q.add_argument("--source", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--k", help="multiplicative constant (rational, e.g. 3/2)")
    q.add_argument("--lambda", dest="lam", help="Lambda for the 3*Lambda*d+Lambda check")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_qi)

    s = sub.add_parser("sphere", help="sphere graph and its combined tree(s)")
    s.add_argument("space")
    s.add_argument("--base", type=int, default=0)
    s.add_argument("-R", type=int, nargs="+", required=True)
    s.add_argument("-s", type=int, nargs="+")
    s.add_argument("--tree", action="store_true", help="run the tree pipeline even for a single (R, s)")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sphere)

    c = sub.add_parser("scan", help="delta growth scan over a recipe family (CSV)")
    c.add_argument("--family", required=True, choices=RECIPES)
    c.add_argument("--params", type=int, nargs="+", required=True)
    c.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    c.add_argument("--seed", type=int)
    c.add_argument("--count", type=int, default=100_000)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_scan)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = RunConfig(args.command)
    try:
        return args.func(args, cfg)
    except (CuspTreeError, ValueError, ZeroDivisionError) as exc:
        print(f"cusptree {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
