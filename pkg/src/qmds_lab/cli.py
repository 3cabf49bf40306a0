"""Command-line front end: ``qmds-lab build | repair | verify``.

Exit codes: 0 pass, 2 configuration error, 3 failed claim or fidelity,
4 budget violation, 5 repair infeasible by design (fewer than t helpers).

Every flag can also come from a flat ``key = value`` config file given with
``--config``; flags on the command line win.  ``QMDS_LAB_THREADS`` caps the
number of worker threads used to run verification suites.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import BudgetExceeded, QmdsLabError, Unsupported
from .field import make_field
from .network import replacement_node
from .protocol import (
    attempt_with_fewer_helpers,
    encode_logical,
    encode_with_reference,
    erase,
    run_download_return_h1,
    run_download_return_h2,
)
from .qmds import format_descriptor, make_code, verify_distance
from .bounds import Claim
from .suites import SUITES, VerificationReport, default_context, run_suites

EXIT_OK, EXIT_CONFIG, EXIT_CLAIM, EXIT_BUDGET, EXIT_INFEASIBLE = 0, 2, 3, 4, 5

CONFIG_KEYS = {
    "q": int, "n": int, "t": int, "points": str, "multipliers": str, "out": str,
    "e": int, "helpers": str, "topology": str, "hub": int, "seed": int, "cap": int,
    "trace": str, "report": str, "state": str, "suite": str, "outcome": int,
}


class ConfigError(Exception):
    pass


def read_config(path: str) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: cannot parse {raw!r}")
        try:
            values[key] = CONFIG_KEYS[key](val.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}") from exc
    return values


def _csv_ints(text):
    if text is None:
        return None
    try:
        return tuple(int(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _threads() -> int:
    raw = os.environ.get("QMDS_LAB_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"QMDS_LAB_THREADS must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError("QMDS_LAB_THREADS must be a positive integer")
    return value


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file mirroring the flags")
    common.add_argument("--q", type=int, help="prime alphabet size Q")
    common.add_argument("--n", type=int, help="number of storage nodes")
    common.add_argument("--t", type=int, help="helpers needed for repair (k = 2t - n)")
    common.add_argument("--points", help="GRS evaluation points, comma separated")
    common.add_argument("--multipliers", help="GRS column multipliers, comma separated")
    common.add_argument("--seed", type=int, help="random seed (default 0)")

    p = argparse.ArgumentParser(prog="qmds-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="build a code and write its descriptor")
    b.add_argument("--out", help="descriptor output path")

    r = sub.add_parser("repair", parents=[common], help="run a download-and-return repair")
    r.add_argument("--e", type=int, help="erased node (default n)")
    r.add_argument("--helpers", help="helper nodes, comma separated")
    r.add_argument("--topology", choices=("h1", "h2"), help="star network kind (default h1)")
    r.add_argument("--hub", type=int, help="hub helper for h2 (default first helper)")
    r.add_argument("--cap", type=int, help="per-edge limit on log_Q beta")
    r.add_argument("--state", choices=("reference", "logical"), help="stored state (default reference)")
    r.add_argument("--outcome", type=int, help="force the hub measurement outcome")
    r.add_argument("--trace", help="protocol trace output path")
    r.add_argument("--report", help="report output path")

    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", help=f"one of {', '.join(SUITES + ('all',))}; comma separated")
    v.add_argument("--e", type=int, help="erased node (default n)")
    v.add_argument("--helpers", help="helper nodes, comma separated")
    v.add_argument("--hub", type=int, help="hub helper for bound-h2")
    v.add_argument("--report", help="report output path")
    return p


def _settings(args) -> dict:
    cfg = read_config(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("q", "n", "t"):
        if key not in cfg:
            raise ConfigError(f"missing required setting {key}")
    cfg.setdefault("seed", 0)
    return cfg


def _code(cfg):
    make_field(cfg["q"])
    return make_code(cfg["q"], cfg["n"], cfg["t"], _csv_ints(cfg.get("points")), _csv_ints(cfg.get("multipliers")))


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_build(cfg) -> int:
    code = _code(cfg)
    rep = verify_distance(code)
    desc = format_descriptor(code)
    out = cfg.get("out")
    if out:
        Path(out).write_text(desc)
    suffix = " (AME)" if code.k == 0 else ""
    print(f"{code.name()}, D={rep.distance}{suffix}")
    print(f"Q={code.q} n={code.n} t={code.t} k={code.k} D={rep.distance}")
    if not out:
        sys.stdout.write(desc)
    return EXIT_OK if rep.ok and rep.distance == code.design_distance else EXIT_CLAIM


def cmd_repair(cfg) -> int:
    code = _code(cfg)
    e = int(cfg.get("e", code.n))
    helpers = _csv_ints(cfg.get("helpers"))
    if helpers is None:
        helpers = tuple(i for i in range(1, code.n + 1) if i != e)[: code.t]
    base = encode_logical(code, seed=cfg["seed"]) if cfg.get("state") == "logical" else encode_with_reference(code)
    inst = erase(base, e)
    if len(helpers) < code.t:
        cert = attempt_with_fewer_helpers(inst, helpers)
        sys.stdout.write(cert.export())
        return EXIT_INFEASIBLE
    if len(helpers) > code.t:
        raise Unsupported(f"repair with {len(helpers)} > t helpers is not covered")
    topology = cfg.get("topology", "h1")
    kwargs = {"seed": cfg["seed"], "cap": cfg.get("cap"), "outcome": cfg.get("outcome")}
    try:
        if topology == "h1":
            result = run_download_return_h1(inst, helpers, **kwargs)
            expected = 2 * code.t
        elif topology == "h2":
            hub = int(cfg.get("hub", sorted(helpers)[0]))
            result = run_download_return_h2(inst, helpers, hub, **kwargs)
            expected = 2 * code.t - 1
        else:
            raise ConfigError(f"unknown topology {topology!r}")
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if cfg.get("trace"):
        Path(cfg["trace"]).write_text(result.trace)
    claims = [
        Claim("repair-ec", f"EC({topology.upper()}) of download-and-return", result.ec, expected, 0,
              result.ec == expected),
        Claim("repair-fidelity", "repaired state fidelity", result.fidelity, 1.0, 1e-9, result.passed),
    ]
    for name, beta in result.ledger.beta:
        single = topology == "h2" and replacement_node(e) in name.split("-")
        want = code.q if single else code.q**2
        claims.append(Claim(f"repair-beta-{name}", "per-edge communicated dimension", beta, want, 0, beta == want))
    report = VerificationReport(_echo(cfg), claims)
    print(f"{code.name()} topology={topology} ec={result.ec} fidelity={result.fidelity:.17g}")
    if cfg.get("report"):
        Path(cfg["report"]).write_text(report.render())
    return EXIT_OK if report.passed else EXIT_CLAIM


def cmd_verify(cfg) -> int:
    code = _code(cfg)
    names = [s.strip() for s in str(cfg.get("suite", "all")).split(",") if s.strip()]
    unknown = [s for s in names if s not in SUITES and s != "all"]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}")
    ctx = default_context(code, cfg.get("e"), _csv_ints(cfg.get("helpers")), cfg.get("hub"), cfg["seed"])
    claims = run_suites(ctx, names, workers=_threads())
    report = VerificationReport(_echo(cfg), claims)
    _emit(report.render(), cfg.get("report"))
    return EXIT_OK if report.passed else EXIT_CLAIM


def _echo(cfg) -> dict:
    return {k: v for k, v in cfg.items() if k not in ("report", "trace", "out")}


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = _settings(args)
        _threads()
        handler = {"build": cmd_build, "repair": cmd_repair, "verify": cmd_verify}[args.command]
        return handler(cfg)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, QmdsLabError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
