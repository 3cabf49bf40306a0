"""Verification suites producing :class:`Claim` records, and the tab-separated report."""

from __future__ import annotations

import itertools
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounds import (
    Claim,
    build_psi_in,
    build_psi_out,
    certify_lower_bound,
    copy_label,
    majorizes,
    nielsen_feasible,
    random_gs,
    verify_chi_rank,
    verify_entropy_table,
)
from .network import replacement_node, star_h1, star_h2, storage_node
from .protocol import encode_logical, encode_with_reference, erase, run_download_return_h1, run_download_return_h2
from .qmds import QmdsCode, derive_small_code, extract_helper_unitary, verify_distance, verify_marginals
from .qstate import schmidt_rank

SUITES = ("distance", "marginals", "unitary", "small-code", "entropy-table", "chi-rank", "psi-chain",
          "bound-h1", "bound-h2", "nielsen")


@dataclass(frozen=True)
class SuiteContext:
    code: QmdsCode
    e: int
    helpers: tuple[int, ...]
    hub: int
    seed: int


def _claim(cid: str, anchor: str, measured, expected, tol: float, ok: bool | None = None) -> Claim:
    if ok is None:
        ok = abs(float(measured) - float(expected)) <= tol
    return Claim(cid, anchor, float(measured), float(expected), float(tol), bool(ok))


def _tag(nodes) -> str:
    return "".join(map(str, nodes))


def suite_distance(ctx: SuiteContext) -> list[Claim]:
    code = ctx.code
    rep = verify_distance(code)
    expected = code.n - code.t + 1
    return [
        _claim("distance", "D = n - t + 1", rep.distance, expected, 0),
        _claim("distance-singleton", "2(D - 1) = n - k", 2 * (rep.distance - 1), code.n - code.k, 0),
    ]


def suite_marginals(ctx: SuiteContext) -> list[Claim]:
    dev, _ = verify_marginals(ctx.code)
    return [_claim("marginals-max-trace-distance", "(n-t)-marginals maximally mixed", dev, 0.0, 1e-8)]


def suite_unitary(ctx: SuiteContext) -> list[Claim]:
    code = ctx.code
    claims = []
    for helpers in itertools.combinations(range(1, code.n + 1), code.t):
        hu = extract_helper_unitary(code, helpers)
        claims.append(_claim(f"unitary-T{_tag(helpers)}", "U_T reconstruction residual", hu.residual, 0.0, 1e-8))
    return claims


def suite_small_code(ctx: SuiteContext) -> list[Claim]:
    small = derive_small_code(ctx.code, ctx.helpers)
    rep = verify_distance(small)
    gram = small.states.conj() @ small.states.T
    ortho = float(np.max(np.abs(gram - np.eye(small.K))))
    dev, _ = verify_marginals(small, 1)
    return [
        _claim("small-code-distance", "derived [[t+1,t-1]] code has D = 2", rep.distance, 2, 0),
        _claim("small-code-singleton", "2(D - 1) = n' - k'", 2 * (rep.distance - 1), small.n - small.k, 0),
        _claim("small-code-orthonormal", "derived code states orthonormal", ortho, 0.0, 1e-9),
        _claim("small-code-marginals", "single-qudit marginals maximally mixed", dev, 0.0, 1e-8),
    ]


def suite_entropy_table(ctx: SuiteContext) -> list[Claim]:
    return verify_entropy_table(ctx.code)


def suite_chi_rank(ctx: SuiteContext) -> list[Claim]:
    return verify_chi_rank(ctx.code, e=ctx.e)


def suite_psi_chain(ctx: SuiteContext) -> list[Claim]:
    code, helpers, e = ctx.code, ctx.helpers, ctx.e
    q = code.q
    psi_in = build_psi_in(code, helpers, e)
    claims = []
    for j in helpers:
        sr = schmidt_rank(psi_in, [storage_node(j), copy_label(j)])
        claims.append(_claim(f"psi-in-sr-W{j}Wp{j}", "sr(W_j W_j') of psi_in", sr, 1, 0))
    for label, g_list in (("id", None), (f"seed{ctx.seed}", random_gs(code, ctx.seed))):
        psi_out = build_psi_out(code, helpers, g_list, None, e)
        for j in helpers:
            sr = schmidt_rank(psi_out, [storage_node(j), copy_label(j)])
            claims.append(_claim(f"psi-out-{label}-sr-W{j}Wp{j}", "sr(W_j W_j') of psi_out", sr, q * q, 0))
        sr = schmidt_rank(psi_out, [replacement_node(e)])
        claims.append(_claim(f"psi-out-{label}-sr-Wh{e}", "sr(replacement) of psi_out", sr, q, 0))
    return claims


def _protocol_instance(code: QmdsCode, e: int):
    # the reference-attached state when it is small, otherwise one seeded logical state
    if code.q ** (code.n + code.k) <= code.q**7:
        return erase(encode_with_reference(code), e)
    return erase(encode_logical(code, seed=0), e)


def suite_bound(ctx: SuiteContext, kind: str) -> list[Claim]:
    code, helpers, e = ctx.code, ctx.helpers, ctx.e
    if kind == "h1":
        topo = star_h1(e, helpers, t=code.t)
        expected = 2 * code.t
        result = run_download_return_h1(_protocol_instance(code, e), helpers, seed=ctx.seed)
    else:
        topo = star_h2(e, helpers, ctx.hub, t=code.t)
        expected = 2 * code.t - 1
        result = run_download_return_h2(_protocol_instance(code, e), helpers, ctx.hub, seed=ctx.seed)
    cert = certify_lower_bound(code, helpers, topo)
    return [
        _claim(f"bound-{kind}-certificate", f"EC({kind.upper()}) lower bound", cert.conclusion, expected, 0),
        _claim(f"bound-{kind}-protocol-ec", f"EC({kind.upper()}) of download-and-return", result.ec, expected, 0),
        _claim(f"bound-{kind}-protocol-fidelity", "repaired state fidelity", result.fidelity, 1.0, 1e-9,
               result.fidelity >= 1 - 1e-9),
    ]


def _random_distribution(rng, size: int) -> np.ndarray:
    v = rng.exponential(size=size)
    return v / v.sum()


def _mix(rng, p: np.ndarray) -> np.ndarray:
    """Apply a random doubly stochastic matrix (a convex mix of permutations); the result is majorized by ``p``."""
    weights = rng.dirichlet(np.ones(3))
    return sum(w * p[rng.permutation(p.size)] for w in weights)


def nielsen_battery(seed: int = 0, triples: int = 1000) -> list[Claim]:
    """Order properties of majorization and the extremal cases of the Nielsen criterion.

    Transitivity runs on chains ``a > b > c`` built by doubly stochastic
    mixing, plus independent random triples where the implication is
    checked whenever its premise holds.
    """
    rng = np.random.default_rng(seed)
    claims = [
        _claim("nielsen-trivial-product", "(1,0) majorizes (1/2,1/2)", majorizes([1, 0], [0.5, 0.5]), 1, 0),
        _claim("nielsen-trivial-reverse", "(1/2,1/2) does not majorize (1,0)", majorizes([0.5, 0.5], [1, 0]), 0, 0),
        _claim("nielsen-trivial-equal", "equal Schmidt vectors are interconvertible",
               nielsen_feasible([0.6, 0.8], [0.8, 0.6]), 1, 0),
        _claim("nielsen-dilution", "uniform pair to product is feasible",
               nielsen_feasible([2**-0.5, 2**-0.5], [1, 0]), 1, 0),
        _claim("nielsen-concentration", "product to uniform pair is infeasible",
               nielsen_feasible([1, 0], [2**-0.5, 2**-0.5]), 0, 0),
    ]
    reflexive = antisym = transitive = extremal = 0
    for _ in range(triples):
        size = int(rng.integers(2, 7))
        a = _random_distribution(rng, size)
        b = _mix(rng, a)
        c = _mix(rng, b)
        reflexive += majorizes(a, a)
        # antisymmetry: mutual majorization forces equal sorted vectors
        perm = a[rng.permutation(size)]
        other = _random_distribution(rng, size)
        mutual_ok = majorizes(a, perm) and majorizes(perm, a)
        if majorizes(a, other) and majorizes(other, a):
            mutual_ok = mutual_ok and bool(np.allclose(np.sort(a), np.sort(other), atol=1e-12))
        antisym += mutual_ok
        chain_ok = majorizes(a, b) and majorizes(b, c) and majorizes(a, c)
        x, y, z = (_random_distribution(rng, size) for _ in range(3))
        if majorizes(x, y) and majorizes(y, z):
            chain_ok = chain_ok and majorizes(x, z)
        transitive += chain_ok
        uniform = np.sqrt(np.full(size, 1 / size))
        lam = np.sqrt(a)
        extremal += (not nielsen_feasible(lam, uniform)) and nielsen_feasible(uniform, lam)
    claims += [
        _claim("nielsen-reflexive", "majorization is reflexive", reflexive, triples, 0),
        _claim("nielsen-antisymmetric", "majorization is antisymmetric", antisym, triples, 0),
        _claim("nielsen-transitive", "majorization is transitive", transitive, triples, 0),
        _claim("nielsen-uniform-extremal", "uniform vector is extremal", extremal, triples, 0),
    ]
    return claims


def suite_nielsen(ctx: SuiteContext) -> list[Claim]:
    return nielsen_battery(ctx.seed)


RUNNERS: dict[str, Callable[[SuiteContext], list[Claim]]] = {
    "distance": suite_distance,
    "marginals": suite_marginals,
    "unitary": suite_unitary,
    "small-code": suite_small_code,
    "entropy-table": suite_entropy_table,
    "chi-rank": suite_chi_rank,
    "psi-chain": suite_psi_chain,
    "bound-h1": lambda ctx: suite_bound(ctx, "h1"),
    "bound-h2": lambda ctx: suite_bound(ctx, "h2"),
    "nielsen": suite_nielsen,
}


@dataclass
class VerificationReport:
    config: dict
    claims: list[Claim] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.claims)

    def render(self) -> str:
        lines = [
            "# qmds-lab report v1",
            f"# version\t{__version__}",
            "# config\t" + " ".join(f"{k}={v}" for k, v in sorted(self.config.items())),
            "id\tanchor\tmeasured\texpected\ttol\tpass",
        ]
        for c in sorted(self.claims, key=lambda c: c.id):
            lines.append(f"{c.id}\t{c.anchor}\t{c.measured:.17g}\t{c.expected:.17g}\t{c.tol:.17g}\t"
                         f"{'pass' if c.passed else 'fail'}")
        lines.append(f"# overall\t{'pass' if self.passed else 'fail'}")
        return "\n".join(lines) + "\n"


def run_suites(ctx: SuiteContext, names, *, workers: int = 1) -> list[Claim]:
    names = list(SUITES) if "all" in names else list(names)
    unknown = [n for n in names if n not in RUNNERS]
    if unknown:
        raise ValueError(f"unknown suites {unknown}")
    if workers <= 1 or len(names) == 1:
        results = [RUNNERS[n](ctx) for n in names]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda n: RUNNERS[n](ctx), names))
    claims = [c for group in results for c in group]
    ids = [c.id for c in claims]
    if len(set(ids)) != len(ids):
        raise RuntimeError("duplicate claim ids")
    return claims


def default_context(code: QmdsCode, e=None, helpers=None, hub=None, seed: int = 0) -> SuiteContext:
    e = code.n if e is None else int(e)
    if helpers is None:
        helpers = tuple(i for i in range(1, code.n + 1) if i != e)[: code.t]
    helpers = tuple(sorted(int(j) for j in helpers))
    hub = helpers[0] if hub is None else int(hub)
    return SuiteContext(code, e, helpers, hub, int(seed))

