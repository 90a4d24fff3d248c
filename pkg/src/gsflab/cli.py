"""
Command-line front end.

Every run writes one JSON or CSV document whose header records the tool version,
the seed and the full configuration. Exit codes: 0 success, 2 bad arguments,
3 numeric or domain error, 4 contract-verification failure.
"""

from __future__ import annotations

import argparse
import io as _io
import json
import os
import sys
from math import pi
from pathlib import Path

import numpy as np

from . import __version__
from .casestudies import (FIG5_COLUMNS, GHZ_INPUTS, OpticalCircuitParams, QpqParams,
                          chsh_grid_max, chsh_local_test, fig5_table, ghz_discrepancy_table,
                          hyper_hybrid_state, hyperentangled_candidate, kay_row_violation,
                          optical_circuit_state, pseudo_telepathy_test, qpq_gsf_closed_forms,
                          qpq_key_generation, qpq_numeric_gsf, verify_all_pairs_mes)
from .channels import (QuantumChannel, RelationParams, choi_state, isotropic_residual,
                       relation_fg, relation_lemmas, twirl_channel, twirl_state)
from .characterize import FIG3_COLUMNS, CharacterizationInput, characterize, fig3_curves
from .errors import ContractError, DegenerateStateError, DomainError
from .fidelity import fef, gsf, gsf_upper_bound, kay_monogamy_check
from .indist import IndistState
from .io import jsonable, load_state
from .linalg import haar_unitary
from .multidof import DofLayout, noisy_singlet, pairwise_reduction
from .teleport import f_g, haar_average_channel_fidelity

TOOL = "gsflab"
SEED_ENV = "GSFLAB_SEED"


class Output:
    """A result document: scalar/dict payload for JSON, optional table for CSV."""

    def __init__(self, result: dict, table: list[dict] | None = None,
                 columns: tuple[str, ...] | None = None):
        self.result = result
        self.table = table
        self.columns = columns


###############################################################################


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None,
                   help=f"random seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo samples or trials")
    p.add_argument("--restarts", type=int, default=16, help="FEF optimizer restarts")
    p.add_argument("--tol", type=float, default=1e-12, help="FEF optimizer gain tolerance")
    p.add_argument("--out", default=None, help="output file or directory (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog=TOOL, description="Generalized singlet fraction and "
                                 "teleportation fidelity toolkit")
    ap.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fef", help="fully entangled fraction of one DoF pair or a noisy singlet")
    p.add_argument("--state", help="state JSON file")
    p.add_argument("--pair", type=int, nargs=2, default=(1, 1), metavar=("I", "J"),
                   help="1-based DoF pair (default 1 1)")
    p.add_argument("--regions", nargs=2, default=("s1", "s2"))
    p.add_argument("--p", type=float, help="noisy singlet weight (used without --state)")
    p.add_argument("--d", type=int, default=2)
    _add_common(p)

    p = sub.add_parser("gsf", help="generalized singlet fraction of a state file")
    p.add_argument("--state", required=True)
    p.add_argument("--regions", nargs=2, default=("s1", "s2"))
    _add_common(p)

    p = sub.add_parser("teleport", help="generalized teleportation fidelity")
    p.add_argument("--state")
    p.add_argument("--p", type=float, help="noisy singlet weight (used without --state)")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--regions", nargs=2, default=("s1", "s2"))
    _add_common(p)

    p = sub.add_parser("relation", help="f_g from F_g along the noisy family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--fmax", type=float, required=True)
    p.add_argument("--Fmax", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--Fg", type=float)
    g.add_argument("--p", type=float)
    _add_common(p)

    p = sub.add_parser("characterize", help="structural conclusions from F_g and f_g")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--Fg", type=float)
    p.add_argument("--fg", type=float)
    _add_common(p)

    p = sub.add_parser("twirl", help="twirl a two-qudit state or a random unitary channel")
    p.add_argument("--state", help="n=1 distinguishable state JSON (state twirl)")
    p.add_argument("--d", type=int, default=2, help="dimension for the channel twirl")
    _add_common(p)

    p = sub.add_parser("bound", help="upper bound and monogamy check")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--fefs", type=float, nargs="+", help="one row of pairwise FEFs")
    _add_common(p)

    p = sub.add_parser("casestudy", help="worked examples")
    p.add_argument("name", choices=("optical", "hyperhybrid", "qpq", "chsh", "ghz"))
    p.add_argument("--theta", type=float, help="angle in radians")
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--psi1", type=float)
    p.add_argument("--psi2", type=float)
    p.add_argument("--state", help="identical-particle terms to verify (hyperhybrid)")
    p.add_argument("--regions", nargs=2, default=("s1", "s2"))
    _add_common(p)

    p = sub.add_parser("curves", help="tables behind the F_g/f_g and private-query plots")
    p.add_argument("name", choices=("fig3", "fig5"))
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=4, help="largest n for fig3")
    p.add_argument("--fmax", type=float, help="identical-particle f_max (< 1) for fig3")
    p.add_argument("--steps", type=int, default=90)
    p.add_argument("--closed-only", action="store_true", help="fig5: skip numeric columns")
    _add_common(p)
    return ap


###############################################################################


def _state_or_noisy(args, n=1):
    if args.state:
        return load_state(args.state)
    if args.p is None:
        raise ValueError("give --state or --p")
    return noisy_singlet(args.p, DofLayout(n, args.d))


def cmd_fef(args) -> Output:
    st = _state_or_noisy(args)
    i, j = args.pair[0] - 1, args.pair[1] - 1
    if isinstance(st, IndistState):
        from .indist import pairwise_reduction_indist
        rho, prob = pairwise_reduction_indist(st, args.regions[0], i, args.regions[1], j)
    else:
        rho, prob = pairwise_reduction(st, i, j), None
    r = fef(rho, restarts=args.restarts, seed=args.seed, tol=args.tol)
    out = r.to_dict()
    out["pair"] = list(args.pair)
    if prob is not None:
        out["post_select_prob"] = prob
    return Output(out)


def _pair_rows(rep) -> list[dict]:
    rows = []
    na, nb = rep.pair_fef.shape
    for i in range(na):
        for j in range(nb):
            row = {"i": i + 1, "j": j + 1, "fef": rep.pair_fef[i, j]}
            if rep.post_select_probs is not None:
                row["post_select_prob"] = rep.post_select_probs[i, j]
            rows.append(row)
    return rows


def cmd_gsf(args) -> Output:
    st = load_state(args.state)
    regions = args.regions if isinstance(st, IndistState) else None
    rep = gsf(st, regions, restarts=args.restarts, seed=args.seed, tol=args.tol)
    rows = _pair_rows(rep)
    return Output(rep.to_dict(), rows, tuple(rows[0].keys()))


def cmd_teleport(args) -> Output:
    st = _state_or_noisy(args, args.n)
    regions = args.regions if isinstance(st, IndistState) else None
    res = f_g(st, samples=args.samples or 4000, seed=args.seed, regions=regions,
              restarts=args.restarts)
    rows = [{"i": i + 1, "j": j + 1, "mean": e.mean, "stderr": e.stderr}
            for i, row in enumerate(res.pair_estimates) for j, e in enumerate(row)]
    return Output(res.to_dict(), rows, ("i", "j", "mean", "stderr"))


def cmd_relation(args) -> Output:
    params = RelationParams(args.n, args.d, args.fmax, args.Fmax)
    if args.p is not None:
        fg_val, Fg_val = relation_lemmas(args.p, params)
        out = {"p": args.p, "f_g": fg_val, "F_g": Fg_val, "f_g_from_relation": relation_fg(Fg_val, params)}
    else:
        out = {"F_g": args.Fg, "f_g": relation_fg(args.Fg, params)}
    return Output(out)


def cmd_characterize(args) -> Output:
    rep = characterize(CharacterizationInput(args.d, args.n, args.Fg, args.fg))
    return Output(rep.to_dict())


def cmd_twirl(args) -> Output:
    samples = args.samples or 10_000
    if args.state:
        st = load_state(args.state)
        if isinstance(st, IndistState) or st.n_a != 1 or st.n_b != 1:
            raise ValueError("state twirl needs a one-DoF distinguishable state")
        res = twirl_state(st.matrix, samples, args.seed, return_delta=True)
        m = np.asarray(res.state)
        out = {"mode": "state", "samples": samples,
               "phi_plus_overlap_before": _phi_overlap(st.matrix),
               "phi_plus_overlap_after": _phi_overlap(m),
               "isotropic_residual": isotropic_residual(m),
               "half_batch_delta": res.half_batch_delta,
               "fef_after": fef(m, restarts=args.restarts, seed=args.seed, tol=args.tol).value}
        return Output(out)
    rng = np.random.default_rng(args.seed)
    ch = QuantumChannel.unitary(haar_unitary(args.d, rng))
    tw = twirl_channel(ch, samples, rng)
    out = {"mode": "random_unitary_channel", "d": args.d, "samples": samples,
           "choi_isotropic_residual": isotropic_residual(choi_state(tw)),
           "avg_fidelity_before": haar_average_channel_fidelity(ch, seed=args.seed).mean,
           "avg_fidelity_after": haar_average_channel_fidelity(tw, seed=args.seed).mean}
    return Output(out)


def _phi_overlap(m) -> float:
    m = np.asarray(m)
    d = int(round(np.sqrt(m.shape[0])))
    v = np.eye(d).reshape(-1) / np.sqrt(d)
    return float(np.real(v @ m @ v))


def cmd_bound(args) -> Output:
    out = {"n": args.n, "d": args.d, "upper_bound": gsf_upper_bound(args.n, args.d)}
    if args.fefs:
        lhs, rhs, ok = kay_monogamy_check(args.fefs, args.d)
        out.update({"kay_lhs": lhs, "kay_rhs": rhs, "kay_satisfied": ok})
    return Output(out)


def cmd_casestudy(args) -> Output:
    name = args.name
    if name == "optical":
        theta = pi / 4 if args.theta is None else args.theta
        params = OpticalCircuitParams(theta, args.phi)
        rep = gsf(optical_circuit_state(params), restarts=args.restarts, seed=args.seed, tol=args.tol)
        out = rep.to_dict()
        out.update({"theta": theta, "phi": args.phi, "degenerate": params.degenerate,
                    "max_pair_fef": float(np.nanmax(rep.pair_fef))})
        rows = _pair_rows(rep)
        return Output(out, rows, tuple(rows[0].keys()))
    if name == "hyperhybrid":
        if args.state:
            st = load_state(args.state)
            if not isinstance(st, IndistState):
                raise ValueError("hyperhybrid verification needs an identical-particle state")
            rep = verify_all_pairs_mes(st, tuple(args.regions), restarts=args.restarts, seed=args.seed)
            return Output(rep.to_dict())
        cand = gsf(hyperentangled_candidate(), ("s1", "s2"), restarts=args.restarts, seed=args.seed)
        lhs, rhs, ok = kay_row_violation(2)
        sys.stderr.write(f"hyperentangled candidate: F_g={cand.value:.6f}, pair FEF "
                         f"{np.round(cand.pair_fef, 6).tolist()}; Kay row (1,1): "
                         f"lhs={lhs:.6f} rhs={rhs:.6f} satisfied={ok}\n")
        hyper_hybrid_state()  # raises ContractError
    if name == "qpq":
        theta = pi / 4 if args.theta is None else args.theta
        ks = qpq_key_generation(QpqParams(theta, args.samples or 10_000, args.seed))
        closed = qpq_gsf_closed_forms(theta)
        numeric = qpq_numeric_gsf(theta, args.restarts, args.seed)
        out = {"theta": theta, "key_length": len(ks.bob_key), "conclusive": len(ks.alice_positions),
               "conclusive_rate": ks.conclusive_rate, "mismatches": ks.mismatches,
               "Fg_ancilla_particle": closed[0], "Fg_ancilla_dof": closed[1],
               "Fg_numeric_particle": numeric[0], "Fg_numeric_dof": numeric[1]}
        return Output(out)
    if name == "chsh":
        trials = args.samples or 100_000
        if args.theta is None or args.psi1 is None or args.psi2 is None:
            _, (theta, p1, p2) = chsh_grid_max()
        else:
            theta, p1, p2 = args.theta, args.psi1, args.psi2
        r = chsh_local_test(theta, p1, p2, trials, args.seed)
        out = r.to_dict()
        out.update({"theta": theta, "psi1": p1, "psi2": p2})
        return Output(out)
    if name == "ghz":
        trials = args.samples or 100_000
        theta = 0.0 if args.theta is None else args.theta
        r = pseudo_telepathy_test(theta, trials, args.seed)
        out = r.to_dict()
        out.update({"theta": theta, "inputs": [list(x) for x in GHZ_INPUTS]})
        grid = np.linspace(0, 80, 9)
        table = ghz_discrepancy_table(np.deg2rad(grid), min(trials, 20_000), args.seed)
        for row, t in zip(table, grid):
            row["theta_deg"] = float(t)
            del row["theta"]
        out["discrepancy_table"] = table
        cols = ("theta_deg", "analytic", "born", "empirical", "difference", "flagged")
        return Output(out, table, cols)
    raise ValueError(f"unknown case study {name}")


def cmd_curves(args) -> Output:
    if args.name == "fig3":
        if args.fmax is None:
            raise ValueError("fig3 needs --fmax (identical-particle f_max, below 1)")
        rows = fig3_curves(args.d, range(1, args.n + 1), args.fmax)
        return Output({"rows": rows}, rows, FIG3_COLUMNS)
    rows = fig5_table(args.steps, numeric=not args.closed_only, restarts=args.restarts,
                      seed=args.seed)
    return Output({"rows": rows}, rows, FIG5_COLUMNS)


COMMANDS = {
    "fef": cmd_fef, "gsf": cmd_gsf, "teleport": cmd_teleport, "relation": cmd_relation,
    "characterize": cmd_characterize, "twirl": cmd_twirl, "bound": cmd_bound,
    "casestudy": cmd_casestudy, "curves": cmd_curves,
}


###############################################################################


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "format")}
    return jsonable(cfg)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else repr(float(v))
    if v is None:
        return ""
    return str(v)


def render(out: Output, args) -> str:
    meta = {"tool": TOOL, "version": __version__, "seed": args.seed, "config": _config(args)}
    if args.format == "json":
        doc = {"meta": meta, "result": jsonable(out.result)}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = _io.StringIO()
    buf.write(f"# tool={TOOL}\n# version={__version__}\n# seed={args.seed}\n")
    for k, v in sorted(meta["config"].items()):
        buf.write(f"# {k}={json.dumps(v, sort_keys=True)}\n")
    if out.table is not None:
        cols = out.columns or tuple(out.table[0].keys())
        buf.write(",".join(cols) + "\n")
        for row in out.table:
            buf.write(",".join(_fmt(row.get(c)) for c in cols) + "\n")
    else:
        buf.write("key,value\n")
        for k, v in sorted(_flatten(jsonable(out.result)).items()):
            buf.write(f"{k},{_fmt(v)}\n")
    return buf.getvalue()


def _flatten(obj, prefix="") -> dict:
    flat = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            flat.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        for k, v in enumerate(obj):
            flat.update(_flatten(v, f"{prefix}{k}."))
    else:
        flat[prefix[:-1]] = obj
    return flat


def _write(text: str, args):
    if args.out is None:
        sys.stdout.write(text)
        return
    path = Path(args.out)
    if path.is_dir():
        path = path / f"{args.command}.{args.format}"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _resolve_seed(args):
    if args.seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            args.seed = int(env) if env not in (None, "") else 0
        except ValueError:
            raise ValueError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _resolve_seed(args)
        out = COMMANDS[args.command](args)
        _write(render(out, args), args)
    except ContractError as exc:
        sys.stderr.write(f"{TOOL}: contract verification failed: {exc}\n")
        return 4
    except (DomainError, DegenerateStateError, np.linalg.LinAlgError, FloatingPointError) as exc:
        sys.stderr.write(f"{TOOL}: numeric/domain error: {exc}\n")
        return 3
    except (ValueError, TypeError, OSError) as exc:
        sys.stderr.write(f"{TOOL}: argument error: {exc}\n")
        return 2
    return 0


def main(argv=None):
    sys.exit(run(argv))
