"""Command-line entry point and figure datasets.

Every ``cmd_*`` function is usable from Python and returns plain data; the
argparse layer in :func:`main` only parses flags, writes output and maps
library errors onto exit codes (0 ok, 2 invalid input, 3 capacity, 4 usage).
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import ArgumentError, CapacityError, ContractError, UnsupportedError
from .fuzz import INEQUALITIES, CampaignConfig, run_campaign
from .linalg import herm_eig
from .measures import concurrence_two_qubit, eof_derivatives
from .monogamy import (
    CAVITY_PARTITIONS,
    analysis_422,
    cavity_indicator_decomposition,
    tau_sef_k_mixed,
    tau_sef_k_pure,
    tau_w_state_closed_form,
)
from .states import (
    NAMED_STATES,
    CavityParams,
    DensityMatrix,
    PartitionSpec,
    PureState,
    cavity_state,
    group_parties,
    named_state,
    partial_trace,
)
from .statefile import StateFileError, load_state, save_state, state_to_dict

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPACITY = 3
EXIT_USAGE = 4

KT_MAX = 5.0
FIG2_STEPS = 200
FIG3_GRID = 20
FIG4_STEPS = 100
DERIV_STEPS = 100
METHODS = ("closed", "roof", "discord")
_TAILS = {None: "auto", "closed": "wootters", "discord": "koashi_winter", "roof": "roof"}


@dataclass
class FigureDataset:
    """Named numeric columns plus provenance written as ``#`` comment lines."""

    columns: tuple
    rows: list
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.rows = [tuple(float(v) for v in r) for r in self.rows]
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ContractError(f"row has {len(r)} values for {len(self.columns)} columns")

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])

    def to_csv(self) -> str:
        out = io.StringIO()
        for key, value in self.provenance.items():
            out.write(f"# {key}: {value}\n")
        out.write(",".join(self.columns) + "\n")
        for r in self.rows:
            out.write(",".join("%.17g" % v for v in r) + "\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> FigureDataset:
        provenance, columns, rows = {}, None, []
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                provenance[key.strip()] = value.strip()
            elif columns is None:
                columns = tuple(line.split(","))
            else:
                rows.append(tuple(float(v) for v in line.split(",")))
        if columns is None:
            raise ContractError("CSV has no header row")
        return cls(columns, rows, provenance)


def _provenance(command: str, **ranges) -> dict:
    prov = {"command": command, "seed": "none (deterministic)", "version": __version__}
    prov.update(ranges)
    return prov


def _steps(steps: int, least: int = 2) -> int:
    if int(steps) < least:
        raise ArgumentError(f"steps must be >= {least}, got {steps}")
    return int(steps)


def cmd_fig1(n: int = 20, command: str | None = None) -> FigureDataset:
    """tau_SEF(k) of the n-qubit W state for k = 3 .. n."""
    n = int(n)
    if n < 3:
        raise ArgumentError(f"n must be >= 3, got {n}")
    rows = [(k, tau_w_state_closed_form(n, k)) for k in range(3, n + 1)]
    return FigureDataset(("k", "tau"), rows, _provenance(command or f"monoqt fig1 --n {n}", k_range=f"3..{n}"))


def cmd_fig2(alpha: float = 1 / math.sqrt(3), kt_max: float = KT_MAX, steps: int = FIG2_STEPS,
             partition: str = "c1_first", command: str | None = None) -> FigureDataset:
    """Cavity indicators tau4, tau3_pure and tau3_mixed against kt, all from closed forms."""
    steps = _steps(steps)
    if partition not in CAVITY_PARTITIONS:
        raise ArgumentError(f"unknown partition {partition!r}; choose from {sorted(CAVITY_PARTITIONS)}")
    if not kt_max > 0:
        raise ArgumentError(f"kt_max must be positive, got {kt_max}")
    rows = []
    for kt in np.linspace(0.0, kt_max, steps):
        tau4, pure, mixed = cavity_indicator_decomposition(CavityParams(alpha, kappa_t=kt), partition)
        rows.append((kt, tau4, pure, mixed))
    cmd = command or f"monoqt fig2 --alpha {alpha!r} --kt-max {kt_max!r} --steps {steps} --partition {partition}"
    return FigureDataset(("kt", "tau4", "tau3_pure", "tau3_mixed"), rows,
                         _provenance(cmd, kt_range=f"[0, {kt_max!r}] in {steps} points", partition=partition,
                                     alpha=repr(float(alpha))))


def cmd_fig3(grid: int = FIG3_GRID, kt_max: float = KT_MAX, command: str | None = None) -> FigureDataset:
    """Joint squared concurrence of c1 and the SC residual over an (alpha, kt) grid.

    Pair concurrences come from Wootters on the c1 r1 and c1 r2 reductions.
    """
    grid = _steps(grid)
    rows = []
    for alpha in np.linspace(0.0, 1.0, grid):
        for kt in np.linspace(0.0, kt_max, grid):
            p = CavityParams(alpha, kappa_t=kt)
            joint = 4.0 * p.beta**2 * p.xi**2 * p.chi**2
            psi = cavity_state(p)
            c_r1 = concurrence_two_qubit(partial_trace(psi, [0, 1]))
            c_r2 = concurrence_two_qubit(partial_trace(psi, [0, 3]))
            rows.append((alpha, kt, joint, joint - c_r1**2 - c_r2**2))
    cmd = command or f"monoqt fig3 --steps {grid} --kt-max {kt_max!r}"
    return FigureDataset(("alpha", "kt", "c_sq_joint", "sc_residual"), rows,
                         _provenance(cmd, alpha_range=f"[0, 1] in {grid} points",
                                     kt_range=f"[0, {kt_max!r}] in {grid} points"))


def cmd_fig4(steps: int = FIG4_STEPS, command: str | None = None) -> FigureDataset:
    """SEF and SC scores of the 4 x 2 x 2 family over theta in [0, pi/2]."""
    steps = _steps(steps)
    rows = [(t, *analysis_422(t)) for t in np.linspace(0.0, math.pi / 2, steps)]
    return FigureDataset(("theta", "m_sef", "m_sc"), rows,
                         _provenance(command or f"monoqt fig4 --steps {steps}",
                                     theta_range=f"[0, pi/2] in {steps} points"))


def cmd_derivs(variable: str = "x", steps: int = DERIV_STEPS, command: str | None = None) -> FigureDataset:
    """First and second derivatives of E_f in ``x = C^2`` or ``C``.

    Points are ``i / steps`` for ``i = 1 .. steps``, so the last row is the
    endpoint limit at 1.  The divergent point 0 is left out.
    """
    if variable not in ("x", "C"):
        raise ArgumentError(f"variable must be 'x' or 'C', got {variable!r}")
    steps = _steps(steps)
    rows = []
    for i in range(1, steps + 1):
        d = eof_derivatives(i / steps, variable)
        rows.append((d.at, d.first, d.second))
    v = variable
    return FigureDataset((v, f"dE_d{v}", f"d2E_d{v}2"), rows,
                         _provenance(command or f"monoqt derivs --variable {v} --steps {steps}",
                                     range=f"(0, 1] in {steps} points, last row is the limit at 1"))


def _report_dict(rep) -> dict:
    return asdict(rep)


def cmd_check(path, partition: str | None = None, k="n", method: str | None = None, kind: int = 2,
              restarts: int = 4, seed: int = 0) -> dict:
    """Indicator report for a state file.

    ``k`` is an integer, ``"n"`` (the number of parties) or ``"chain"``
    (every k from 3 to n).  ``method`` picks the tail term for pure states:
    ``closed`` (Wootters pair), ``discord`` (Koashi-Winter) or ``roof``;
    mixed states only support ``roof``.
    """
    if method is not None and method not in METHODS:
        raise ArgumentError(f"method must be one of {METHODS}, got {method!r}")
    state = load_state(path)
    if partition is not None:
        state = group_parties(state, PartitionSpec.parse(partition))
    n = state.n
    if n < 3:
        raise ArgumentError(f"indicators need at least 3 parties, got dims {state.dims}")
    if k == "chain":
        ks = list(range(3, n + 1))
    elif k == "n":
        ks = [n]
    else:
        try:
            ks = [int(k)]
        except (TypeError, ValueError):
            raise ArgumentError(f"k must be an integer, 'n' or 'chain', got {k!r}") from None
    if isinstance(state, PureState):
        reports = [tau_sef_k_pure(state, kk, tail=_TAILS[method], restarts=restarts, seed=seed) for kk in ks]
    else:
        if method not in (None, "roof"):
            raise UnsupportedError(f"method {method!r} needs a pure state; mixed states use 'roof'")
        reports = [tau_sef_k_mixed(state, kk, kind=kind, restarts=restarts, seed=seed) for kk in ks]
    out = {
        "file": str(path),
        "kind": "pure" if isinstance(state, PureState) else "mixed",
        "dims": list(state.dims),
        "partition": partition,
        "method": method or "auto",
        "reports": [_report_dict(r) for r in reports],
    }
    if len(reports) > 1:
        taus = [r.raw_tau for r in reports]
        out["nondecreasing"] = all(b >= a - 1e-9 for a, b in zip(taus, taus[1:]))
    return out


def _dims_arg(text: str) -> tuple:
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ArgumentError(f"dims must be a comma-separated list of integers, got {text!r}") from None
    return dims


def cmd_fuzz(dims, inequality: str, samples: int, seed: int = 0, inject=(), mixed_rank: int | None = None,
             tolerance: float = 1e-9, workers: int | None = None) -> dict:
    cfg = CampaignConfig(dims, samples, seed, inequality, tolerance=tolerance, mixed_rank=mixed_rank,
                         inject=tuple(inject))
    return run_campaign(cfg, workers=workers).to_dict()


def fuzz_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def cmd_state_validate(path) -> dict:
    state = load_state(path)
    out = {"kind": "pure" if isinstance(state, PureState) else "mixed", "dims": list(state.dims), "valid": True}
    if isinstance(state, DensityMatrix):
        w = herm_eig(state.matrix).eigenvalues
        out["trace"] = float(np.trace(state.matrix).real)
        out["min_eigenvalue"] = float(w.min())
        out["purity"] = float(np.real(np.vdot(state.matrix, state.matrix)))
    else:
        out["norm"] = float(np.linalg.norm(state.amplitudes))
    return out


def _to_pure(rho: DensityMatrix, tol: float = 1e-9) -> PureState:
    w, v = herm_eig(rho.matrix)
    j = int(np.argmax(w))
    if abs(w[j] - 1.0) > tol:
        raise ContractError(f"state has purity below 1 (top eigenvalue {w[j]:.12g}); cannot write it as pure")
    return PureState.from_unnormalized(rho.dims, v[:, j])


def cmd_state_convert(src, dst, to: str | None = None, partition: str | None = None):
    """Reorder/merge parties and switch between the pure and mixed encodings."""
    state = load_state(src)
    if partition is not None:
        state = group_parties(state, PartitionSpec.parse(partition))
    if to == "mixed" and isinstance(state, PureState):
        state = state.to_density()
    elif to == "pure" and isinstance(state, DensityMatrix):
        state = _to_pure(state)
    elif to not in (None, "pure", "mixed"):
        raise ArgumentError(f"--to must be 'pure' or 'mixed', got {to!r}")
    save_state(state, dst)
    return state


def cmd_state_new(name: str, dst, **params) -> PureState:
    if name not in NAMED_STATES:
        raise ArgumentError(f"unknown state {name!r}; choose from {NAMED_STATES}")
    state = named_state(name, **{k: v for k, v in params.items() if v is not None})
    save_state(state, dst)
    return state


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="monoqt", description="Monogamy of squared entanglement of formation: figures and checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    f1 = sub.add_parser("fig1", help="W-state indicator against k")
    f1.add_argument("--n", type=int, default=20)
    f2 = sub.add_parser("fig2", help="cavity indicators against kt")
    f2.add_argument("--alpha", type=float, default=1 / math.sqrt(3))
    f2.add_argument("--kt-max", type=float, default=KT_MAX)
    f2.add_argument("--steps", type=int, default=FIG2_STEPS)
    f2.add_argument("--partition", default="c1_first", choices=sorted(CAVITY_PARTITIONS))
    f3 = sub.add_parser("fig3", help="cavity SC residual on an (alpha, kt) grid")
    f3.add_argument("--steps", type=int, default=FIG3_GRID, help="grid points per axis")
    f3.add_argument("--kt-max", type=float, default=KT_MAX)
    f4 = sub.add_parser("fig4", help="SEF and SC scores of the 4x2x2 family")
    f4.add_argument("--steps", type=int, default=FIG4_STEPS)
    dv = sub.add_parser("derivs", help="derivatives of the EOF curve")
    dv.add_argument("--variable", choices=("x", "C"), default="x")
    dv.add_argument("--steps", type=int, default=DERIV_STEPS)
    for sp in (f1, f2, f3, f4, dv):
        sp.add_argument("--out", help="CSV path (default: standard output)")

    ck = sub.add_parser("check", help="indicator report for a state file")
    ck.add_argument("state_file")
    ck.add_argument("--partition", help="party grouping such as '0|1|2,3'")
    ck.add_argument("--k", default="n", help="integer, 'n' or 'chain'")
    ck.add_argument("--method", choices=METHODS)
    ck.add_argument("--kind", type=int, choices=(1, 2), default=2, help="mixed-state indicator type")
    ck.add_argument("--restarts", type=int, default=4)
    ck.add_argument("--seed", type=int, default=0)

    fz = sub.add_parser("fuzz", help="seeded inequality campaign")
    fz.add_argument("--dims", required=True)
    fz.add_argument("--ineq", required=True, choices=INEQUALITIES)
    fz.add_argument("--samples", type=int, required=True)
    fz.add_argument("--seed", type=int, default=0)
    fz.add_argument("--inject", action="append", default=[])
    fz.add_argument("--mixed-rank", type=int)
    fz.add_argument("--tolerance", type=float, default=1e-9)
    fz.add_argument("--out", help="JSON path (default: standard output)")

    st = sub.add_parser("state", help="state file utilities")
    stsub = st.add_subparsers(dest="state_cmd", required=True, parser_class=_Parser)
    sv = stsub.add_parser("validate")
    sv.add_argument("state_file")
    sc = stsub.add_parser("convert")
    sc.add_argument("state_file")
    sc.add_argument("--out", required=True)
    sc.add_argument("--to", choices=("pure", "mixed"))
    sc.add_argument("--partition")
    sn = stsub.add_parser("new")
    sn.add_argument("name", choices=NAMED_STATES)
    sn.add_argument("--out", required=True)
    sn.add_argument("--n", type=int)
    sn.add_argument("--theta", type=float)
    sn.add_argument("--alpha", type=float)
    sn.add_argument("--kappa-t", type=float)
    return p


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args, command: str) -> None:
    if args.cmd == "fig1":
        ds = cmd_fig1(args.n, command)
    elif args.cmd == "fig2":
        ds = cmd_fig2(args.alpha, args.kt_max, args.steps, args.partition, command)
    elif args.cmd == "fig3":
        ds = cmd_fig3(args.steps, args.kt_max, command)
    elif args.cmd == "fig4":
        ds = cmd_fig4(args.steps, command)
    elif args.cmd == "derivs":
        ds = cmd_derivs(args.variable, args.steps, command)
    elif args.cmd == "check":
        rep = cmd_check(args.state_file, args.partition, args.k, args.method, args.kind, args.restarts, args.seed)
        sys.stdout.write(json.dumps(rep, indent=2) + "\n")
        return
    elif args.cmd == "fuzz":
        rep = cmd_fuzz(_dims_arg(args.dims), args.ineq, args.samples, args.seed,
                       [x for item in args.inject for x in item.split(",") if x], args.mixed_rank, args.tolerance)
        _emit(fuzz_json(rep), args.out)
        return
    else:
        if args.state_cmd == "validate":
            out = cmd_state_validate(args.state_file)
        elif args.state_cmd == "convert":
            out = state_to_dict(cmd_state_convert(args.state_file, args.out, args.to, args.partition))
            out = {"kind": out["kind"], "dims": out["dims"], "written": args.out}
        else:
            st = cmd_state_new(args.name, args.out, n=args.n, theta=args.theta, alpha=args.alpha,
                               kappa_t=args.kappa_t)
            out = {"dims": list(st.dims), "written": args.out}
        sys.stdout.write(json.dumps(out) + "\n")
        return
    _emit(ds.to_csv(), args.out)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _run(args, "monoqt " + " ".join(argv))
    except (StateFileError, ContractError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"monoqt: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapacityError as exc:
        print(f"monoqt: capacity limit: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ArgumentError, UnsupportedError) as exc:
        print(f"monoqt: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
