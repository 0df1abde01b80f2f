"""
Command-line front end for coxeter-forge

    forge build-free --diagram C3 --rounds 3 --out state.json
    forge build-cn --n 3 --m 4 --steps 50 --out cn.json
    forge verify --properties fpd --state state.json
    forge residue --geometry g.json --flag 0,5 --types 2,3
    forge export --state state.json --format dot
    forge fraisse ap --diagram H3 --samples 100 --size-bound 12 --seed 0
    forge fraisse amalgamate --a a.json --b b.json --c c.json --iota i.json --kappa k.json --diagram C3
    forge metrics --state state.json

Exit codes: 0 success or PASS, 1 verification FAIL (verdict JSON on stdout),
2 usage or input error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .cn_construction import (
    CnState,
    check_cn_properties,
    init_lambda0,
    materialized_geometry,
    run_cn,
    verify_type_n_residue,
)
from .config import Caps, Settings, configure_logging
from .diagram import CoxeterDiagram, standard_diagram
from .errors import ForgeError, InvariantViolation, PreconditionError
from .fraisse import LStructure, check_amalgamation_property, close_into_class, free_amalgam
from .free_construction import ConstructionState, build_free, progress_metrics
from .free_properties import check_all
from .geometry import (
    Geometry,
    Verdict,
    bond_json,
    component_count,
    diameter,
    girth,
    is_geometry_of_type_M,
    rank2_restriction,
    residue,
)
from .io_tools import (
    dumps,
    export_dot,
    load_diagram,
    load_geometry,
    load_map,
    load_state,
    save_geometry,
    save_state,
    write_json,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def cn_diagram(n: int, m: int) -> CoxeterDiagram:
    """Linear diagram on 1..n with bonds 3 and a terminal m-bond"""
    types = [str(k + 1) for k in range(n)]
    bonds = {(types[k], types[k + 1]): 3 for k in range(n - 2)}
    bonds[(types[n - 2], types[n - 1])] = m
    return CoxeterDiagram(types, bonds)


def _diagram(arg: str) -> CoxeterDiagram:
    """A diagram file, or a standard name such as C3, H3, F4, I2(5)"""
    if Path(arg).exists():
        return load_diagram(arg)
    return standard_diagram(arg)


def _emit(data: dict) -> None:
    sys.stdout.write(dumps(data))


def _verdict_report(verdicts: Sequence[Verdict]) -> Tuple[dict, int]:
    passed = all(v.passed for v in verdicts)
    report = {'status': 'pass' if passed else 'fail', 'verdicts': [v.to_dict() for v in verdicts]}
    return report, EXIT_OK if passed else EXIT_FAIL


def _geometry_source(args: argparse.Namespace) -> Tuple[Geometry, Optional[CoxeterDiagram], object]:
    """Geometry and diagram from --geometry/--diagram or from --state"""
    if getattr(args, 'state', None):
        state = load_state(args.state)
        if isinstance(state, CnState):
            return materialized_geometry(state), cn_diagram(state.n, state.m), state
        return state.geometry, state.diagram, state
    if getattr(args, 'geometry', None):
        d = _diagram(args.diagram) if getattr(args, 'diagram', None) else None
        return load_geometry(args.geometry), d, None
    raise PreconditionError("either --geometry or --state is required")


def _caps(args: argparse.Namespace, settings: Settings) -> Caps:
    return Caps(
        a=settings.caps.a if args.cap_a is None else args.cap_a,
        b=settings.caps.b if args.cap_b is None else args.cap_b,
        c=settings.caps.c if args.cap_c is None else args.cap_c,
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_build_free(args: argparse.Namespace, settings: Settings) -> int:
    d = _diagram(args.diagram)
    seed = None if args.seed == 'empty' else load_geometry(args.seed)
    check = args.check_every_task or settings.check_every_task
    state = build_free(d, seed, args.rounds, _caps(args, settings), check_every_task=check)
    metrics = progress_metrics(state)
    if args.out:
        save_state(state, args.out, metrics)
    _emit({'stage': state.stage, 'rounds': [r.model_dump() for r in state.rounds], 'metrics': metrics.model_dump()})
    return EXIT_OK


def cmd_build_cn(args: argparse.Namespace, settings: Settings) -> int:
    height = settings.cn_height if args.height is None else args.height
    limit = settings.cn_limit if args.limit is None else args.limit
    check = args.check_every_step or settings.check_every_task
    state = init_lambda0(args.n, args.m)
    run_cn(state, args.steps, height, limit, check_every_step=check)
    if args.out:
        save_state(state, args.out)
    g = state.geometry
    _emit({
        'step': state.schedule.step,
        'history': list(state.schedule.history),
        'vertices': {t: len(g.vertices_of_type(t)) for t in g.types},
        'paths': len(state.paths),
    })
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    if args.properties == 'cn':
        if not args.state:
            raise PreconditionError("--properties cn needs a C_n --state")
        state = load_state(args.state)
        if not isinstance(state, CnState):
            raise PreconditionError(f"{args.state} is not a C_n state")
        verdicts = check_cn_properties(state, sample=args.sample)
        if args.residue_sample > 0:
            verdicts += [verify_type_n_residue(state, x, args.residue_sample) for x in state.type_n_vertices()]
        report, code = _verdict_report(verdicts)
    else:
        g, d, _ = _geometry_source(args)
        if d is None:
            raise PreconditionError("a --diagram is needed to verify a bare geometry")
        if args.properties == 'fpd':
            report, code = _verdict_report(check_all(g, d))
        else:
            report, code = _verdict_report([is_geometry_of_type_M(g, d)])
    _emit(report)
    logger.info(f"verify {args.properties}: {report['status']}")
    return code


def cmd_residue(args: argparse.Namespace, settings: Settings) -> int:
    g, _, _ = _geometry_source(args)
    try:
        flag = [int(v) for v in args.flag.split(',') if v.strip()]
    except ValueError as e:
        raise PreconditionError(f"--flag must list integer vertex ids: {e}") from e
    res = residue(g, flag)
    report: dict = {'flag': sorted(flag), 'residue': res.to_dict()}
    if args.types:
        pair = [t.strip() for t in args.types.split(',')]
        if len(pair) != 2:
            raise PreconditionError(f"--types needs exactly two types, got {args.types!r}")
        i, j = pair
        view = rank2_restriction(res, i, j)
        report.update(
            types=[i, j],
            girth=bond_json(girth(view)),
            diameter=bond_json(diameter(view)),
            components=component_count(view),
        )
    else:
        report.update(
            girth=bond_json(girth(res)),
            diameter=bond_json(diameter(res)),
            components=component_count(res),
        )
    _emit(report)
    return EXIT_OK


def cmd_export(args: argparse.Namespace, settings: Settings) -> int:
    g, _, _ = _geometry_source(args)
    if args.format == 'dot':
        text = export_dot(g)
        if args.out:
            Path(args.out).write_text(text, encoding='utf-8')
        else:
            sys.stdout.write(text)
    elif args.out:
        save_geometry(g, args.out)
    else:
        _emit({'version': 1, **g.to_dict()})
    return EXIT_OK


def cmd_fraisse_ap(args: argparse.Namespace, settings: Settings) -> int:
    d = _diagram(args.diagram)
    seed = settings.seed if args.seed is None else args.seed
    report = check_amalgamation_property(args.samples, args.size_bound, d, seed=seed)
    data = report.model_dump()
    if args.out:
        write_json(args.out, data)
    _emit(data)
    failed = report.hereditary_fail + report.amalgamation_fail
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_fraisse_amalgamate(args: argparse.Namespace, settings: Settings) -> int:
    d = _diagram(args.diagram)
    a, b, c = (LStructure(load_geometry(p), d) for p in (args.a, args.b, args.c))
    for name, s in (('a', a), ('b', b), ('c', c)):
        verdicts = check_all(s.geometry, d)
        if not all(v.passed for v in verdicts):
            logger.error(f"❌ input {name.upper()} is not in the class")
            report, _ = _verdict_report(verdicts)
            _emit({**report, 'input': name})
            return EXIT_USAGE
    amalgam, lam, mu = free_amalgam(a, b, c, load_map(args.iota), load_map(args.kappa))
    if args.rounds > 0:
        amalgam = close_into_class(amalgam, args.rounds)
    if args.out:
        save_geometry(amalgam.geometry, args.out)
    _emit({'geometry': amalgam.geometry.to_dict(), 'lambda': lam.to_dict(), 'mu': mu.to_dict()})
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace, settings: Settings) -> int:
    state = load_state(args.state)
    if isinstance(state, ConstructionState):
        _emit(progress_metrics(state, sample=args.sample).model_dump())
        return EXIT_OK
    g = state.geometry
    _emit({
        'step': state.schedule.step,
        'vertices': {t: len(g.vertices_of_type(t)) for t in g.types},
        'incidences': g.number_of_incidences(),
        'panel_entries': sum(len(p) for p in state.panels.values()),
        'paths': len(state.paths),
    })
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_source(p: argparse.ArgumentParser) -> None:
    p.add_argument('--geometry', help='Geometry JSON file')
    p.add_argument('--state', help='Construction state JSON file (free or C_n)')
    p.add_argument('--diagram', help='Diagram JSON file or standard name (C3, H3, F4, I2(5), ...)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='forge', description='Free constructions of geometries of Coxeter type')
    parser.add_argument('--log-level', default=None, help='Logging level (default: FORGE_LOG_LEVEL or INFO)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('build-free', help='Run the free construction over an A3-free diagram')
    p.add_argument('--diagram', required=True, help='Diagram JSON file or standard name')
    p.add_argument('--seed', default='empty', help="Seed geometry JSON file, or 'empty'")
    p.add_argument('--rounds', type=int, default=3)
    p.add_argument('--cap-a', type=int, default=None)
    p.add_argument('--cap-b', type=int, default=None)
    p.add_argument('--cap-c', type=int, default=None)
    p.add_argument('--out', help='Where to write STATE.json')
    p.add_argument('--check-every-task', action='store_true', help='Check (F), (P), (D) after every task')
    p.set_defaults(handler=cmd_build_free)

    p = sub.add_parser('build-cn', help='Run the construction for a linear diagram with a terminal m-bond')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--m', type=int, required=True)
    p.add_argument('--steps', type=int, default=50)
    p.add_argument('--height', type=int, default=None)
    p.add_argument('--limit', type=int, default=None)
    p.add_argument('--out', help='Where to write STATE.json')
    p.add_argument('--check-every-step', action='store_true', help='Check all six properties after every step')
    p.set_defaults(handler=cmd_build_cn)

    p = sub.add_parser('verify', help='Check properties of a geometry or state')
    _add_source(p)
    p.add_argument('--properties', choices=['fpd', 'cn', 'typeM'], default='fpd')
    p.add_argument('--sample', type=int, default=3, help='Sampled lazy queries per subspace (cn)')
    p.add_argument('--residue-sample', type=int, default=0, help='Also verify every type-n residue (cn)')
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser('residue', help='Print the residue of a flag')
    _add_source(p)
    p.add_argument('--flag', default='', help='Comma-separated vertex ids')
    p.add_argument('--types', help='Restrict the residue to two types, e.g. 2,3')
    p.set_defaults(handler=cmd_residue)

    p = sub.add_parser('export', help='Export a geometry as DOT or JSON')
    _add_source(p)
    p.add_argument('--format', choices=['dot', 'json'], default='dot')
    p.add_argument('--out')
    p.set_defaults(handler=cmd_export)

    p = sub.add_parser('fraisse', help='Amalgamation machinery for C3, H3 and F4')
    fsub = p.add_subparsers(dest='fraisse_command', required=True)
    q = fsub.add_parser('ap', help='Sampled hereditary and amalgamation checks')
    q.add_argument('--diagram', required=True)
    q.add_argument('--samples', type=int, default=100)
    q.add_argument('--size-bound', type=int, default=12)
    q.add_argument('--seed', type=int, default=None)
    q.add_argument('--out')
    q.set_defaults(handler=cmd_fraisse_ap)
    q = fsub.add_parser('amalgamate', help='Free amalgam of B and C over A')
    for name in ('a', 'b', 'c'):
        q.add_argument(f'--{name}', required=True, help=f'Geometry JSON for {name.upper()}')
    q.add_argument('--iota', required=True, help='Embedding map A -> B')
    q.add_argument('--kappa', required=True, help='Embedding map A -> C')
    q.add_argument('--diagram', required=True)
    q.add_argument('--rounds', type=int, default=0, help='Procedure-B rounds after gluing')
    q.add_argument('--out')
    q.set_defaults(handler=cmd_fraisse_amalgamate)

    p = sub.add_parser('metrics', help='Progress metrics of a saved state')
    p.add_argument('--state', required=True)
    p.add_argument('--sample', type=int, default=32)
    p.set_defaults(handler=cmd_metrics)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = Settings.from_env()
    configure_logging(args.log_level or settings.log_level)

    try:
        return args.handler(args, settings)
    except InvariantViolation as e:
        logger.error(f"❌ {e}")
        verdict = e.verdict.to_dict() if isinstance(e.verdict, Verdict) else None
        _emit({'status': 'fail', 'error': str(e), 'verdict': verdict, 'task': e.task})
        return EXIT_FAIL
    except ForgeError as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"❌ Unexpected error: {e}")
        raise


if __name__ == "__main__":
    sys.exit(main())
