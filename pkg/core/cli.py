"""
Command line entry point: python -m core.cli <command> [options].

Exit status is 0 on success, 1 when an envelope validation registers a
violation, 2 on input errors (messages are prefixed with the module that
raised them) and 3 when the negative control of the validation suite
registers no violation. Every run writes its CSV outputs and a manifest to --out.
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.boolfn.derivatives import expected_derivative
from core.boolfn.io import load_polynomial, load_tensor
from core.boolfn.polynomial import TetrahedralPolynomial, from_tensor, quadratic_form
from core.bounds.quadratic import convex_tail, polynomial_grad_sup_norm, quad_lower_tail, quad_upper_tail
from core.bounds.tail import (
    BoundKind,
    TailBound,
    bonami_tail,
    degree3_tail,
    hanson_wright_tail,
    linfty_tail,
    multilevel_tail,
    quadratic_mean_tail,
)
from core.config.env_loader import config_loader, get_profile_name, get_settings
from core.config.logging_config import configure_logging
from core.entropy.tensorization import at_report, verify_at
from core.errors import IsingConcError
from core.mc import experiments
from core.mc.glauber import sample_statistic
from core.model.io import load_model
from core.model.ising import IsingModel, dobrushin_margin
from core.model.law import exact_law
from core.norms.interpolation import matrix_norm_12p, matrix_norm_1_2_p
from core.norms.partition_norm import all_partition_norms, partition_norm
from core.norms.partitions import parse_partition
from core.reporting.artifacts import build_manifest, write_csv, write_manifest
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)

EXAMPLES = ("ex2.5", "bond-law", "gumbel", "harmonic")


class Run:
    """Outputs, seeds and constants collected while a command executes."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.outputs: List[str] = []
        self.seeds: Dict[str, int] = {}
        self.constants: Dict[str, float] = {}

    def csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        path = write_csv(os.path.join(self.args.out, name), header, rows)
        self.outputs.append(path)
        return path

    def inputs(self) -> Dict[str, str]:
        names = ("model", "poly", "tensor")
        return {name: getattr(self.args, name) for name in names
                if getattr(self.args, name, None) and os.path.exists(getattr(self.args, name))}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ising-conc",
                                     description="Concentration bounds for polynomials of Ising models.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--profile", help="configuration profile (default, quick, full)")
    common.add_argument("--log-level", help="log level override")
    common.add_argument("--seed", type=int, help="root seed")
    common.add_argument("--constants", help="name=value,... constants map")

    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common], help="Dobrushin margin, beta and AT constant")
    check.add_argument("--model", required=True)
    check.add_argument("--beta-mode", choices=("exact", "bound"))

    sample = sub.add_parser("sample", parents=[common], help="Glauber samples of a polynomial")
    _sampling_arguments(sample)

    norms = sub.add_parser("norms", parents=[common], help="partition and interpolation norms")
    norms.add_argument("--tensor")
    norms.add_argument("--poly")
    norms.add_argument("--model")
    norms.add_argument("--partition")
    norms.add_argument("--p", help="p value or grid for the interpolation norms of a matrix")
    norms.add_argument("--restarts", type=int)

    bound = sub.add_parser("bound", parents=[common], help="closed-form tail bound on a t-grid")
    _bound_arguments(bound)

    validate = sub.add_parser("validate", parents=[common], help="two-seed envelope protocol",
                              epilog="Without --model the built-in suite runs; exit status 1 means an envelope "
                                     "violation, 3 a negative control that registered none.")
    _bound_arguments(validate, required=False)
    _sampling_arguments(validate, required=False)
    validate.add_argument("--validation-seed", type=int)
    validate.add_argument("--side", choices=("two-sided", "upper", "lower"))

    example = sub.add_parser("example", parents=[common], help="built-in reproductions")
    example.add_argument("name", choices=EXAMPLES)
    example.add_argument("--samples", type=int)
    example.add_argument("--p", help="p-grid")
    example.add_argument("--n", help="n-grid (ex2.5) or dimension")

    verify = sub.add_parser("verify-at", parents=[common], help="exhaustive approximate tensorization check")
    verify.add_argument("--model", required=True)
    verify.add_argument("--trials", type=int)
    return parser


def _sampling_arguments(parser: argparse.ArgumentParser, required: bool = True) -> None:
    if required:
        parser.add_argument("--model", required=True)
        parser.add_argument("--poly", required=True)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--burn-in", type=int)
    parser.add_argument("--thinning", type=int)
    parser.add_argument("--replicas", type=int)
    parser.add_argument("--force", action="store_true", help="sample even if the Dobrushin condition fails")


def _bound_arguments(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--model", required=required)
    parser.add_argument("--poly")
    parser.add_argument("--tensor")
    parser.add_argument("--kind", choices=[kind.value for kind in BoundKind], default="multilevel")
    parser.add_argument("--tgrid", required=required, help="a:b:steps or comma list")
    parser.add_argument("--p", help="p-grid for the profile bounds")


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if not getattr(args, name, None):
            raise IsingConcError(f"--{name.replace('_', '-')} is required for this command", module="cli")


def _matrix(args: argparse.Namespace, poly: Optional[TetrahedralPolynomial], law) -> np.ndarray:
    """Matrix of a quadratic statistic: the tensor file, or half the expected Hessian of the polynomial."""
    if args.tensor:
        tensor = load_tensor(args.tensor)
        if tensor.d != 2:
            raise IsingConcError(f"expected an order-2 tensor, got order {tensor.d}", module="cli")
        return np.asarray(tensor.entries)
    _require(args, "poly")
    return 0.5 * np.asarray(expected_derivative(poly, 2, law).entries)


def build_bound(args: argparse.Namespace, model: IsingModel,
                poly: Optional[TetrahedralPolynomial]) -> Tuple[TailBound, TetrahedralPolynomial]:
    """The requested bound and the statistic it describes."""
    kind = BoundKind(args.kind)
    constants = RunUtils.parse_constants(args.constants)
    p_grid = RunUtils.parse_grid(args.p) if args.p else None
    law = exact_law(model)
    if kind is BoundKind.MULTILEVEL:
        _require(args, "poly")
        return multilevel_tail(poly, law, constants), poly
    if kind is BoundKind.LINFTY:
        _require(args, "poly")
        return linfty_tail(poly, constants.get("c")), poly
    if kind is BoundKind.CONVEX_PLP:
        _require(args, "poly")
        return convex_tail(polynomial_grad_sup_norm(poly), constants.get("C"), constants.get("K"), p_grid), poly
    if kind is BoundKind.DEGREE3:
        if args.tensor:
            tensor = load_tensor(args.tensor)
        else:
            _require(args, "poly")
            tensor = expected_derivative(poly, 3, law).scaled(1.0 / 6.0)
        return degree3_tail(tensor, law, constants.get("c")), poly or from_tensor(tensor)
    A = _matrix(args, poly, law)
    statistic = poly if poly is not None else quadratic_form(A)
    if kind is BoundKind.HANSON_WRIGHT:
        return hanson_wright_tail(None, None, constants.get("c"), A=A), statistic
    if kind is BoundKind.BONAMI:
        return bonami_tail(float(np.linalg.norm(A)), constants.get("c")), statistic
    if kind is BoundKind.QUADRATIC_MEAN:
        return quadratic_mean_tail(A, law, constants.get("c")), statistic
    builder = quad_upper_tail if kind is BoundKind.QUAD_UPPER else quad_lower_tail
    return builder(A, constants.get("C_K"), p_grid), quadratic_form(A)


def cmd_check(run: Run) -> int:
    model = load_model(run.args.model)
    margin = dobrushin_margin(model)
    report = at_report(model, beta_mode=run.args.beta_mode)
    rows = [
        ("n", model.n),
        ("rho", margin.rho),
        ("alpha", margin.alpha),
        ("dobrushin_holds", margin.holds),
        ("beta", report.beta),
        ("beta_mode", report.beta_mode),
        ("influence_opnorm", report.influence_opnorm),
        ("at_constant", report.at_constant),
    ]
    run.csv("check.csv", ("quantity", "value"), rows)
    print(f"rho = {margin.rho:.6g}  alpha = {margin.alpha:.6g}  beta = {report.beta:.6g} ({report.beta_mode})")
    print(f"AT constant = {report.at_constant:.6g}  ({'finite' if np.isfinite(report.at_constant) else 'infinite'})")
    return 0


def cmd_sample(run: Run) -> int:
    args = run.args
    model = load_model(args.model)
    poly = load_polynomial(args.poly)
    seed = int(get_settings("mc")["seed"]) if args.seed is None else args.seed
    result = sample_statistic(model, poly, samples=args.samples, burn_in=args.burn_in, thinning=args.thinning,
                              seed=seed, replicas=args.replicas, force=args.force)
    run.seeds["sample"] = seed
    run.csv("samples.csv", ("index", "value"), list(enumerate(result.values.tolist())))
    run.csv("chains.csv", ("chain", "seed", "mean"),
            [(c, s, m) for c, (s, m) in enumerate(zip(result.seeds, result.chain_means))])
    print(f"mean = {result.values.mean():.6g} +- {result.stderr:.3g}  (chain spread {result.mean_spread:.3g}, "
          f"burn-in {result.burn_in}, thinning {result.thinning})")
    return 0


def cmd_norms(run: Run) -> int:
    args = run.args
    rows = []
    if args.tensor:
        tensor = load_tensor(args.tensor)
        tensors = [(tensor.d, tensor)]
    else:
        _require(args, "poly", "model")
        poly = load_polynomial(args.poly)
        law = exact_law(load_model(args.model))
        tensors = [(k, expected_derivative(poly, k, law)) for k in range(1, poly.degree + 1)]
    seed = int(get_settings("norms")["seed"]) if args.seed is None else args.seed
    run.seeds["norms"] = seed
    for k, tensor in tensors:
        if args.partition:
            partition = parse_partition(args.partition, d=tensor.d)
            results = {partition: partition_norm(tensor, partition, restarts=args.restarts, seed=seed)}
        else:
            results = all_partition_norms(tensor, restarts=args.restarts, seed=seed)
        for partition, result in results.items():
            rows.append((k, str(partition), "", result.value, result.exact, result.converged, result.restarts_used))
    if args.p:
        if not args.tensor or tensors[0][1].d != 2:
            raise IsingConcError("--p needs an order-2 --tensor", module="cli")
        A = np.asarray(tensors[0][1].entries)
        for p in RunUtils.parse_grid(args.p):
            rows.append((2, "{1,2}", p, matrix_norm_12p(A, p), True, True, 0))
            result = matrix_norm_1_2_p(A, p, restarts=args.restarts, seed=seed)
            rows.append((2, "{1}{2}", p, result.value, result.exact, result.converged, result.restarts_used))
    run.csv("norms.csv", ("k", "partition", "p", "value", "exact", "converged", "restarts"), rows)
    for row in rows:
        suffix = f",p={row[2]:g}" if row[2] != "" else ""
        print(f"k={row[0]} {row[1]}{suffix}: {row[3]:.12g}")
    return 0


def cmd_bound(run: Run) -> int:
    args = run.args
    model = load_model(args.model)
    poly = load_polynomial(args.poly) if args.poly else None
    bound, _ = build_bound(args, model, poly)
    run.constants.update(bound.constants)
    curve = bound.curve(RunUtils.parse_grid(args.tgrid))
    rows = [(t, value) + split_branch(branch) + (branch,)
            for t, value, branch in zip(curve.t_grid.tolist(), curve.values.tolist(), curve.branches)]
    run.csv("bound.csv", ("t", "bound", "k", "partition", "branch"), rows)
    return 0


def split_branch(branch: str) -> Tuple[str, str]:
    """'k=2 {1}{2}' -> ('2', '{1}{2}'); profile labels such as 'p=4' have no level."""
    if branch.startswith("k="):
        k, _, partition = branch[2:].partition(" ")
        return k, partition
    return "", ""


def cmd_validate(run: Run) -> int:
    args = run.args
    settings = get_settings("mc")
    train_seed = int(settings["seed"]) if args.seed is None else args.seed
    test_seed = int(settings["validation_seed"]) if args.validation_seed is None else args.validation_seed
    run.seeds.update({"train": train_seed, "validation": test_seed})

    if not args.model:
        result = experiments.run_protocol(train_seed=train_seed, test_seed=test_seed, samples=args.samples)
        rows = []
        for case in result.cases + ([result.control] if result.control else []):
            label = case.name if case is not result.control else f"{case.name} (control)"
            run.constants[label] = case.calibration.value
            for row in case.report.rows:
                rows.append((label, row.t, row.survival, row.stderr, row.bound, row.branch))
        run.csv("envelope.csv", ("case", "t", "survival", "stderr", "bound", "branch"), rows)
        print(f"{len(result.cases)} cases, {result.violations} violations; "
              f"negative control registered {result.control_violations}")
        if result.violations:
            return 1
        if result.control is not None and result.control_violations < 1:
            logger.warning("Negative control registered no violation; the protocol cannot detect a loose constant")
            return 3
        return 0

    _require(args, "tgrid")
    model = load_model(args.model)
    poly = load_polynomial(args.poly) if args.poly else None
    bound, statistic = build_bound(args, model, poly)
    if args.side and args.side != bound.side:
        raise IsingConcError(f"a {bound.kind.value} bound is {bound.side}, not {args.side}", module="cli")
    case = experiments.EnvelopeCase("cli", model, statistic, lambda law: bound, side=bound.side)
    t_grid = np.asarray(RunUtils.parse_grid(args.tgrid))
    result = experiments.run_case(case, train_seed, test_seed, samples=args.samples, t_grid=t_grid,
                                  burn_in=args.burn_in, thinning=args.thinning, replicas=args.replicas,
                                  force=args.force)
    run.constants[result.calibration.name] = result.calibration.value
    run.csv("envelope.csv", ("t", "survival", "stderr", "bound", "branch"),
            [(row.t, row.survival, row.stderr, row.bound, row.branch) for row in result.report.rows])
    print(f"{result.calibration.name} = {result.calibration.value:.6g}; {result.report.violations} violations")
    return 0 if result.report.passed else 1


def cmd_example(run: Run) -> int:
    args = run.args
    name = args.name
    if name == "ex2.5":
        n_grid = RunUtils.parse_grid(args.n, integer=True) if args.n else experiments.EXAMPLE25_GRID
        rows, slopes = experiments.example25_slopes(n_grid, seed=args.seed)
        keys = [key for key in rows[0] if key != "n"]
        run.csv("ex2.5_quantities.csv", ["n"] + keys, [[int(row["n"])] + [row[k] for k in keys] for row in rows])
        run.csv("ex2.5_slopes.csv", ("quantity", "slope", "corrected_slope"),
                [(key, fit.slope, fit.corrected) for key, fit in slopes.items()])
        for key, fit in slopes.items():
            print(f"{key}: slope {fit.slope:.4f}, offset-corrected {fit.corrected:.4f}")
    elif name == "bond-law":
        seed = int(get_settings("mc")["seed"]) if args.seed is None else args.seed
        run.seeds["sample"] = seed
        report = experiments.bond_law(samples=args.samples, seed=seed)
        run.csv("bond_law.csv", ("bond", "empirical_plus", "enumerated_plus", "exact_plus"),
                [(b, v, report.enumerated_plus[b], report.exact_plus) for b, v in enumerate(report.empirical_plus)])
        print(f"P(bond = +1) = {report.exact_plus:.6g}; mean of s1 s2 {report.empirical_mean:.6g} "
              f"+- {report.stderr:.3g} (exact {report.exact_mean:.6g})")
    elif name == "gumbel":
        n = int(args.n) if args.n else 64
        rows, slope = experiments.gumbel_profile(n, RunUtils.parse_grid(args.p) if args.p else None, seed=args.seed)
        run.csv("gumbel_profile.csv", ("p", "log_p", "norm_12p", "norm_1_2p", "upper"),
                [(r["p"], r["log_p"], r["{1,2},p"], r["{1}{2},p"], r["upper"]) for r in rows])
        print(f"upper threshold grows by {slope:.4g} per unit of log p")
    else:
        n = int(args.n) if args.n else 4096
        rows = experiments.harmonic_profile(n, RunUtils.parse_grid(args.p) if args.p else None)
        run.csv("harmonic_profile.csv", ("p", "log_p", "norm", "head", "tail", "sandwich"),
                [(r["p"], r["log_p"], r["norm"], r["head"], r["tail"], r["sandwich"]) for r in rows])
        for r in rows:
            print(f"p={r['p']:g}: {r['norm']:.6g}")
    return 0


def cmd_verify_at(run: Run) -> int:
    args = run.args
    model = load_model(args.model)
    seed = int(get_settings("entropy")["seed"]) if args.seed is None else args.seed
    run.seeds["verify_at"] = seed
    constants = RunUtils.parse_constants(args.constants)
    result = verify_at(model, trials=args.trials, seed=seed, constant=constants.get("C"))
    run.constants["C"] = result.constant
    run.csv("verify_at.csv", ("trial", "ent", "conditional_sum", "bound", "ratio"),
            [(r.trial, r.ent, r.conditional_sum, r.bound, r.ratio) for r in result.rows])
    print(f"max ratio {result.max_ratio:.6g} against C = {result.constant:.6g}; {result.violations} violations")
    return 0 if result.violations == 0 else 1


COMMANDS = {
    "check": cmd_check,
    "sample": cmd_sample,
    "norms": cmd_norms,
    "bound": cmd_bound,
    "validate": cmd_validate,
    "example": cmd_example,
    "verify-at": cmd_verify_at,
}


def _arguments(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: value for key, value in sorted(vars(args).items()) if value is not None}


def _finish(run: Run, status: int) -> None:
    finite = {k: float(v) for k, v in run.constants.items() if np.isfinite(v) and v > 0}
    manifest = build_manifest(run.args.command, _arguments(run.args), get_profile_name(), run.seeds, finite,
                              run.inputs(), run.outputs, status=status)
    write_manifest(run.args.out, manifest)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.profile:
        os.environ["ISING_CONC_PROFILE"] = args.profile
        config_loader.reload()
    configure_logging(level=args.log_level)
    run = Run(args)
    try:
        status = COMMANDS[args.command](run)
    except IsingConcError as e:
        print(f"error [{e.module}]: {e}", file=sys.stderr)
        status = 2
    except FileNotFoundError as e:
        print(f"error [cli]: file not found: {e.filename}", file=sys.stderr)
        status = 2
    try:
        _finish(run, status)
    except (IsingConcError, OSError) as e:
        logger.error(f"Could not write the manifest: {e}")
        return 2
    return status


if __name__ == "__main__":
    sys.exit(main())
