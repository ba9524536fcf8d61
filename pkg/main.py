"""
Main entry point for the top-down decision tree induction system.

Greedy top-down builders (exact influences or samples only) learn decision
trees that epsilon-approximate a target under a product distribution; a
brute-force property suite and experiment drivers sit on top of them.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from builders.exact_builder import build_topdown_exact
from builders.practical_builder import build_topdown_practical
from core.distribution import ProductDistribution
from core.oracle import TreeOracle
from core.tree_format import load_distribution, load_tree, save_tree
from core.trees import BareTree, DecisionTree, average_depth, max_depth
from engines.exact_engine import completion_error, cost, f_completion, tree_error
from experiments.config import ExperimentConfig
from experiments.runner import ExperimentResult, run_experiment
from utils import settings
from verify.suite import ESTIMATOR_INSTANCES, SuiteResult, run_property_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2


class InductionSystem:
    """Main orchestration class for building, verifying and experimenting."""

    def build(
        self,
        target: DecisionTree,
        dist: ProductDistribution,
        epsilon: float,
        delta: float = 0.1,
        seed: Optional[int] = None,
        mode: str = "practical",
        halve_epsilon: bool = False,
        show_details: bool = False,
    ) -> Dict:
        """
        Learn a tree for a known target through the chosen builder.

        Args:
            target: Ground-truth tree; the practical builder sees it only through an oracle
            dist: The product distribution
            epsilon: Target error
            delta: Failure probability (practical mode)
            seed: Master seed (practical mode)
            mode: "exact" or "practical"
            halve_epsilon: Aim for epsilon / 2 (practical mode)
            show_details: Whether to show intermediate steps

        Returns:
            Dictionary with tree, trace, usage report and exact error
        """
        if show_details:
            print("\n" + "=" * 60)
            print("Top-Down Induction Pipeline")
            print("=" * 60)
            print(f"\n[Step 1] Target has {target.size} leaves, D={max_depth(target)}, "
                  f"Delta={average_depth(target, dist):.4f}")

        if show_details:
            print(f"\n[Step 2] Growing a tree with the {mode} builder (epsilon={epsilon})...")
        usage = None
        if mode == "exact":
            tree, trace = build_topdown_exact(target, dist, epsilon, ground_truth=target)
        elif mode == "practical":
            oracle = TreeOracle(target, dist)
            tree, trace, usage = build_topdown_practical(
                oracle, dist, epsilon, delta, seed=seed, halve_epsilon=halve_epsilon, ground_truth=target
            )
        else:
            raise ValueError(f"Unknown mode {mode!r}; expected 'exact' or 'practical'.")
        if show_details:
            print(f"Splits: {trace.splits}, terminated: {trace.terminated}")

        if show_details:
            print("\n[Step 3] Measuring the exact error...")
        error = tree_error(tree, target, dist)
        if show_details:
            print(f"Exact error: {error:.6g}")

        return {"tree": tree, "trace": trace, "usage": usage, "exact_error": error}

    def verify(self, tree, target: DecisionTree, dist: ProductDistribution) -> Dict:
        """
        Exact error of a hypothesis; a bare tree is scored through its f-completion.

        Returns:
            Dictionary with error, and cost for bare trees
        """
        if isinstance(tree, BareTree):
            return {
                "error": completion_error(tree, target, dist),
                "cost": cost(tree, target, dist),
                "completion": f_completion(tree, target, dist),
            }
        return {"error": tree_error(tree, target, dist)}

    def properties(
        self, seed: int, count: int, out: Optional[str] = None, estimator_instances: int = ESTIMATOR_INSTANCES
    ) -> SuiteResult:
        return run_property_suite(seed, count, out_dir=out, estimator_instances=estimator_instances)

    def run(self, config: ExperimentConfig, out: Optional[str] = None, show_details: bool = False) -> ExperimentResult:
        return run_experiment(config, out, show_details=show_details)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Greedy top-down decision tree induction under product distributions.")
    parser.add_argument("--verbose", action="store_true", help="Show intermediate steps and debug logging.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment from a JSON configuration.")
    run.add_argument("--config", required=True, help="Path to the JSON experiment configuration.")
    run.add_argument("--out", help="Output CSV path (overrides the config's output).")

    props = sub.add_parser("props", help="Run the property suite.")
    props.add_argument("--seed", type=int, default=None, help="Master seed (TOPDOWN_MASTER_SEED by default).")
    props.add_argument("--count", type=int, default=200, help="Number of random instances.")
    props.add_argument("--out", help="Directory for report.txt, report.csv and witnesses.")
    props.add_argument(
        "--estimator-instances", type=int, default=ESTIMATOR_INSTANCES,
        help="Instances, dictator first, that also get the Monte Carlo checks.",
    )

    build = sub.add_parser("build", help="Learn a tree for one target.")
    build.add_argument("--target", required=True, help="Target tree file.")
    build.add_argument("--dist", required=True, help="Distribution file.")
    build.add_argument("--epsilon", type=float, required=True)
    build.add_argument("--delta", type=float, default=0.1)
    build.add_argument("--seed", type=int, default=None)
    build.add_argument("--mode", choices=["exact", "practical"], default="practical")
    build.add_argument("--halve-epsilon", action="store_true", help="Aim for epsilon / 2 internally.")
    build.add_argument("--out", help="Trace CSV path; the tree is written next to it.")

    verify = sub.add_parser("verify", help="Exact error of a tree against a target.")
    verify.add_argument("--tree", required=True, help="Hypothesis tree file (labeled or bare).")
    verify.add_argument("--target", required=True, help="Target tree file.")
    verify.add_argument("--dist", required=True, help="Distribution file.")
    return parser


def _load_target(path: str, dist: ProductDistribution) -> DecisionTree:
    target = load_tree(path, dist.n)
    if not isinstance(target, DecisionTree):
        raise ValueError(f"Target {path} must be a labeled tree.")
    return target


def _command_build(system: InductionSystem, args) -> int:
    dist = load_distribution(args.dist)
    target = _load_target(args.target, dist)
    result = system.build(
        target, dist, args.epsilon, args.delta, args.seed, args.mode, args.halve_epsilon, show_details=args.verbose
    )
    trace = result["trace"]
    print(f"\nLearned tree: {result['tree'].size} leaves, exact error {result['exact_error']:.6g}, "
          f"terminated={trace.terminated}")
    if result["usage"] is not None:
        print(f"Label queries: {result['usage'].label_queries}, random draws: {result['usage'].random_draws}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(trace.to_rows()).to_csv(out, index=False, float_format="%.12g")
        save_tree(result["tree"], out.with_name(f"{out.stem}_tree.json"))
        if result["usage"] is not None:
            result["usage"].write_csv(out.with_name(f"{out.stem}_usage.csv"))
        print(f"Trace written to {out}")
    return EXIT_OK


def _command_verify(system: InductionSystem, args) -> int:
    dist = load_distribution(args.dist)
    target = _load_target(args.target, dist)
    result = system.verify(load_tree(args.tree, dist.n), target, dist)
    print(f"Exact error: {result['error']:.12g}")
    if "cost" in result:
        print(f"Cost: {result['cost']:.12g}")
    return EXIT_OK


def _command_props(system: InductionSystem, args) -> int:
    seed = settings.master_seed() if args.seed is None else args.seed
    suite = system.properties(seed, args.count, args.out, args.estimator_instances)
    for key, value in suite.summary().items():
        print(f"{key}: {value}")
    return EXIT_VIOLATION if suite.violations else EXIT_OK


def _command_run(system: InductionSystem, args) -> int:
    config = ExperimentConfig.from_json(args.config)
    result = system.run(config, args.out, show_details=args.verbose)
    if result.summary is not None:
        print(result.summary.to_string(index=False))
    if result.fit is not None:
        print(f"\nSample-complexity constant C={result.fit[0]:.4g}, max deviation factor {result.fit[1]:.3g}")
    return result.exit_status


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for the induction command line.
    """
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad usage; 2 is reserved for property violations
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)

    print("=" * 60)
    print("Top-Down Decision Tree Induction")
    print("=" * 60)

    commands = {"build": _command_build, "verify": _command_verify, "props": _command_props, "run": _command_run}
    try:
        return commands[args.command](InductionSystem(), args)
    except (ValueError, OSError) as e:
        print(f"\nError: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
