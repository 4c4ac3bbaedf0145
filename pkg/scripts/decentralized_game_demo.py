"""Run one decentralized saddle-point experiment and print its report.

Thin wrapper over the library harness: builds a RunConfig from command-line
flags, runs the penalized sliding solver, and prints the summary block. With
--out the trace, summary, and plot data are written as CSV/text files.

Example:
    python3 scripts/decentralized_game_demo.py --topology ring --m 4 \
        --epsilon 0.05 --mode stochastic --sigma 0.1 --seed 3 --out /tmp/demo
"""

import argparse

from saddleslide import RunConfig, emit_outputs, run_experiment


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="matching_pennies",
                    choices=("matching_pennies", "matrix_game_random",
                             "l1_saddle_random"))
    ap.add_argument("--topology", default="ring",
                    choices=("single", "complete", "ring", "path", "star",
                             "erdos_renyi"))
    ap.add_argument("--m", type=int, default=4, help="number of nodes")
    ap.add_argument("--epsilon", type=float, default=0.05)
    ap.add_argument("--mode", default="deterministic",
                    choices=("deterministic", "stochastic"))
    ap.add_argument("--sigma", type=float, default=0.0)
    ap.add_argument("--p-confidence", type=float, default=0.25)
    ap.add_argument("--instance-seed", type=int, default=0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--N", type=int, default=None,
                    help="override the iteration budget")
    ap.add_argument("--out", default=None, help="output directory")
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    config = RunConfig(
        family=args.family,
        instance_seed=args.instance_seed,
        network_kind=args.topology,
        m=args.m,
        epsilon=args.epsilon,
        mode=args.mode,
        sigma=args.sigma,
        p_confidence=args.p_confidence,
        N_override=args.N,
        seed=args.seed,
        out_dir=args.out,
    )
    config.validate()
    report = run_experiment(config)
    for line in report.summary_lines():
        print(line)
    if args.out is not None:
        for path in emit_outputs(report, report.trace, args.out):
            print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
