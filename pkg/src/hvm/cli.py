"""Command-line interface: generation, training, parsing, and the four
experiment families. All outputs are CSV/JSON under --out; replays with the
same seeds are byte-identical."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import experiments
from .corpus import (
    SymbolTable,
    load_model,
    load_symbol_table,
    read_int_sequence,
    save_model,
    write_int_sequence,
)
from .errors import HvmError
from .generator import GenConfig, generate
from .learner import LearnerConfig, learn_batch, nll_independent
from .metrics import build_report
from .parsing import parse_sequence


def _learner_overrides(args) -> dict:
    out = {}
    for name in ("theta", "alpha", "t_min", "t_max", "freq_t", "smoothing_eps"):
        value = getattr(args, name, None)
        if value is not None:
            out[name] = value
    if getattr(args, "iterations", None) is not None:
        out["max_iterations"] = args.iterations
    if getattr(args, "mode", None) is not None:
        out["mode"] = args.mode
    return out


def _add_learner_flags(parser, with_mode=True):
    parser.add_argument("--theta", type=float, default=None, help="memory decay per parsing step")
    parser.add_argument("--alpha", type=float, default=None, help="significance level")
    parser.add_argument("--t-min", dest="t_min", type=int, default=None)
    parser.add_argument("--t-max", dest="t_max", type=int, default=None)
    parser.add_argument("--freq-t", dest="freq_t", type=float, default=None)
    parser.add_argument("--iterations", type=int, default=None, help="batch iteration cap")
    parser.add_argument("--smoothing-eps", dest="smoothing_eps", type=float, default=None)
    if with_mode:
        parser.add_argument("--mode", choices=["hvm", "hcm"], default=None)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(command: str, args) -> dict:
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    return {"command": command, **resolved}


def _read_sequence(args) -> tuple[list[int], SymbolTable | None]:
    if args.text:
        table = SymbolTable()
        seq = table.encode(Path(args.input).read_text(encoding="utf-8"))
        return seq, table
    return read_int_sequence(args.input), None


def cmd_gen(args) -> None:
    out = _out_dir(args)
    config = GenConfig(args.alphabet_size, args.depth, args.length, args.seed)
    inv, seq, w_gt = generate(config)
    write_int_sequence(seq, out / "sequence.txt")
    (out / "ground_truth.json").write_text(
        json.dumps({"w_gt": w_gt, "inventory": inv.to_dict()}, indent=2), encoding="utf-8"
    )
    print(f"wrote {out / 'sequence.txt'} ({len(seq)} atoms, |W_GT|={len(w_gt)})")


def cmd_train(args) -> None:
    out = _out_dir(args)
    seq, table = _read_sequence(args)
    config = LearnerConfig(**{**dict(mode="hvm"), **_learner_overrides(args)})
    result = learn_batch(seq, config)
    save_model(result.inventory, out / "model.json", symbol_table=table)
    fields = ["iteration", "n_chunks", "n_variables", "w", "nll_independent", "rc_v", "entropy", "mean_pss"]
    experiments.write_csv(result.trajectory, out / "trajectory.csv", fields)
    print(
        f"trained {config.mode} for {result.n_iterations} iterations "
        f"(converged={result.converged}); wrote {out / 'model.json'}"
    )


def cmd_parse(args) -> None:
    out = _out_dir(args)
    inventory = load_model(args.model)
    table = load_symbol_table(args.model)
    if args.text:
        if table is None:
            raise HvmError("model file carries no symbol table; cannot parse text")
        seq = [table.to_id[ch] for ch in Path(args.input).read_text(encoding="utf-8")]
    else:
        seq = read_int_sequence(args.input)
    from .parsing import ParsingGraph

    graph = ParsingGraph.from_inventory(inventory)
    outcome = parse_sequence(graph, inventory, seq)
    with (out / "parse.jsonl").open("w", encoding="utf-8") as fh:
        for record in outcome.to_records():
            fh.write(json.dumps(record) + "\n")
    report = build_report(inventory, graph, outcome, len(seq))
    with (out / "pss.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w", "s", "mean_pss", "epss", "nll"])
        writer.writerow([len(outcome.units), len(seq), outcome.mean_steps(), report.epss, report.nll])
    print(f"parsed |S|={len(seq)} into |W|={len(outcome.units)}; wrote {out / 'parse.jsonl'}")


def cmd_gen_eval(args) -> None:
    out = _out_dir(args)
    overrides = _learner_overrides(args)
    rows = experiments.gen_eval(
        n_seeds=args.seeds,
        base_seed=args.seed,
        alphabet_size=args.alphabet_size,
        depth=args.depth,
        length=args.length,
        learner_overrides=overrides,
    )
    experiments.write_csv(rows, out / "gen_eval.csv", experiments.GEN_EVAL_FIELDS)
    experiments.write_manifest(out / "manifest.json", _manifest("gen-eval", args))
    print(f"wrote {out / 'gen_eval.csv'} ({len(rows)} rows)")


def cmd_corpus_eval(args) -> None:
    out = _out_dir(args)
    rows = experiments.corpus_eval(
        args.corpus,
        n_snippets=args.snippets,
        snippet_len=args.snippet_len,
        base_seed=args.seed,
        learner_overrides=_learner_overrides(args),
    )
    experiments.write_csv(rows, out / "corpus_eval.csv", experiments.CORPUS_FIELDS)
    experiments.write_manifest(out / "manifest.json", _manifest("corpus-eval", args))
    print(f"wrote {out / 'corpus_eval.csv'} ({len(rows)} rows)")


def cmd_memory_sim(args) -> None:
    out = _out_dir(args)
    rows = experiments.memory_sim(
        theta=args.theta if args.theta is not None else 0.996,
        n_train=args.trials,
        n_transfer=args.transfer_trials,
        seed=args.seed,
        learner_overrides={
            k: v for k, v in _learner_overrides(args).items() if k not in ("theta", "mode")
        },
    )
    experiments.write_csv(rows, out / "memory_sim.csv", experiments.MEMORY_FIELDS)
    experiments.write_manifest(out / "manifest.json", _manifest("memory-sim", args))
    print(f"wrote {out / 'memory_sim.csv'} ({len(rows)} rows)")


def cmd_abstraction_sweep(args) -> None:
    out = _out_dir(args)
    rows = experiments.abstraction_sweep(
        n_seeds=args.seeds,
        base_seed=args.seed,
        alphabet_size=args.alphabet_size,
        depth=args.depth,
        length=args.length,
        learner_overrides=_learner_overrides(args),
    )
    experiments.write_csv(rows, out / "abstraction_sweep.csv", experiments.SWEEP_FIELDS)
    experiments.write_manifest(out / "manifest.json", _manifest("abstraction-sweep", args))
    print(f"wrote {out / 'abstraction_sweep.csv'} ({len(rows)} rows)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hvm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a hierarchical sequence + ground truth")
    p.add_argument("--alphabet-size", type=int, default=10)
    p.add_argument("--depth", type=int, default=30)
    p.add_argument("--length", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="batch-train a model on a sequence file")
    p.add_argument("--input", required=True)
    p.add_argument("--text", action="store_true", help="treat input as UTF-8 text")
    p.add_argument("--out", required=True)
    _add_learner_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="parse a sequence with a saved model")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--text", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("gen-eval", help="model comparison on generated sequences")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alphabet-size", type=int, default=10)
    p.add_argument("--depth", type=int, default=30)
    p.add_argument("--length", type=int, default=1000)
    p.add_argument("--out", required=True)
    _add_learner_flags(p)
    p.set_defaults(func=cmd_gen_eval)

    p = sub.add_parser("corpus-eval", help="model comparison on text snippets")
    p.add_argument("--corpus", nargs="+", required=True)
    p.add_argument("--snippets", type=int, default=5)
    p.add_argument("--snippet-len", dest="snippet_len", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_learner_flags(p)
    p.set_defaults(func=cmd_corpus_eval)

    p = sub.add_parser("memory-sim", help="sequence-recall simulation")
    p.add_argument("--trials", type=int, default=40)
    p.add_argument("--transfer-trials", dest="transfer_trials", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_learner_flags(p, with_mode=False)
    p.set_defaults(func=cmd_memory_sim)

    p = sub.add_parser("abstraction-sweep", help="rate/distortion/transfer sweep")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alphabet-size", type=int, default=10)
    p.add_argument("--depth", type=int, default=30)
    p.add_argument("--length", type=int, default=1000)
    p.add_argument("--out", required=True)
    _add_learner_flags(p)
    p.set_defaults(func=cmd_abstraction_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except HvmError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "IOError", "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
