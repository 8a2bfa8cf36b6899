"""Desk-scale experiment drivers behind the CLI.

Every run is fully determined by its spec and seed set; drivers return plain
row dictionaries so outputs can be written as CSV and re-checked byte for
byte. Plotting is external.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .baselines import ALModel, lz78_metrics, lz78_parse
from .corpus import SymbolTable, load_snippet
from .generator import GenConfig, expand_inventory, sample_sequence, split_rngs
from .learner import (
    MODE_HCM,
    MODE_HVM,
    LearnerConfig,
    OnlineLearner,
    learn_batch,
    nll_independent,
)
from .metrics import coding_efficiency, dictionary_entries
from .parsing import linear_scan_parse, parse_sequence

GEN_EVAL_FIELDS = ["seed", "model", "w", "nll", "coding_efficiency", "mean_pss", "mean_pss_scan"]
CORPUS_FIELDS = ["file", "seed", "model", "compression_ratio", "nll", "coding_efficiency"]
MEMORY_FIELDS = ["group", "model", "block", "trial", "nll"]
SWEEP_FIELDS = ["seed", "model", "iteration", "w", "rc_v", "entropy", "transfer_nll"]

# Fixed sequences of the behavioral memory task; X marks the variable slot.
CONTROL_SEQUENCE = "BADFDCBFFEDB"
VARIABLE_TEMPLATE = "B{0}DFD{0}BFF{0}DB"
TRANSFER_TEMPLATE = "D{0}BFF{0}DBB{0}FD"
VARIABLE_FILLERS = ("A", "C", "E")
MEMORY_ALPHABET = "ABCDEF"


def seed_set(base_seed: int, n_seeds: int) -> list[int]:
    return [base_seed + i for i in range(n_seeds)]


def _learner_config(mode: str, overrides: dict | None = None) -> LearnerConfig:
    params = dict(mode=mode)
    params.update(overrides or {})
    return LearnerConfig(**params)


def gen_eval(
    n_seeds: int = 20,
    base_seed: int = 0,
    alphabet_size: int = 10,
    depth: int = 30,
    length: int = 1000,
    learner_overrides: dict | None = None,
) -> list[dict]:
    """Per seed: generate a sequence, train HVM and HCM to convergence, run
    LZ78, and report parsed length, NLL, coding efficiency, and search steps.

    The HVM row carries both instruments on the same converged model: trie
    retrieval steps and the flat-dictionary scan baseline. The HCM row's
    steps use the scan, matching a learner that keeps no parsing graph.
    """
    rows: list[dict] = []
    for seed in seed_set(base_seed, n_seeds):
        config = GenConfig(alphabet_size, depth, length, seed)
        rng_expand, rng_sample = split_rngs(seed)
        gen_inv = expand_inventory(config, rng_expand)
        seq, w_gt = sample_sequence(gen_inv, length, rng_sample)

        for mode in (MODE_HVM, MODE_HCM):
            result = learn_batch(seq, _learner_config(mode, learner_overrides))
            trie_parse = parse_sequence(result.graph, result.inventory, seq)
            scan_parse = linear_scan_parse(result.inventory, seq)
            rows.append(
                {
                    "seed": seed,
                    "model": mode.upper(),
                    "w": len(trie_parse.units),
                    "nll": nll_independent(trie_parse, result.inventory),
                    "coding_efficiency": coding_efficiency(
                        dictionary_entries(result.inventory), length
                    ),
                    "mean_pss": (
                        trie_parse.mean_steps() if mode == MODE_HVM else scan_parse.mean_steps()
                    ),
                    "mean_pss_scan": scan_parse.mean_steps(),
                }
            )
        dic, w_lz = lz78_parse(seq)
        lz = lz78_metrics(dic, length)
        rows.append(
            {
                "seed": seed,
                "model": "LZ78",
                "w": w_lz,
                "nll": lz["nll"],
                "coding_efficiency": lz["coding_efficiency"],
                "mean_pss": "",
                "mean_pss_scan": "",
            }
        )
        rows.append(
            {
                "seed": seed,
                "model": "GT",
                "w": len(w_gt),
                "nll": "",
                "coding_efficiency": "",
                "mean_pss": "",
                "mean_pss_scan": "",
            }
        )
    return rows


def corpus_eval(
    paths,
    n_snippets: int = 5,
    snippet_len: int = 1000,
    base_seed: int = 0,
    learner_overrides: dict | None = None,
) -> list[dict]:
    """Table-style comparison of LZ78/HCM/HVM on random text snippets."""
    rows: list[dict] = []
    for path in paths:
        for seed in seed_set(base_seed, n_snippets):
            seq, _table = load_snippet(path, snippet_len, seed)
            dic, w_lz = lz78_parse(seq)
            lz = lz78_metrics(dic, snippet_len)
            rows.append(
                {
                    "file": str(path),
                    "seed": seed,
                    "model": "LZ78",
                    "compression_ratio": lz["compression_ratio"],
                    "nll": lz["nll"],
                    "coding_efficiency": lz["coding_efficiency"],
                }
            )
            for mode in (MODE_HCM, MODE_HVM):
                result = learn_batch(seq, _learner_config(mode, learner_overrides))
                parse = parse_sequence(result.graph, result.inventory, seq)
                rows.append(
                    {
                        "file": str(path),
                        "seed": seed,
                        "model": mode.upper(),
                        "compression_ratio": len(parse.units) / snippet_len,
                        "nll": nll_independent(parse, result.inventory),
                        "coding_efficiency": coding_efficiency(
                            dictionary_entries(result.inventory), snippet_len
                        ),
                    }
                )
    return rows


def memory_trials(
    group: str, n_train: int, n_transfer: int, seed: int
) -> tuple[list[str], list[str]]:
    """Instruction strings for one group: a training block and a transfer
    block whose variable slots are drawn uniformly per trial.

    Both groups share the same transfer draws (same seed stream), so the
    blocks differ only in training.
    """
    rng = np.random.default_rng(seed)
    train_x = [VARIABLE_FILLERS[i] for i in rng.integers(0, len(VARIABLE_FILLERS), n_train)]
    transfer_x = [VARIABLE_FILLERS[i] for i in rng.integers(0, len(VARIABLE_FILLERS), n_transfer)]
    if group == "control":
        training = [CONTROL_SEQUENCE] * n_train
    elif group == "variable":
        training = [VARIABLE_TEMPLATE.format(x) for x in train_x]
    else:
        raise ValueError(f"unknown group {group!r}")
    transfer = [TRANSFER_TEMPLATE.format(x) for x in transfer_x]
    return training, transfer


def memory_sim(
    theta: float = 0.996,
    n_train: int = 40,
    n_transfer: int = 40,
    seed: int = 0,
    learner_overrides: dict | None = None,
) -> list[dict]:
    """Two groups x {HVM, HCM, AL} on the sequence-recall task.

    Every trial is scored before it is learned, so per-trial NLLs are free of
    leakage; learning continues through the transfer block.
    """
    table = SymbolTable.from_chars(MEMORY_ALPHABET)
    overrides = dict(learner_overrides or {})
    overrides["theta"] = theta
    rows: list[dict] = []
    for group in ("control", "variable"):
        training, transfer = memory_trials(group, n_train, n_transfer, seed)
        blocks = [("training", training), ("transfer", transfer)]
        for model_name in ("HVM", "HCM", "AL"):
            if model_name == "AL":
                al = ALModel(theta, alphabet=table.encode(MEMORY_ALPHABET))
                for block, trials in blocks:
                    for i, trial in enumerate(trials, start=1):
                        atoms = table.encode(trial)
                        rows.append(
                            {
                                "group": group,
                                "model": model_name,
                                "block": block,
                                "trial": i,
                                "nll": al.nll(atoms),
                            }
                        )
                        al.observe_trial(atoms)
            else:
                mode = MODE_HVM if model_name == "HVM" else MODE_HCM
                learner = OnlineLearner(_learner_config(mode, overrides))
                for block, trials in blocks:
                    for i, trial in enumerate(trials, start=1):
                        result = learner.process_trial(table.encode(trial))
                        rows.append(
                            {
                                "group": group,
                                "model": model_name,
                                "block": block,
                                "trial": i,
                                "nll": result.nll,
                            }
                        )
    return rows


def abstraction_sweep(
    n_seeds: int = 20,
    base_seed: int = 0,
    alphabet_size: int = 10,
    depth: int = 30,
    length: int = 1000,
    learner_overrides: dict | None = None,
) -> list[dict]:
    """Training-iteration sweep: parsed length and distortion measures per
    abstraction layer, plus transfer NLL on a fresh sequence from the same
    generative inventory."""
    rows: list[dict] = []
    for seed in seed_set(base_seed, n_seeds):
        config = GenConfig(alphabet_size, depth, length, seed)
        rng_expand, rng_train, rng_transfer = split_rngs(seed, 3)
        gen_inv = expand_inventory(config, rng_expand)
        train_seq, _ = sample_sequence(gen_inv, length, rng_train)
        transfer_seq, _ = sample_sequence(gen_inv, length, rng_transfer)

        for mode in (MODE_HVM, MODE_HCM):
            transfer_nll: dict[int, float] = {}

            def on_iteration(k, inventory, graph):
                parse = parse_sequence(graph, inventory, transfer_seq)
                transfer_nll[k] = nll_independent(parse, inventory)

            result = learn_batch(
                train_seq, _learner_config(mode, learner_overrides), on_iteration=on_iteration
            )
            for row in result.trajectory:
                it = row["iteration"]
                rows.append(
                    {
                        "seed": seed,
                        "model": mode.upper(),
                        "iteration": it,
                        "w": row["w"],
                        "rc_v": row["rc_v"],
                        "entropy": row["entropy"],
                        "transfer_nll": transfer_nll[it],
                    }
                )
            # Converged model: one final layer beyond the last trajectory row.
            final_it = result.n_iterations
            if final_it in transfer_nll and final_it not in {r["iteration"] for r in result.trajectory}:
                last = result.trajectory[-1]
                rows.append(
                    {
                        "seed": seed,
                        "model": mode.upper(),
                        "iteration": final_it,
                        "w": last["w"],
                        "rc_v": last["rc_v"],
                        "entropy": last["entropy"],
                        "transfer_nll": transfer_nll[final_it],
                    }
                )
    return rows


def write_csv(rows, path, fieldnames) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def write_manifest(path, spec: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(spec, indent=2, sort_keys=True), encoding="utf-8")
