"""Command-line entry point.

One executable, one subcommand per pipeline stage, files as the only
channel between stages:

    emoguide lexicon stats <lexicon.tsv> <vocab.txt>
    emoguide synth <config.json> -o corpus.jsonl
    emoguide filter <corpus.jsonl> <config.json> -o filtered.jsonl --report report.json
    emoguide train <config.json> --ablation full -o model.ckpt [--log log.jsonl]
    emoguide gradcheck <config.json>
    emoguide selfchat <agent.ckpt> <user.ckpt> <config.json> -o dialogs.jsonl
    emoguide eval <dialogs.jsonl> <config.json> -o report.json

Every run echoes the resolved config (with its hash and seed) as a JSON
line on stdout, and every output file embeds that hash: JSON-lines files
in a leading ``{"meta": ...}`` record, checkpoints in their header, JSON
reports as a field.  Exit codes: 0 success, 1 precondition failure
(missing/invalid inputs, diverged training, gradcheck above tolerance),
2 malformed config or usage.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, RunConfig, load_run_config
from .corpus import (
    corpus_words,
    filter_dialogs,
    load_corpus,
    prepare_training_examples,
    prepare_user_side_examples,
    save_corpus,
    synthesize_corpus,
)
from .metrics import evaluate_run
from .model import init_model, load_checkpoint, model_checksum, save_checkpoint
from .objective import gradient_check_suite
from .selfchat import load_seed_utterances, self_chat
from .train import TrainingDivergedError, evaluate_nll, train
from .vad import load_lexicon_file
from .vocab import build_vocab

GRADCHECK_TOLERANCE = 1e-4


def _echo(command: str, config: RunConfig) -> None:
    line = {
        "command": command,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "config": config.resolved(),
    }
    print(json.dumps(line, sort_keys=True))


def _meta(command: str, config: RunConfig, **extra) -> dict:
    return {"command": command, "config_hash": config.config_hash(), "seed": config.seed, **extra}


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _load_config(args) -> RunConfig:
    config = load_run_config(args.config)
    seed = getattr(args, "seed", None)
    ablation = getattr(args, "ablation", None)
    if seed is not None or ablation is not None:
        config = config.with_overrides(seed=seed, ablation=ablation)
    return config


# ------------------------------------------------------------- commands


def cmd_lexicon_stats(args) -> int:
    lexicon = load_lexicon_file(args.lexicon)
    with open(args.vocab, encoding="utf-8") as fh:
        tokens = [t.strip() for t in fh if t.strip() and not t.startswith("#")]
    if not tokens:
        raise ValueError(f"{args.vocab}: no tokens")
    cov = lexicon.coverage(tokens)
    print(
        json.dumps(
            {
                "entries": len(lexicon.entries),
                "collisions": lexicon.collisions,
                "vocab_tokens": len(tokens),
                "listed": cov.listed,
                "defaulted": cov.defaulted,
                "fraction_listed": cov.fraction_listed,
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_synth(args) -> int:
    config = _load_config(args)
    _echo("synth", config)
    dialogs = synthesize_corpus(config.synth_config(), seed=config.seed)
    save_corpus(args.output, dialogs, meta=_meta("synth", config, dialogs=len(dialogs)))
    return 0


def cmd_filter(args) -> int:
    config = _load_config(args)
    _echo("filter", config)
    dialogs = load_corpus(args.corpus)
    retained, report = filter_dialogs(dialogs, config.classifier(), config.filter_rules())
    save_corpus(args.output, retained, meta=_meta("filter", config, **report.to_dict()))
    if args.report:
        _write_json(args.report, {"config_hash": config.config_hash(), **report.to_dict()})
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    _echo("train", config)
    corpus_path = args.corpus or config.path("corpus")
    if corpus_path is None:
        raise ValueError("no corpus: pass --corpus or set paths.corpus in the config")
    dialogs = load_corpus(corpus_path)
    if not dialogs:
        raise ValueError(f"{corpus_path}: empty corpus")
    classifier = config.classifier()
    prepare = prepare_training_examples if args.side == "agent" else prepare_user_side_examples
    examples = [ex for d in dialogs for ex in prepare(d, classifier)]
    vocab = build_vocab(corpus_words(dialogs))
    model = init_model(config.model_config(len(vocab)), seed=config.seed, vocab=vocab)
    model, log = train(
        model, examples, config.train_config(), config.pege_config(), classifier.lexicon
    )
    save_checkpoint(args.output, model, config_hash=config.config_hash())
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"meta": _meta("train", config)}, sort_keys=True) + "\n")
            for entry in log:
                fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
    print(
        json.dumps(
            {
                "examples": len(examples),
                "vocab_size": len(vocab),
                "steps": len(log),
                "final": log[-1].to_dict(),
                "model_checksum": model_checksum(model),
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_gradcheck(args) -> int:
    config = _load_config(args)
    _echo("gradcheck", config)
    error = gradient_check_suite(seed=config.seed, cases=args.cases)
    ok = error <= GRADCHECK_TOLERANCE
    print(f"max relative error {error:.6e} over {args.cases} cases "
          f"({'within' if ok else 'EXCEEDS'} {GRADCHECK_TOLERANCE:g})")
    return 0 if ok else 1


def cmd_selfchat(args) -> int:
    config = _load_config(args)
    _echo("selfchat", config)
    agent = load_checkpoint(args.agent_checkpoint)
    user = load_checkpoint(args.user_checkpoint)
    seeds = load_seed_utterances(config.path("seeds"))
    chat_config = config.selfchat_config(seeds)
    dialogs = self_chat(agent, user, chat_config, config.classifier(), threads=args.threads)
    save_corpus(
        args.output,
        dialogs,
        meta=_meta(
            "selfchat",
            config,
            agent_model=model_checksum(agent),
            user_model=model_checksum(user),
            dialogs=len(dialogs),
        ),
    )
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args)
    _echo("eval", config)
    dialogs = load_corpus(args.dialogs)
    report = evaluate_run(dialogs, config.lexicon())
    payload = {"config_hash": config.config_hash(), "seed": config.seed, **report.to_dict()}
    _write_json(args.output, payload)
    print(
        json.dumps(
            {
                "peg_score": report.peg_score,
                "e_score": report.e_score,
                "pege_score": report.pege_score,
                "skipped": report.skipped,
            },
            sort_keys=True,
        )
    )
    return 0


# --------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emoguide",
        description="Positive-emotion-guided dialog: corpus, training, and evaluation tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    lexicon = sub.add_parser("lexicon", help="lexicon inspection")
    lexicon_sub = lexicon.add_subparsers(dest="lexicon_command", required=True)
    stats = lexicon_sub.add_parser("stats", help="coverage of a vocabulary file")
    stats.add_argument("lexicon", help="TSV lexicon path")
    stats.add_argument("vocab", help="text file, one token per line")
    stats.set_defaults(handler=cmd_lexicon_stats)

    def common(p, output=True):
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if output:
            p.add_argument("-o", "--output", required=True, help="output file")

    synth = sub.add_parser("synth", help="generate a synthetic dialog corpus")
    synth.add_argument("config")
    common(synth)
    synth.set_defaults(handler=cmd_synth)

    filt = sub.add_parser("filter", help="apply the six filtering rules")
    filt.add_argument("corpus")
    filt.add_argument("config")
    common(filt)
    filt.add_argument("--report", default=None, help="write per-rule rejection counts here")
    filt.set_defaults(handler=cmd_filter)

    tr = sub.add_parser("train", help="train a dialog model")
    tr.add_argument("config")
    common(tr)
    tr.add_argument(
        "--ablation",
        choices=["nll_only", "ner_only_composite", "peg_only_composite", "full"],
        default=None,
        help="override the config's objective ablation",
    )
    tr.add_argument("--corpus", default=None, help="override paths.corpus")
    tr.add_argument("--side", choices=["agent", "user"], default="agent",
                    help="which speaker's utterances to predict")
    tr.add_argument("--log", default=None, help="write the per-step loss log here (JSON lines)")
    tr.set_defaults(handler=cmd_train)

    grad = sub.add_parser("gradcheck", help="finite-difference check of the loss gradient")
    grad.add_argument("config")
    grad.add_argument("--seed", type=int, default=None)
    grad.add_argument("--cases", type=int, default=10)
    grad.set_defaults(handler=cmd_gradcheck)

    chat = sub.add_parser("selfchat", help="simulate dialogs between two checkpoints")
    chat.add_argument("agent_checkpoint")
    chat.add_argument("user_checkpoint")
    chat.add_argument("config")
    common(chat)
    chat.add_argument("--threads", type=int, default=1, help="parallel dialogs (1 = sequential)")
    chat.set_defaults(handler=cmd_selfchat)

    ev = sub.add_parser("eval", help="score a dialog file")
    ev.add_argument("dialogs")
    ev.add_argument("config")
    common(ev)
    ev.set_defaults(handler=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
