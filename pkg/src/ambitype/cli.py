"""Command-line entry points.

One binary, subcommand style: build models from corpora, run the
measurement harness, sweep layout groupings, generate synthetic corpora,
serve the demo HTTP API, or poke a model from an interactive prompt.
Every tunable the engine or simulator owns is exposed as a flag whose
default is the owning module's constant, and reports are plain JSON so
runs diff cleanly. Reports are byte-identical across runs unless
--timing adds wall-clock fields.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional

from . import corpusgen, evalkit
from .engine import EngineConfig, Session
from .errors import AmbitypeError
from .evalkit import SimConfig
from .modelfile import (MODE_NATIVE, MODE_ROMANIZED, ModelSet, build_model,
                        load_model, save_model)
from .rules import (BUILTIN_LAYOUTS, BUILTIN_RULESETS, load_builtin_layout,
                    load_builtin_ruleset, parse_layout, parse_ruleset)
from .service import make_server
from .trie import build_parallel_tries

EXIT_USAGE = 2


def _fail(message: str, code: int = 1) -> "SystemExit":
    print(f"error: {message}", file=sys.stderr)
    return SystemExit(code)


def _read_text(path: Path, what: str) -> str:
    if not path.is_file():
        raise _fail(f"{what} not found: {path}", EXIT_USAGE)
    return path.read_text(encoding="utf-8")


def _print_json(payload: dict, out_path: Optional[str]) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)
    print(text)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# build


def _resolve_rules(args) -> dict:
    """Pick layout or ruleset for a build: explicit paths first, then the
    bundled table keyed by language id."""
    if args.layout and args.ruleset:
        raise _fail("give --layout or --ruleset, not both", EXIT_USAGE)
    if args.layout:
        return {"layout": parse_layout(_read_text(Path(args.layout), "layout"))}
    if args.ruleset:
        return {"ruleset":
                parse_ruleset(_read_text(Path(args.ruleset), "ruleset"))}
    if args.language in BUILTIN_LAYOUTS:
        return {"layout": load_builtin_layout(args.language)}
    if args.language in BUILTIN_RULESETS:
        return {"ruleset": load_builtin_ruleset(args.language)}
    raise _fail(f"no bundled layout or ruleset for {args.language!r}; "
                "give --layout or --ruleset", EXIT_USAGE)


def cmd_build(args) -> int:
    corpus_path = Path(args.corpus)
    if not corpus_path.is_file():
        raise _fail(f"corpus not found: {corpus_path}", EXIT_USAGE)
    kw = _resolve_rules(args)
    model = build_model(corpus_path, args.language, k=args.vocab_size,
                        order=args.order, **kw)
    save_model(model, args.output)
    report = model.size_report()
    _print_json({
        "output": args.output,
        "language": model.language,
        "mode": model.mode,
        "vocabulary": len(model.lexicon),
        "vocab_trie_bytes": report.vocab_trie_bytes,
        "shadow_trie_bytes": report.shadow_trie_bytes,
        "size_ratio": round(report.ratio, 6),
    }, None)
    return 0


# ---------------------------------------------------------------------------
# eval


def _engine_config(args) -> EngineConfig:
    return EngineConfig(
        max_candidates=args.max_candidates,
        lambda_len=args.lambda_len,
        mu_edit=args.mu_edit,
        auto_correct_max_distance=args.auto_max_distance,
        correction_max_distance=args.correction_max_distance,
        fetch_limit=args.fetch_limit,
        context_fetch_limit=args.context_fetch_limit,
    )


def _model_meta(path: Path, model: ModelSet) -> dict:
    return {
        "path": str(path),
        "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
        "language": model.language,
        "mode": model.mode,
        "vocabulary": len(model.lexicon),
    }


def _baseline_twin(model: ModelSet) -> ModelSet:
    """The comparison arm: variant matching off for romanized models,
    one-character-per-key grouping for ambiguous-keypad models. Lexicon
    and n-gram counts are shared, so only the rules differ."""
    if model.mode == MODE_NATIVE:
        layout = evalkit.conventional_layout(model.layout)
        from .rules import derive_native_ruleset
        ruleset = derive_native_ruleset(layout)
    else:
        layout = None
        ruleset = parse_ruleset("", language=model.ruleset.language)
    tries = build_parallel_tries(model.lexicon, ruleset)
    return ModelSet(model.language, model.lexicon, tries, model.ngram,
                    ruleset, layout)


def _arm_report(model: ModelSet, testset, pairs, sim: SimConfig,
                cfg: EngineConfig, timing: bool) -> evalkit.EvalReport:
    rep = evalkit.evaluate_testset(
        testset, lambda: Session(model, config=cfg), sim, timing=timing)
    if pairs:
        ec = evalkit.compute_ec(pairs, Session(model, config=cfg))
        rep = dataclasses.replace(rep, ec=ec)
    return rep


def cmd_eval(args) -> int:
    model_path = Path(args.model)
    if not model_path.is_file():
        raise _fail(f"model not found: {model_path}", EXIT_USAGE)
    model = load_model(model_path)
    if args.mode and args.mode != model.mode:
        raise _fail(f"model {model_path.name} is {model.mode}-mode but "
                    f"--mode {args.mode} was requested", EXIT_USAGE)
    testset = evalkit.load_testset(_read_text(Path(args.testset), "testset"))
    if not testset:
        raise _fail("testset is empty", EXIT_USAGE)

    pairs = None
    if args.inject_rate is not None:
        if model.mode != MODE_ROMANIZED:
            raise _fail("--inject-rate needs a romanized model", EXIT_USAGE)
        inj = evalkit.inject_variants(testset, model.ruleset,
                                      args.inject_rate, model.lexicon,
                                      seed=args.inject_seed)
        testset, pairs = inj.testset, inj.pairs

    cfg = _engine_config(args)
    sim = SimConfig(predict_k=args.predict_k,
                    count_selection=not args.no_count_selection)
    config_echo = {
        "predict_k": sim.predict_k,
        "count_selection": sim.count_selection,
        "inject_rate": args.inject_rate,
        "timing": args.timing,
        **{f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg)},
    }
    report = {
        "model": _model_meta(model_path, model),
        "seed": args.inject_seed if args.inject_rate is not None else None,
        "config": config_echo,
    }

    treatment = _arm_report(model, testset, pairs, sim, cfg, args.timing)
    if args.ab:
        baseline = _arm_report(_baseline_twin(model), testset, pairs, sim,
                               cfg, args.timing)
        delta = {
            "ksr": treatment.ksr - baseline.ksr,
            "nwp": treatment.nwp - baseline.nwp,
        }
        if pairs:
            delta["ec_f1"] = treatment.ec.f1 - baseline.ec.f1
        report.update(treatment=treatment.to_dict(),
                      baseline=baseline.to_dict(), delta=delta)
    else:
        report["metrics"] = treatment.to_dict()

    _print_json(report, args.report)
    return 0


# ---------------------------------------------------------------------------
# analyze-layout


def cmd_analyze_layout(args) -> int:
    model_path = Path(args.model)
    if not model_path.is_file():
        raise _fail(f"model not found: {model_path}", EXIT_USAGE)
    model = load_model(model_path)
    try:
        sweep = evalkit.sweep_groupings(model.lexicon, args.script,
                                        max_per_key=args.max_per_key)
    except ValueError as exc:
        raise _fail(str(exc), EXIT_USAGE)
    _print_json({
        "script": args.script,
        "points": [[p.consonants_per_key, p.predictability]
                   for p in sweep.points],
        "elbow": sweep.elbow,
    }, args.output)
    return 0


# ---------------------------------------------------------------------------
# gen-corpus


def cmd_gen_corpus(args) -> int:
    try:
        n = corpusgen.write_corpus(args.output, args.profile, args.sentences,
                                   args.vocab_size, seed=args.seed,
                                   coverage=not args.no_coverage,
                                   text_seed=args.text_seed)
    except ValueError as exc:
        raise _fail(str(exc), EXIT_USAGE)
    print(f"wrote {n} lines to {args.output}")
    return 0


# ---------------------------------------------------------------------------
# serve


def _load_models(paths) -> dict:
    models = {}
    for p in paths:
        path = Path(p)
        if not path.is_file():
            raise _fail(f"model not found: {path}", EXIT_USAGE)
        model = load_model(path)
        models[model.language] = model
    return models


def cmd_serve(args) -> int:
    models = _load_models(args.model)
    try:
        server = make_server(models, host=args.host, port=args.port)
    except OSError as exc:
        raise _fail(f"cannot bind {args.host}:{args.port}: {exc}")
    host, port = server.server_address[:2]
    print(f"serving {sorted(models)} on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# ---------------------------------------------------------------------------
# repl


def cmd_repl(args) -> int:
    models = _load_models(args.model)
    model = models[sorted(models)[0]]
    session = Session(model)
    print(f"{model.language} ({model.mode}); type keys, or :predict [k], "
          ":commit WORD, :back, :reset, :quit", flush=True)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        if line in (":q", ":quit"):
            break
        try:
            if line.startswith(":predict"):
                parts = line.split()
                k = int(parts[1]) if len(parts) > 1 else 3
                _print_candidates(session.predict(k))
            elif line.startswith(":commit "):
                session.commit(line.split(None, 1)[1])
                print(" ".join(session.context_tokens), flush=True)
            elif line == ":back":
                session.backspace()
                _print_candidates(session.current_candidates())
            elif line == ":reset":
                session = Session(model)
                print("(new session)", flush=True)
            else:
                cands = []
                for ch in line:
                    cands = session.press_key(ch)
                _print_candidates(cands)
        except (AmbitypeError, ValueError, IndexError) as exc:
            print(f"error: {exc}", flush=True)
    return 0


def _print_candidates(cands) -> None:
    if not cands:
        print("(no candidates)", flush=True)
        return
    for i, c in enumerate(cands, 1):
        print(f"{i}) {c.surface}  {c.score:.4f}  {c.source}", flush=True)


# ---------------------------------------------------------------------------
# parser


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    d = EngineConfig()
    p.add_argument("--max-candidates", type=int, default=d.max_candidates)
    p.add_argument("--lambda-len", type=float, default=d.lambda_len,
                   help="completion penalty per uncommitted character")
    p.add_argument("--mu-edit", type=float, default=d.mu_edit,
                   help="penalty per edit between typed and candidate")
    p.add_argument("--auto-max-distance", type=int,
                   default=d.auto_correct_max_distance)
    p.add_argument("--correction-max-distance", type=int,
                   default=d.correction_max_distance)
    p.add_argument("--fetch-limit", type=int, default=d.fetch_limit)
    p.add_argument("--context-fetch-limit", type=int,
                   default=d.context_fetch_limit)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ambitype",
        description="ambiguous-keyboard and word-variant typing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a model file from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--layout", help="key layout JSON (ambiguous keypad)")
    p.add_argument("--ruleset", help="variant rules TSV (romanized)")
    p.add_argument("--vocab-size", type=int, default=100_000)
    p.add_argument("--order", type=int, default=3)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("eval", help="run the typing simulator over a testset")
    p.add_argument("--model", required=True)
    p.add_argument("--testset", required=True)
    p.add_argument("--mode", choices=[MODE_NATIVE, MODE_ROMANIZED])
    p.add_argument("--ab", action="store_true",
                   help="also run the comparison arm and print deltas")
    p.add_argument("--timing", action="store_true",
                   help="measure per-keystroke latency (report varies by run)")
    p.add_argument("--inject-rate", type=float,
                   help="replace this share of eligible tokens with variants")
    p.add_argument("--inject-seed", type=int, default=0)
    p.add_argument("--predict-k", type=int, default=SimConfig().predict_k)
    p.add_argument("--no-count-selection", action="store_true",
                   help="treat suggestion taps as free")
    p.add_argument("--report", help="also write the JSON report here")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze-layout",
                       help="predictability sweep over key groupings")
    p.add_argument("--model", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--max-per-key", type=float, default=64.0)
    p.add_argument("--output", help="also write the curve JSON here")
    p.set_defaults(func=cmd_analyze_layout)

    p = sub.add_parser("gen-corpus", help="write a synthetic corpus")
    p.add_argument("--profile", required=True)
    p.add_argument("--sentences", type=int, required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--text-seed", type=int)
    p.add_argument("--no-coverage", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("serve", help="serve the demo HTTP API")
    p.add_argument("--model", action="append", required=True,
                   help="model file; repeat to serve several languages")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8763)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("repl", help="interactive keystroke prompt")
    p.add_argument("--model", action="append", required=True)
    p.set_defaults(func=cmd_repl)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AmbitypeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
