"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, chaos, elm
from . import data as D
from . import encrypted as E
from .ckks import (PROFILES, CkksError, ParameterError, build_context, keygen, load_ciphertexts,
                   load_evaluation_keys, load_secret_key, save_ciphertexts, save_evaluation_keys,
                   save_secret_key)

log = logging.getLogger("chaoselm")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class StepOrderError(RuntimeError):
    """A split-mode step ran before the step that produces its inputs."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _csv(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


# -- run / fetch-data / suite ---------------------------------------------------------

def cmd_run(args) -> int:
    hidden = ["input" if h.lower() in ("input", "input_dim") else h for h in _csv(args.hidden)]
    modes = ["sigmoid" if m in ("sigmoid", "extra_sigmoid") else m for m in _csv(args.output_mode)]
    cfg = bench.ExperimentConfig(
        dataset=args.dataset, variants=_csv(args.variants), hidden_nodes=hidden,
        seeds=bench.parse_seeds(args.seeds), split=D.SplitSpec(args.split),
        ckks_profile=args.ckks_profile, output_modes=modes, smote_order=args.smote_order,
        scale_on_all=args.scale_on_all, burn_in=args.burn_in, data_dir=args.data_dir,
        workers=args.workers, subsample=args.subsample)
    for f in _csv(args.format):
        if f not in ("md", "csv"):
            raise bench.ConfigError(f"unknown report format {f!r}")
    report = bench.run_experiment(cfg)
    for path in bench.write_reports(report, args.report_dir, _csv(args.format)):
        print(path)
    return EXIT_OK


def cmd_fetch(args) -> int:
    names = _csv(args.datasets) if args.datasets else None
    results = D.fetch_all(args.dir, names, args.offline, args.timeout)
    for r in results:
        if r.ok:
            print(f"ok       {r.name:14s} {r.sha256[:16]}  {r.source}")
        else:
            print(f"missing  {r.name:14s} {r.error}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_RUNTIME


def cmd_suite(args) -> int:
    result = bench.run_suite(args.manifest, args.report_dir)
    for p in result.paths:
        print(p)
    for name, err in result.failures.items():
        print(f"failed {name}: {err}", file=sys.stderr)
    return EXIT_OK if not result.failures else EXIT_RUNTIME


# -- split mode ---------------------------------------------------------------------
# Files under <workdir>/owner never leave the key holder; <workdir>/shared is
# what the evaluator reads and writes.

def _dirs(workdir) -> tuple[Path, Path]:
    owner, shared = Path(workdir) / "owner", Path(workdir) / "shared"
    owner.mkdir(parents=True, exist_ok=True)
    shared.mkdir(parents=True, exist_ok=True)
    return owner, shared


def _read_json(path: Path) -> dict:
    if not path.is_file():
        raise StepOrderError(f"{path} not found; run the earlier split-mode step first")
    return json.loads(path.read_text(encoding="utf-8"))


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _owner_state(workdir):
    owner, shared = _dirs(workdir)
    ctx, ek = load_evaluation_keys(shared / "eval.keys")
    sk = load_secret_key(owner / "secret.key", ctx)
    return owner, shared, ctx, E.KeySet(sk, ek)


def _owner_rng(owner: Path, step: str):
    meta = _read_json(owner / "meta.json")
    return np.random.default_rng([meta["seed"], sum(step.encode())])


def cmd_init(args) -> int:
    """Key holder: prepare data, draw (W, b), generate keys, encrypt everything."""
    owner, shared = _dirs(args.workdir)
    prep = D.prepare(args.dataset, D.SplitSpec(args.split, args.seed), args.data_dir,
                     args.smote_order, args.scale_on_all)
    d = prep.train.n_features
    n_hidden = d if args.hidden.lower() in ("input", "input_dim") else int(args.hidden)
    if n_hidden < 1:
        raise bench.ConfigError("hidden node count must be at least 1")
    if args.init == "chaotic":
        W, b = chaos.generate_chaotic_params(d, n_hidden, args.seed, args.burn_in)
    else:
        W, b = chaos.generate_uniform_params(d, n_hidden, args.seed)
    ctx = build_context(PROFILES[args.ckks_profile])
    rng = np.random.default_rng([args.seed, 1])
    keys = keygen(ctx, rng)
    outside = E.range_preflight(np.vstack([prep.train.features, prep.test.features]), W, b)
    if outside.size:
        print(f"warning: {outside.size} rows leave the polynomial sigmoid range", file=sys.stderr)
    save_secret_key(owner / "secret.key", keys.secret_key, ctx)
    np.savez(owner / "plain.npz", W=W, b=b, X_train=prep.train.features, y_train=prep.train.labels,
             X_test=prep.test.features, y_test=prep.test.labels)
    _write_json(owner / "meta.json", {"dataset": args.dataset, "seed": args.seed,
                                      "init": args.init, "notes": prep.notes})
    save_evaluation_keys(shared / "eval.keys", keys.public, ctx)
    params = E.encrypt_model_params(W, b, ctx, keys, rng)
    save_ciphertexts(shared / "weights.ct", params.enc_weight_rows, ctx)
    save_ciphertexts(shared / "biases.ct", params.enc_biases, ctx)
    for fold, X in (("train", prep.train.features), ("test", prep.test.features)):
        save_ciphertexts(shared / f"{fold}.ct", [s.ct for s in E.encrypt_dataset(X, ctx, keys, rng)], ctx)
    _write_json(shared / "meta.json", {"n_features": d, "n_hidden": n_hidden,
                                       "n_train": prep.train.n_samples,
                                       "n_test": prep.test.n_samples})
    print(f"initialised {args.workdir}: {prep.train.n_samples} train / {prep.test.n_samples} "
          f"test rows, {n_hidden} hidden nodes")
    return EXIT_OK


def _evaluator_inputs(shared: Path, fold: str):
    ctx, ek = load_evaluation_keys(shared / "eval.keys")
    meta = _read_json(shared / "meta.json")
    samples = [E.EncryptedSample(ct, meta["n_features"])
               for ct in load_ciphertexts(shared / f"{fold}.ct", ctx)]
    params = E.EncryptedModelParams(load_ciphertexts(shared / "weights.ct", ctx),
                                    load_ciphertexts(shared / "biases.ct", ctx), meta["n_features"])
    return ctx, ek, meta, samples, params


def cmd_hidden(args) -> int:
    """Evaluator: encrypted hidden matrix of the training fold."""
    _, shared = _dirs(args.workdir)
    ctx, ek, meta, samples, params = _evaluator_inputs(shared, "train")
    grid = E.encrypted_hidden_matrix(samples, params, ctx, ek, args.workers)
    save_ciphertexts(shared / "hidden.ct", [ct for row in grid for ct in row], ctx)
    print(f"wrote {len(samples)}x{params.n_hidden} hidden units")
    return EXIT_OK


def cmd_train(args) -> int:
    """Key holder: decrypt H, solve for beta, encrypt beta."""
    owner, shared, ctx, keys = _owner_state(args.workdir)
    meta = _read_json(shared / "meta.json")
    flat = load_ciphertexts(shared / "hidden.ct", ctx)
    m = meta["n_hidden"]
    grid = [flat[j * m:(j + 1) * m] for j in range(len(flat) // m)]
    H = E.decrypt_hidden_matrix(grid, ctx, keys)
    beta = elm.solve_beta(H, np.load(owner / "plain.npz")["y_train"])
    np.save(owner / "beta.npy", beta)
    save_ciphertexts(shared / "beta.ct", E.encrypt_beta(beta, ctx, keys, _owner_rng(owner, "train")), ctx)
    print(f"solved beta for {m} hidden nodes")
    return EXIT_OK


def cmd_predict(args) -> int:
    """Evaluator: encrypted scores on the test fold."""
    _, shared = _dirs(args.workdir)
    ctx, ek, _, samples, params = _evaluator_inputs(shared, "test")
    params.enc_beta = load_ciphertexts(shared / "beta.ct", ctx)
    scores = E.predict_encrypted(samples, params, ctx, ek, args.workers)
    save_ciphertexts(shared / "scores.ct", scores, ctx)
    print(f"wrote {len(scores)} encrypted scores")
    return EXIT_OK


def cmd_decrypt(args) -> int:
    """Key holder: decrypt scores, classify and compare with the plaintext twin."""
    owner, shared, ctx, keys = _owner_state(args.workdir)
    scores = E.decrypt_scores(load_ciphertexts(shared / "scores.ct", ctx), ctx, keys)
    plain = np.load(owner / "plain.npz")
    twin = elm.fit(plain["X_train"], plain["y_train"], plain["W"], plain["b"], "poly_sigmoid")
    ref = elm.predict_scores(plain["X_test"], twin)
    y = plain["y_test"]
    for mode in ("linear", "extra_sigmoid"):
        print(f"accuracy[{mode}] = {elm.accuracy(elm.classify(scores, mode), y):.4f}")
    print(f"max |score - plaintext twin| = {np.max(np.abs(scores - ref)):.3e}")
    print(f"label agreement with twin = {np.mean(elm.classify(scores) == elm.classify(ref)):.4f}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chaoselm", description="Chaotic ELM over CKKS: benchmarks and tools.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_opts(sp):
        sp.add_argument("--data-dir", default=None,
                        help=f"dataset directory (default ${D.DATA_DIR_ENV} or ~/.cache/chaoselm/data)")
        sp.add_argument("--smote-order", choices=D.SMOTE_ORDERS, default="pre")
        sp.add_argument("--scale-on-all", action="store_true",
                        help="fit standardization on all rows instead of the train fold")

    r = sub.add_parser("run", help="run one dataset's experiment grid")
    r.add_argument("--dataset", required=True, choices=D.schema_names())
    r.add_argument("--variants", default=",".join(bench.VARIANTS))
    r.add_argument("--hidden", default="input", help="comma list of counts and/or 'input'")
    r.add_argument("--seeds", default="0-9", help="e.g. 0-9 or 1,4,7")
    r.add_argument("--split", type=float, default=0.8, help="train fraction")
    r.add_argument("--output-mode", default="linear,sigmoid")
    r.add_argument("--ckks-profile", choices=sorted(PROFILES), default="paper")
    r.add_argument("--report-dir", default="reports")
    r.add_argument("--format", default="md,csv")
    r.add_argument("--burn-in", type=int, default=chaos.DEFAULT_BURN_IN)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--subsample", type=int, default=None, help="cap rows per fold (quick runs)")
    data_opts(r)
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fetch-data", help="download datasets and record checksums")
    f.add_argument("--dir", default=None)
    f.add_argument("--datasets", default=None, help="comma list (default: all)")
    f.add_argument("--offline", action="store_true", help="skip downloads, use bundled files")
    f.add_argument("--timeout", type=float, default=20.0)
    f.set_defaults(func=cmd_fetch)

    s = sub.add_parser("suite", help="run every dataset listed in a manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--report-dir", default=None)
    s.set_defaults(func=cmd_suite)

    i = sub.add_parser("init", help="split mode, key holder: keys and encrypted inputs")
    i.add_argument("--workdir", required=True)
    i.add_argument("--dataset", required=True, choices=D.schema_names())
    i.add_argument("--hidden", default="input")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--split", type=float, default=0.8)
    i.add_argument("--init", choices=("chaotic", "uniform"), default="chaotic")
    i.add_argument("--burn-in", type=int, default=chaos.DEFAULT_BURN_IN)
    i.add_argument("--ckks-profile", choices=sorted(PROFILES), default="paper")
    data_opts(i)
    i.set_defaults(func=cmd_init)

    for name, fn, helptext in (("hidden", cmd_hidden, "split mode, evaluator: encrypted H"),
                               ("train", cmd_train, "split mode, key holder: solve beta"),
                               ("predict", cmd_predict, "split mode, evaluator: encrypted scores"),
                               ("decrypt", cmd_decrypt, "split mode, key holder: accuracy")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--workdir", required=True)
        if name in ("hidden", "predict"):
            sp.add_argument("--workers", type=int, default=1)
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (bench.ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (D.DataError, CkksError, OSError, ValueError, RuntimeError) as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
