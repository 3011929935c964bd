"""Command-line front end.

The CLI is a thin client of the HTTP service: by default it runs the
service app in-process (no daemon needed), with `--server URL` it talks to a
remote instance instead.  File handling stays on the client side; the
service sees program text only.

Exit codes: 0 = ran (rewrite-only / bench / enumerate), 10 = query true or
answers found, 20 = query false or no answers, 64 = usage error, 70 = engine
error (parse, validation, capacity, timeout).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_TRUE = 10
EXIT_FALSE = 20
EXIT_USAGE = 64
EXIT_ENGINE = 70

SUBCOMMANDS = ("query", "rewrite-only", "bench", "repair", "serve")

TIMEOUT_ENV = "MAGISTRAL_TIMEOUT_SECS"


class UsageError(Exception):
    pass


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the in-process transport import warns
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app, raise_server_exceptions=False)


def _common_flags(parser: argparse.ArgumentParser, with_reasoning: bool = True) -> None:
    if with_reasoning:
        parser.add_argument("-FB", dest="brave", action="store_true",
                            help="brave reasoning (true in some stable model)")
        parser.add_argument("-FC", dest="cautious", action="store_true",
                            help="cautious reasoning (true in every stable model)")
    parser.add_argument("-ODMS", dest="magic_on", action="store_true",
                        help="apply the magic-set rewriting")
    parser.add_argument("-ODMS-", dest="magic_off", action="store_true",
                        help="disable the magic-set rewriting")
    parser.add_argument("-ODMS+", dest="magic_subsume", action="store_true",
                        help="magic-set rewriting plus subsumption pruning")
    parser.add_argument("--timeout", type=float, default=None, metavar="SECS")
    parser.add_argument("--server", default=None, metavar="URL",
                        help="talk to a running service instead of in-process")


def _magic_setting(args: argparse.Namespace) -> str:
    chosen = [
        name
        for name, flag in (
            ("on", args.magic_on),
            ("off", args.magic_off),
            ("on_subsume", args.magic_subsume),
        )
        if flag
    ]
    if len(chosen) > 1:
        raise UsageError("at most one of -ODMS, -ODMS-, -ODMS+ may be given")
    return chosen[0] if chosen else "auto"


def _timeout(args: argparse.Namespace) -> float | None:
    if args.timeout is not None:
        return args.timeout
    env = os.environ.get(TIMEOUT_ENV)
    return float(env) if env else None


def _read_files(paths: list[str]) -> str:
    if not paths:
        raise UsageError("no input files")
    chunks = []
    for path in paths:
        chunks.append(Path(path).read_text(encoding="utf-8"))
    return "\n".join(chunks)


def _post(client: httpx.Client, endpoint: str, payload: dict) -> dict:
    response = client.post(endpoint, json=payload)
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail")
        except ValueError:
            detail = response.text
        message = detail.get("message") if isinstance(detail, dict) else str(detail)
        raise EngineError(message or f"service error {response.status_code}")
    return response.json()


class EngineError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magistral",
        description="disjunctive Datalog engine with dynamic magic-set rewriting",
    )
    sub = parser.add_subparsers(dest="command")

    p_query = sub.add_parser("query", help="answer a query over a program")
    _common_flags(p_query)
    p_query.add_argument("--enumerate", dest="enumerate_models", action="store_true",
                         help="print the stable models instead of answering")
    p_query.add_argument("--print-model", dest="print_model", action="store_true",
                         help="print a witnessing stable model (ground queries)")
    p_query.add_argument("--query", dest="query_text", default=None,
                         help="query text, overriding the one in the files")
    p_query.add_argument("files", nargs="+")

    p_rewrite = sub.add_parser("rewrite-only", help="print the rewritten program")
    _common_flags(p_rewrite, with_reasoning=False)
    p_rewrite.add_argument("--query", dest="query_text", default=None)
    p_rewrite.add_argument("files", nargs="+")

    p_bench = sub.add_parser("bench", help="run the benchmark suite")
    p_bench.add_argument("--families", default="simple_path,related,strategic,conformant")
    p_bench.add_argument("--sizes", default="2,3",
                         help="comma list applied to all families, or family=1,2 pairs "
                              "separated by spaces")
    p_bench.add_argument("--configs", default="off,dms")
    p_bench.add_argument("--timeout", type=float, default=30.0, metavar="SECS")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", default="bench.csv")
    p_bench.add_argument("--server", default=None, metavar="URL")

    p_repair = sub.add_parser("repair", help="consistent answers over an inconsistent database")
    _common_flags(p_repair)
    p_repair.add_argument("--schema", required=True, help="schema declaration file")
    p_repair.add_argument("--mapping", required=True, help="mapping rules (.dl)")
    p_repair.add_argument("--query", dest="query_text", required=True)
    p_repair.add_argument("files", nargs="*",
                          help="source facts: .dl files or .csv (predicate = file stem)")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8080)

    return parser


_VALUE_FLAGS = {
    "--query", "--timeout", "--server", "--schema", "--mapping", "--families",
    "--sizes", "--configs", "--seed", "--out", "--host", "--port",
}


def _normalize_argv(argv: list[str]) -> list[str]:
    """Accept the subcommand anywhere before the files (`-FB query p.dl` and
    `query -FB p.dl` are the same); plain flag-style invocation maps to the
    query subcommand."""
    if argv and argv[0] in ("-h", "--help"):
        return argv
    expecting_value = False
    for i, token in enumerate(argv):
        if expecting_value:
            expecting_value = False
            continue
        if token in _VALUE_FLAGS:
            expecting_value = True
            continue
        if token.startswith("-"):
            continue
        if token in SUBCOMMANDS:
            return [token, *argv[:i], *argv[i + 1:]]
        break
    return ["query", *argv]


def _cmd_query(args: argparse.Namespace) -> int:
    magic = _magic_setting(args)
    program_text = _read_files(args.files)
    if args.enumerate_models:
        if args.brave or args.cautious:
            raise UsageError("--enumerate cannot be combined with -FB/-FC")
        mode = "enumerate"
    elif args.brave and args.cautious:
        raise UsageError("-FB and -FC are mutually exclusive")
    elif args.brave:
        mode = "brave"
    elif args.cautious:
        mode = "cautious"
    else:
        has_query = args.query_text is not None or "?" in _strip_comments(program_text)
        if has_query:
            raise UsageError("a query needs exactly one reasoning mode: -FB or -FC")
        mode = "enumerate"
    payload = {
        "program": program_text,
        "query": args.query_text,
        "mode": mode,
        "magic": magic,
        "print_model": args.print_model,
        "timeout_secs": _timeout(args),
    }
    with _client(args.server) as client:
        result = _post(client, "/query", payload)
    if mode == "enumerate":
        for model in result["models"] or []:
            print(model)
        return EXIT_OK
    if result["ground_query"]:
        print("true" if result["answer"] else "false")
    else:
        for line in result["answers"]:
            print(line)
    if result.get("witness"):
        print(result["witness"])
    return EXIT_TRUE if result["answer"] else EXIT_FALSE


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%", 1)[0] for line in text.splitlines())


def _cmd_rewrite(args: argparse.Namespace) -> int:
    magic = _magic_setting(args)
    payload = {
        "program": _read_files(args.files),
        "query": args.query_text,
        "subsumption": magic == "on_subsume",
    }
    with _client(args.server) as client:
        result = _post(client, "/rewrite", payload)
    sys.stdout.write(result["program"])
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    sizes: dict | list
    if "=" in args.sizes:
        sizes = {}
        for part in args.sizes.split():
            family, _, values = part.partition("=")
            sizes[family.strip()] = [int(v) for v in values.split(",")]
    else:
        sizes = [int(v) for v in args.sizes.split(",")]
    payload = {
        "families": families,
        "sizes": sizes,
        "configs": [c.strip() for c in args.configs.split(",")],
        "timeout_secs": args.timeout,
        "seed": args.seed,
    }
    with _client(args.server) as client:
        result = _post(client, "/bench", payload)
    from .bench import BenchRow, write_csv

    rows = [BenchRow(**row) for row in result["rows"]]
    write_csv(rows, args.out)
    for row in rows:
        status = "timeout" if row.timeout else row.answer
        print(
            f"{row.family:12} size={row.size:<4} {row.config:12} {status:8}"
            f" ground_rules={row.ground_rules:<8} choices={row.choices}"
        )
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_repair(args: argparse.Namespace) -> int:
    magic = _magic_setting(args)
    if args.brave and args.cautious:
        raise UsageError("-FB and -FC are mutually exclusive")
    mode = "brave" if args.brave else "cautious"
    facts_chunks = []
    csv_facts: dict[str, str] = {}
    for path in args.files:
        p = Path(path)
        if p.suffix.lower() == ".csv":
            csv_facts[p.stem] = p.read_text(encoding="utf-8")
        else:
            facts_chunks.append(p.read_text(encoding="utf-8"))
    payload = {
        "schema_text": Path(args.schema).read_text(encoding="utf-8"),
        "mapping": Path(args.mapping).read_text(encoding="utf-8"),
        "facts": "\n".join(facts_chunks),
        "csv_facts": csv_facts,
        "query": args.query_text,
        "mode": mode,
        "magic": magic,
        "timeout_secs": _timeout(args),
    }
    with _client(args.server) as client:
        result = _post(client, "/repair", payload)
    answer = result["answer"]
    if answer["ground_query"]:
        print("true" if answer["answer"] else "false")
    else:
        for line in answer["answers"]:
            print(line)
    return EXIT_TRUE if answer["answer"] else EXIT_FALSE


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(_normalize_argv(argv))
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 on --help
        return EXIT_USAGE if exc.code else EXIT_OK
    handlers = {
        "query": _cmd_query,
        "rewrite-only": _cmd_rewrite,
        "bench": _cmd_bench,
        "repair": _cmd_repair,
        "serve": _cmd_serve,
    }
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"magistral: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"magistral: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EngineError as exc:
        print(f"magistral: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except httpx.HTTPError as exc:
        print(f"magistral: cannot reach the service: {exc}", file=sys.stderr)
        return EXIT_ENGINE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
