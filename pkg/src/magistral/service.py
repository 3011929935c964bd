"""HTTP service wrapping the engine.

Long-running deployments (shared deductive database, data-integration front
end) talk to these endpoints; the command-line client uses the same app over
an in-process transport.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__
from .errors import (
    AnswersDisagree,
    CapacityExceeded,
    Interrupted,
    MagistralError,
    ValidationError,
)
from .bench import run_suite
from .integration import build_repair_program, load_csv_facts, merge_facts, parse_mapping, parse_schema
from .parser import format_interpretation, format_program, parse_program, parse_query
from .optimizer import prune_redundant
from .rewriter import dms
from .schemas import (
    BenchRequest,
    BenchResponse,
    BenchRowModel,
    ErrorDetail,
    QueryRequest,
    QueryResponse,
    RepairRequest,
    RepairResponse,
    RewriteRequest,
    RewriteResponse,
    StatsModel,
)
from .solver import AnswerOutcome, SearchStats, answer, enumerate_models
from .syntax import Program, Query, Substitution


def _error_detail(exc: MagistralError) -> dict:
    span = getattr(exc, "span", None)
    return ErrorDetail(
        message=str(exc),
        kind=type(exc).__name__,
        line=span.line if span else None,
        column=span.column if span else None,
        length=span.length if span else None,
    ).model_dump()


def _http_error(exc: MagistralError) -> HTTPException:
    if isinstance(exc, Interrupted):
        return HTTPException(status_code=408, detail=_error_detail(exc))
    if isinstance(exc, (CapacityExceeded, AnswersDisagree)):
        return HTTPException(status_code=422, detail=_error_detail(exc))
    return HTTPException(status_code=400, detail=_error_detail(exc))


def _resolve_query(program: Program, override: str | None) -> Query:
    if override:
        return parse_query(override)
    if program.query is None:
        raise ValidationError("no query: provide one in the program text or the request")
    return program.query


def _stats_model(stats: SearchStats) -> StatsModel:
    return StatsModel(
        choices=stats.choices,
        ground_rules=stats.ground_rules,
        time_ground_ms=stats.time_ground * 1000.0,
        time_search_ms=stats.time_search * 1000.0,
    )


def _sorted_substitutions(outcome: AnswerOutcome) -> list[Substitution]:
    return sorted(
        outcome.substitutions,
        key=lambda sub: [(var, str(const)) for var, const in sub.bindings],
    )


def _substitution_answers(query: Query, outcome: AnswerOutcome) -> list[str]:
    goal = query.atoms[0] if len(query.atoms) == 1 else None
    out = []
    for sub in _sorted_substitutions(outcome):
        if goal is not None:
            out.append(str(goal.substitute(sub.as_dict())))
        else:
            out.append(str(sub))
    return out


def _run_query(request: QueryRequest) -> QueryResponse:
    program = parse_program(request.program)
    if request.mode == "enumerate":
        models, stats = enumerate_models(program, timeout=request.timeout_secs)
        models = sorted(models, key=format_interpretation)
        shown = [format_interpretation(m) for m in models]
        query = None
        if request.query or program.query:
            query = _resolve_query(program, request.query)
        if query is not None and all(a.is_ground for a in query.atoms):
            wanted = set(query.atoms)
            kept = [
                (m, text)
                for m, text in zip(models, shown)
                if wanted <= m
            ]
            shown = [text for _, text in kept]
        return QueryResponse(
            mode="enumerate",
            ground_query=True,
            answer=bool(shown),
            models=shown,
            stats=_stats_model(stats),
        )

    query = _resolve_query(program, request.query)
    stats = SearchStats()
    outcome = answer(
        query,
        program,
        request.mode,
        request.magic,
        timeout=request.timeout_secs,
        want_witness=request.print_model,
        stats=stats,
    )
    ground = not query.variables()
    witness = None
    if request.print_model and outcome.witness is not None:
        witness = format_interpretation(outcome.witness)
    return QueryResponse(
        mode=request.mode,
        ground_query=ground,
        answer=outcome.is_true,
        substitutions=[
            {var: str(const) for var, const in sub.bindings}
            for sub in _sorted_substitutions(outcome)
        ],
        answers=_substitution_answers(query, outcome),
        witness=witness,
        stats=_stats_model(outcome.stats),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="magistral", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/query", response_model=QueryResponse)
    def query(request: QueryRequest) -> QueryResponse:
        try:
            return _run_query(request)
        except MagistralError as exc:
            raise _http_error(exc) from exc

    @app.post("/rewrite", response_model=RewriteResponse)
    def rewrite_only(request: RewriteRequest) -> RewriteResponse:
        try:
            program = parse_program(request.program)
            query = _resolve_query(program, request.query)
            output = dms(query, Program.create(program.rules))
            rewritten = output.program()
            if request.subsumption:
                rewritten = prune_redundant(rewritten, "greedy")
            return RewriteResponse(
                program=format_program(rewritten),
                seed=str(output.seed),
                magic_rules=len(output.magic_rules),
                modified_rules=len(output.modified_rules),
            )
        except MagistralError as exc:
            raise _http_error(exc) from exc

    @app.post("/repair", response_model=RepairResponse)
    def repair(request: RepairRequest) -> RepairResponse:
        try:
            schema = parse_schema(request.schema_text)
            mapping = parse_mapping(request.mapping, schema)
            query = parse_query(request.query)
            program = build_repair_program(schema, mapping, query)
            facts = list(parse_program(request.facts).rules) if request.facts.strip() else []
            for predicate, text in sorted(request.csv_facts.items()):
                facts.extend(load_csv_facts(text, predicate))
            full = merge_facts(program, facts)
            stats = SearchStats()
            outcome = answer(
                query, full, request.mode, request.magic,
                timeout=request.timeout_secs, stats=stats,
            )
            ground = not query.variables()
            return RepairResponse(
                program=format_program(program),
                answer=QueryResponse(
                    mode=request.mode,
                    ground_query=ground,
                    answer=outcome.is_true,
                    substitutions=[
                        {var: str(const) for var, const in sub.bindings}
                        for sub in _sorted_substitutions(outcome)
                    ],
                    answers=_substitution_answers(query, outcome),
                    stats=_stats_model(outcome.stats),
                ),
            )
        except MagistralError as exc:
            raise _http_error(exc) from exc

    @app.post("/bench", response_model=BenchResponse)
    def bench(request: BenchRequest) -> BenchResponse:
        try:
            rows = run_suite(
                request.families,
                request.sizes,
                request.configs,
                request.timeout_secs,
                seed=request.seed,
            )
            return BenchResponse(rows=[BenchRowModel(**row.as_record()) for row in rows])
        except MagistralError as exc:
            raise _http_error(exc) from exc

    return app


app = create_app()
