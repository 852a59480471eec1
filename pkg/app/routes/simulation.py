from collections.abc import Callable

import structlog
from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from app.config import get_settings
from app.errors import IsacError
from app.geometry import build_layout
from app.optimizer import optimize
from app.scenario import baseline_config, to_scenario
from app.schemas import (
    OptimizeRequest,
    OptimizeResponse,
    ScenarioConfig,
    SinrRequest,
    SinrResponse,
)
from app.sinr import sinr_report

log = structlog.get_logger()
router = APIRouter(prefix="/api", tags=["simulation"])


async def _solve[T](fn: Callable[[], T]) -> T:
    """Run a blocking computation off the event loop; domain errors become 422s."""
    try:
        return await run_in_threadpool(fn)
    except IsacError as exc:
        log.warning("request_rejected", error=exc.code, message=exc.message)
        raise HTTPException(status_code=422, detail=exc.record()) from exc


@router.get("/scenarios/baseline", response_model=ScenarioConfig)
async def get_baseline() -> ScenarioConfig:
    return baseline_config()


@router.post("/optimize", response_model=OptimizeResponse)
async def post_optimize(payload: OptimizeRequest) -> OptimizeResponse:
    settings = get_settings()

    def compute() -> OptimizeResponse:
        s = to_scenario(payload.scenario)
        result = optimize(
            s,
            build_layout(s),
            tol=settings.DINKELBACH_TOL,
            max_iter=settings.DINKELBACH_MAX_ITER,
            variant=payload.variant,
        )
        return OptimizeResponse.from_result(result)

    response = await _solve(compute)
    log.info("optimize_served", active=len(response.active_set), gamma_s_db=response.gamma_s_db)
    return response


@router.post("/sinr", response_model=SinrResponse)
async def post_sinr(payload: SinrRequest) -> SinrResponse:
    settings = get_settings()
    seed = payload.seed if payload.seed is not None else settings.SEED

    def compute() -> SinrResponse:
        s = to_scenario(payload.scenario)
        lay = build_layout(s)
        result = optimize(
            s, lay, tol=settings.DINKELBACH_TOL, max_iter=settings.DINKELBACH_MAX_ITER
        )
        report = sinr_report(s, lay, result.power, result.gains, payload.trials, seed=seed)
        return SinrResponse.from_report(report)

    response = await _solve(compute)
    log.info("sinr_served", trials=payload.trials, seed=seed)
    return response
