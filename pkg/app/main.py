import structlog
from fastapi import FastAPI

from app.config import get_settings
from app.logs import configure_logging
from app.routes import simulation

settings = get_settings()
configure_logging(settings.LOG_LEVEL)

log = structlog.get_logger()

app = FastAPI(title="swarm-isac")

# Routers
app.include_router(simulation.router)


@app.get("/health")
async def health() -> dict[str, str]:
    return {"status": "ok"}
