"""HTTP service exposing the scenario runner.

The core package stays import-light; this module is only pulled in by the
`serve` command, the in-process CLI client, and the service tests.
"""
from __future__ import annotations

import tempfile
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .config import SCENARIO_NAMES, default_config, parse_config
from .errors import ConfigError
from .scenarios import run_scenario
from .verify import verify_all

__all__ = ["app", "create_app"]


class CheckModel(BaseModel):
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    detail: str = ""


class RunRequest(BaseModel):
    scenario: str
    seed: int | None = None
    config_text: str = ""
    out_dir: str | None = Field(
        default=None, description="server-side output directory; a fresh temporary directory when omitted"
    )


class RunResponse(BaseModel):
    scenario: str
    passed: bool
    out_dir: str
    checks: list[CheckModel]
    artifacts: dict[str, str]
    manifest: str


class EstimatesRequest(BaseModel):
    gas_mass: float = 4.7e-26
    temperature: float = 298.0
    pressure: float = 101325.0
    radius: float = 1e-3


class EstimatesResponse(BaseModel):
    rows: list[tuple[str, float]]
    text: str


class VerifyRequest(BaseModel):
    seed: int = 1
    only: list[str] | None = None


class VerifyResponse(BaseModel):
    seed: int
    passed: bool
    checks: list[CheckModel]
    report: str


def _check_models(checks) -> list[CheckModel]:
    return [CheckModel(name=c.name, passed=c.passed, value=c.value,
                       threshold=c.threshold, detail=c.detail) for c in checks]


def create_app() -> FastAPI:
    app = FastAPI(title="bohmsim", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/scenarios")
    def scenarios():
        return {"scenarios": list(SCENARIO_NAMES)}

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest):
        try:
            if req.config_text:
                config = parse_config(req.config_text, req.scenario, seed=req.seed)
            else:
                config = default_config(req.scenario)
                if req.seed is not None:
                    config.values["run"]["seed"] = int(req.seed)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        out_dir = req.out_dir or tempfile.mkdtemp(prefix=f"bohmsim-{req.scenario}-")
        result = run_scenario(config, out_dir)
        manifest = (Path(result.out_dir) / "manifest.txt").read_text()
        return RunResponse(
            scenario=result.scenario,
            passed=result.passed,
            out_dir=str(result.out_dir),
            checks=_check_models(result.checks),
            artifacts=result.artifacts,
            manifest=manifest,
        )

    @app.post("/estimates", response_model=EstimatesResponse)
    def estimates(req: EstimatesRequest):
        from .bath import GasEnvironment, environment_estimates

        try:
            env = GasEnvironment(req.gas_mass, req.temperature, req.pressure, req.radius)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        rows = environment_estimates(env).as_rows()
        text = "".join(f"{k}={v:.3g}\n" for k, v in rows)
        return EstimatesResponse(rows=list(rows), text=text)

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest):
        try:
            suite = verify_all(req.seed, only=req.only)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return VerifyResponse(seed=req.seed, passed=suite.passed,
                              checks=_check_models(suite.checks),
                              report=suite.report_text())

    return app


app = create_app()
