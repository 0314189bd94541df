"""Command-line client.

All work goes through the HTTP API: by default the client mounts the app
in process (no socket); --server points it at a running instance instead.
Exit codes: 0 all checks passed, 1 at least one check failed, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import httpx

from . import __version__

GASES = {"n2": 4.7e-26}


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        # starlette's sync-over-ASGI client warns about the installed httpx
        # major version; the in-process transport works fine with it
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import app

    return TestClient(app)


def _fail_usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _cmd_run(args) -> int:
    config_text = ""
    if args.config:
        path = Path(args.config)
        if not path.exists():
            return _fail_usage(f"config file not found: {path}")
        config_text = path.read_text()
    payload = {"scenario": args.scenario, "config_text": config_text}
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.out:
        payload["out_dir"] = args.out
    with _client(args.server) as client:
        resp = client.post("/run", json=payload)
    if resp.status_code == 400:
        return _fail_usage(resp.json()["detail"])
    resp.raise_for_status()
    body = resp.json()
    for check in body["checks"]:
        print(_check_line(check))
    print(f"artifacts: {body['out_dir']}")
    return 0 if body["passed"] else 1


def _check_line(check: dict) -> str:
    verdict = "PASS" if check["passed"] else "FAIL"
    line = f"{check['name']}: {verdict}"
    if check.get("value") is not None:
        line += f"  value={check['value']:.6g}"
    if check.get("threshold") is not None:
        line += f"  threshold={check['threshold']:.6g}"
    if check.get("detail"):
        line += f"  {check['detail']}"
    return line


def _cmd_estimates(args) -> int:
    if args.gas not in GASES:
        return _fail_usage(f"unknown gas {args.gas!r}; known: {', '.join(GASES)}")
    payload = {"gas_mass": GASES[args.gas], "temperature": args.temp,
               "pressure": args.pressure, "radius": args.radius}
    with _client(args.server) as client:
        resp = client.post("/estimates", json=payload)
    if resp.status_code == 400:
        return _fail_usage(resp.json()["detail"])
    resp.raise_for_status()
    print(resp.json()["text"], end="")
    return 0


def _cmd_verify(args) -> int:
    payload = {"seed": args.seed}
    if args.only:
        payload["only"] = args.only
    with _client(args.server) as client:
        resp = client.post("/verify", json=payload)
    if resp.status_code == 400:
        return _fail_usage(resp.json()["detail"])
    resp.raise_for_status()
    body = resp.json()
    print(body["report"], end="")
    return 0 if body["passed"] else 1


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bohmsim",
        description="collapse-dynamics scenario runner and verification suite",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--config", default=None, help="key=value config file")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(fn=_cmd_run)

    p_est = sub.add_parser("estimates", help="print the gas-environment table")
    p_est.add_argument("--gas", default="n2")
    p_est.add_argument("--radius", type=float, default=1e-3)
    p_est.add_argument("--temp", type=float, default=298.0)
    p_est.add_argument("--pressure", type=float, default=101325.0)
    p_est.set_defaults(fn=_cmd_estimates)

    p_ver = sub.add_parser("verify", help="run the verification suite")
    p_ver.add_argument("--seed", type=int, default=1)
    p_ver.add_argument("--only", nargs="*", default=None, help="subset of check names")
    p_ver.set_defaults(fn=_cmd_verify)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8333)
    p_srv.set_defaults(fn=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return int(exc.code) if exc.code else 0
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
