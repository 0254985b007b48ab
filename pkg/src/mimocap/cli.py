"""Command-line front end.

A thin client over the service layer: commands build the request models,
run them in-process by default or POST them to a running server when
--server is given, and format the responses (JSON for single solves, CSV
for sweeps and benchmarks).

Exit codes: 0 success, 1 solver/server failure, 2 bad inputs or flags.
"""

from __future__ import annotations

import argparse
import json
import sys

from pydantic import ValidationError

from .errors import DomainError, InputError, MimoCapError, RoutingError
from .service import schemas
from .service.app import (handle_benchmark, handle_capacity, handle_sweep,
                          handle_validate)

_HANDLERS = {
    "/capacity": (schemas.CapacityRequest, handle_capacity),
    "/sweep": (schemas.SweepRequest, handle_sweep),
    "/benchmark": (schemas.BenchmarkRequest, handle_benchmark),
    "/validate": (schemas.ValidateRequest, handle_validate),
}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _call(server: str | None, path: str, payload: dict) -> dict:
    if server is None:
        model_cls, handler = _HANDLERS[path]
        try:
            request = model_cls.model_validate(payload)
        except ValidationError as exc:
            raise CliError(f"invalid request: {exc}", 2) from exc
        try:
            return handler(request).model_dump()
        except (InputError, DomainError, RoutingError) as exc:
            raise CliError(str(exc), 2) from exc
        except MimoCapError as exc:
            raise CliError(str(exc), 1) from exc
    import httpx

    try:
        resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
    except httpx.HTTPError as exc:
        raise CliError(f"cannot reach server: {exc}", 1) from exc
    if resp.status_code in (400, 422):
        raise CliError(f"server rejected request: {resp.text}", 2)
    if resp.status_code != 200:
        raise CliError(f"server error {resp.status_code}: {resp.text}", 1)
    return resp.json()


def _load_channel_payload(path: str) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read channel file {path}: {exc}", 2) from exc
    if not isinstance(payload, dict):
        raise CliError(f"channel file {path} must hold a JSON object", 2)
    return payload


def _parse_pap(text: str, n_t: int) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise CliError(f"bad --pap value {text!r}: {exc}", 2) from exc
    if len(values) == 1:
        values = values * n_t
    if len(values) != n_t:
        raise CliError(
            f"--pap has {len(values)} entries, channel has {n_t} antennas", 2)
    return values


def _parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError("--range must be start:stop:count", 2)
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise CliError(f"bad --range {text!r}: {exc}", 2) from exc
    if count < 1:
        raise CliError("--range count must be >= 1", 2)
    return start, stop, count


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def cmd_capacity(args) -> int:
    channel = _load_channel_payload(args.channel)
    payload = {
        "channel": channel,
        "p_tot": args.ptot,
        "pap": _parse_pap(args.pap, int(channel.get("n_t", 0))),
        "solver": args.solver,
        "units": args.units,
    }
    out = _call(args.server, "/capacity", payload)
    print(json.dumps(out, indent=2))
    return 0


def cmd_sweep(args) -> int:
    channel = _load_channel_payload(args.channel)
    start, stop, count = _parse_range(args.range)
    payload = {
        "channel": channel,
        "sweep": args.sweep,
        "start": start,
        "stop": stop,
        "count": count,
        "with_waterfill": args.with_waterfill,
    }
    if args.sweep == "ptot":
        if args.pap is None:
            raise CliError("--sweep ptot needs --pap for the fixed caps", 2)
        payload["pap"] = _parse_pap(args.pap, int(channel.get("n_t", 0)))
    else:
        if args.ptot is None:
            raise CliError("--sweep pap needs --ptot for the fixed budget", 2)
        payload["p_tot"] = args.ptot
    out = _call(args.server, "/sweep", payload)
    cols = ["x", "capacity", "rank_q", "tp_active"]
    if args.with_waterfill:
        cols.append("waterfill_capacity")
    print(",".join(cols))
    for row in out["rows"]:
        print(",".join(_fmt(row[c]) for c in cols))
    return 0


def cmd_benchmark(args) -> int:
    try:
        sizes = [int(v) for v in args.sizes.split(",") if v != ""]
    except ValueError as exc:
        raise CliError(f"bad --sizes {args.sizes!r}: {exc}", 2) from exc
    payload = {"sizes": sizes, "trials": args.trials, "seed": args.seed,
               "workers": args.workers}
    out = _call(args.server, "/benchmark", payload)
    cols = ["n", "solver", "mean_time", "median_time", "n_var",
            "mean_capacity_gap_vs_basic"]
    print(",".join(cols))
    for row in out["rows"]:
        print(",".join(_fmt(row[c]) for c in cols))
    return 0


def cmd_validate(args) -> int:
    out = _call(args.server, "/validate", {"seed": args.seed})
    width = max(len(c["name"]) for c in out["criteria"])
    failed = []
    for crit in out["criteria"]:
        status = "PASS" if crit["passed"] else "FAIL"
        print(f"{status}  {crit['name']:<{width}}  {crit['detail']}")
        if not crit["passed"]:
            failed.append(crit["name"])
    if failed:
        print(f"\n{len(failed)} criteria failed: {', '.join(failed)}")
        return 1
    print(f"\nall {len(out['criteria'])} criteria passed")
    return 0


def cmd_serve(args) -> int:
    try:
        import uvicorn
    except ImportError:
        raise CliError("uvicorn is required for `serve` (pip install uvicorn)", 2)
    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimocap",
        description="MIMO capacity under joint total and per-antenna power constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_server(p):
        p.add_argument("--server", default=None,
                       help="base URL of a running service (default: in-process)")

    p = sub.add_parser("capacity", help="capacity of one channel instance")
    p.add_argument("--channel", required=True, help="channel JSON file")
    p.add_argument("--ptot", type=float, required=True)
    p.add_argument("--pap", required=True,
                   help="comma list of per-antenna caps, or one value for all")
    p.add_argument("--solver", default="auto",
                   choices=["auto", "basic", "fullrank", "singular",
                            "unitrank", "closedform", "waterfill"])
    p.add_argument("--units", default="bits", choices=["bits", "nats"])
    add_server(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("sweep", help="capacity over a power grid (CSV)")
    p.add_argument("--channel", required=True)
    p.add_argument("--sweep", required=True, choices=["ptot", "pap"])
    p.add_argument("--range", required=True, help="start:stop:count")
    p.add_argument("--ptot", type=float, default=None,
                   help="fixed total power (pap sweep)")
    p.add_argument("--pap", default=None, help="fixed caps (ptot sweep)")
    p.add_argument("--with-waterfill", action="store_true",
                   help="append the TP-only water-filling column")
    add_server(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("benchmark", help="timing comparison (CSV)")
    p.add_argument("--sizes", default="2,4,6,8")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    add_server(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("validate", help="run the acceptance suite")
    p.add_argument("--seed", type=int, default=0)
    add_server(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
