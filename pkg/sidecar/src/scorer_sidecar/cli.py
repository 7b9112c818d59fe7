"""Serve the scorer sidecar: `ehr-scorer-sidecar --port 8090`."""
from __future__ import annotations

import argparse
import sys

from .models import (DEFAULT_LM_MODEL, DEFAULT_NLI_MODEL, DEFAULT_NSP_MODEL,
                     ModelUnavailable, load_models)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="EHR scorer sidecar")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8090)
    parser.add_argument("--models", choices=("pretrained", "heuristic", "auto"),
                        default="pretrained",
                        help="pretrained fails fast when weights are missing; "
                             "heuristic serves deterministic stand-ins")
    parser.add_argument("--nsp-model", default=DEFAULT_NSP_MODEL)
    parser.add_argument("--lm-model", default=DEFAULT_LM_MODEL)
    parser.add_argument("--nli-model", default=DEFAULT_NLI_MODEL)
    args = parser.parse_args(argv)

    try:
        models = load_models(args.models, args.nsp_model, args.lm_model,
                             args.nli_model)
    except ModelUnavailable as exc:
        print(f"startup failure: {exc}", file=sys.stderr)
        return 1

    import uvicorn

    from .app import create_app

    print(f"serving {models.mode} scorers on http://{args.host}:{args.port}")
    uvicorn.run(create_app(models), host=args.host, port=args.port,
                log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
