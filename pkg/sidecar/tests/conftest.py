from __future__ import annotations

import socket
import threading
import time

import pytest
import requests
import uvicorn

from scorer_sidecar.app import create_app
from scorer_sidecar.models import ModelUnavailable, load_models


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def _serve(models) -> tuple[uvicorn.Server, str]:
    port = _free_port()
    config = uvicorn.Config(create_app(models), host="127.0.0.1", port=port,
                            log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base_url = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            if requests.get(base_url + "/healthz", timeout=1).status_code == 200:
                return server, base_url
        except requests.RequestException:
            time.sleep(0.05)
    raise RuntimeError("sidecar did not come up")


@pytest.fixture(scope="session")
def heuristic_sidecar():
    server, base_url = _serve(load_models("heuristic"))
    yield base_url
    server.should_exit = True


@pytest.fixture(scope="session")
def pretrained_sidecar():
    try:
        models = load_models("pretrained")
    except ModelUnavailable as exc:
        pytest.skip(f"pretrained weights unavailable here: {exc}")
    server, base_url = _serve(models)
    yield base_url
    server.should_exit = True
