"""
Shared pytest fixtures: calibrated simulator environment and a local stub SUT
"""

import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from src.core.domain_v1 import TestObjective, TransactionCatalog
from src.core.sut_simulator_v1 import SimulatorEnvironment, calibrate_default


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs the full acceptance suite on the default config")


class StubHandler(BaseHTTPRequestHandler):
    """/ok 200 after ~10 ms, /fail 500, /slow 200 after 300 ms, /echo returns the request body"""

    def _reply(self, status: int, body: bytes = b'ok'):
        self.send_response(status)
        self.send_header('Content-Length', str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        path = self.path.split('?', 1)[0]
        if path == '/ok':
            time.sleep(0.01)
            self._reply(200)
        elif path == '/fail':
            self._reply(500, b'error')
        elif path == '/slow':
            time.sleep(0.3)
            self._reply(200)
        elif path == '/':
            self._reply(200, b'home')
        else:
            self._reply(404, b'missing')

    def do_POST(self):
        length = int(self.headers.get('Content-Length') or 0)
        body = self.rfile.read(length) if length else b''
        self._reply(200, body or b'empty')

    def log_message(self, format, *args):
        pass


@pytest.fixture(scope='session')
def stub_server():
    server = ThreadingHTTPServer(('127.0.0.1', 0), StubHandler)
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


@pytest.fixture
def sim_env():
    return SimulatorEnvironment(calibrate_default())


@pytest.fixture
def catalog():
    return TransactionCatalog.default()


@pytest.fixture
def objective():
    return TestObjective.default()
