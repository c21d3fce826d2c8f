"""In-process HTTP stub serving the chat-completions and embedding wire shapes.

Used by the test suite and handy for wiring checks without a real provider.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

from ..embedding import HashedBagOfWords


class StubServer:
    def __init__(self, reply: str | Callable[[str], str] = "stub reply", *,
                 status: int = 200, embed_dimension: int = 16, report_usage: bool = True):
        self.reply = reply
        self.status = status
        self.report_usage = report_usage
        self.embedder = HashedBagOfWords(embed_dimension)
        self.requests: list[dict] = []
        self._server: ThreadingHTTPServer | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def _handler(self):
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # silence
                pass

            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers.get("Content-Length", 0))) or b"{}")
                stub.requests.append({"path": self.path, "body": body, "auth": self.headers.get("Authorization")})
                if stub.status != 200:
                    self._send(stub.status, {"error": {"message": "stub failure"}})
                elif self.path.endswith("/chat/completions"):
                    prompt = body["messages"][-1]["content"]
                    text = stub.reply(prompt) if callable(stub.reply) else stub.reply
                    out = {"id": "stub-1", "object": "chat.completion", "model": body.get("model"),
                           "choices": [{"index": 0, "message": {"role": "assistant", "content": text},
                                        "finish_reason": "stop"}]}
                    if stub.report_usage:
                        out["usage"] = {"prompt_tokens": len(prompt.split()) + 7,
                                        "completion_tokens": len(text.split()) + 1}
                    self._send(200, out)
                elif self.path.endswith("/embed"):
                    vectors = [stub.embedder.embed(t).tolist() for t in body.get("texts", [])]
                    self._send(200, {"vectors": vectors})
                else:
                    self._send(404, {"error": {"message": "not found"}})

            def _send(self, status, payload):
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        return Handler

    def start(self) -> "StubServer":
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), self._handler())
        threading.Thread(target=self._server.serve_forever, daemon=True).start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "StubServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
