import json
import queue
import shlex
import logging
import itertools
import threading
import subprocess
import numpy as np

from core.blackbox import BlackBox, DEFAULT_BATCH_SIZE
from errors import (
    BridgeConfigurationError,
    BridgeError,
    BridgeHandshakeError,
    BridgeProtocolError,
    BridgeTimeoutError,
    EvaluationError,
)

MODES = ("vector", "mask")


class BridgeClient:
    """Talks line-delimited JSON to a model host over its stdin/stdout.

    One request is in flight at a time; concurrent callers queue on a lock.
    """

    def __init__(self, command, p, mode="vector", timeout=30.0, cwd=None):
        if mode not in MODES:
            raise BridgeHandshakeError(f"Unknown bridge mode {mode!r}")
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.p = p
        self.mode = mode
        self.timeout = timeout
        self.cwd = cwd
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._replies = queue.Queue()
        self.process = self._start_process()
        try:
            self._handshake()
        except BridgeError:
            self.close()
            raise

    def _start_process(self):
        try:
            logging.debug(f"Starting model host: {self.command}")
            process = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
                cwd=self.cwd,
            )
        except OSError as e:
            logging.error(f"Failed to start model host {self.command}: {str(e)}", exc_info=True)
            raise BridgeHandshakeError(f"Failed to start model host: {str(e)}") from e
        reader = threading.Thread(target=self._read_lines, args=(process.stdout,), daemon=True)
        reader.start()
        return process

    def _read_lines(self, stream):
        for line in stream:
            self._replies.put(line)
        self._replies.put(None)  # EOF

    def _send(self, message):
        try:
            self.process.stdin.write(json.dumps(message) + "\n")
            self.process.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as e:
            raise BridgeError(f"Model host is not accepting input: {str(e)}") from e

    def _receive(self):
        while True:
            try:
                line = self._replies.get(timeout=self.timeout)
            except queue.Empty:
                raise BridgeTimeoutError(f"No reply from model host within {self.timeout}s")
            if line is None:
                code = self.process.poll()
                raise BridgeError(f"Model host closed its output (exit code {code})")
            line = line.strip()
            if not line:
                continue
            try:
                reply = json.loads(line)
            except json.JSONDecodeError as e:
                raise BridgeProtocolError(f"Model host sent invalid JSON: {line[:200]!r}") from e
            if not isinstance(reply, dict):
                raise BridgeProtocolError(f"Model host sent a non-object reply: {line[:200]!r}")
            logging.debug(f"Bridge reply: {reply.get('type')} id={reply.get('id')}")
            return reply

    def _reply_to(self, request_id):
        """Next reply, skipping late replies to requests that already timed out"""
        while True:
            reply = self._receive()
            reply_id = reply.get("id")
            if isinstance(reply_id, int) and not isinstance(reply_id, bool) and reply_id < request_id:
                logging.warning(f"Discarding late reply to request {reply_id}")
                continue
            return reply

    def _handshake(self):
        self._send({"type": "hello", "p": self.p, "mode": self.mode})
        try:
            reply = self._receive()
        except BridgeProtocolError as e:
            raise BridgeHandshakeError(f"Handshake failed: {str(e)}") from e
        if reply.get("type") != "ready" or not isinstance(reply.get("p"), int):
            raise BridgeHandshakeError(f"Expected a ready reply, got {reply!r}")
        if reply["p"] != self.p:
            raise BridgeConfigurationError(
                f"Model host declared p={reply['p']} but the space has p={self.p}")
        logging.info(f"Model host ready with p={self.p} in {self.mode} mode")

    def evaluate(self, inputs):
        """Send one eval request for a batch of inputs and return its outputs"""
        inputs = np.asarray(inputs)
        if self.mode == "mask":
            payload = inputs.astype(int).tolist()
        else:
            payload = inputs.astype(float).tolist()
        with self._lock:
            request_id = next(self._ids)
            self._send({"type": "eval", "id": request_id, "inputs": payload})
            reply = self._reply_to(request_id)
        kind = reply.get("type")
        if reply.get("id") != request_id:
            raise BridgeProtocolError(f"Reply id {reply.get('id')!r} does not match request {request_id}")
        if kind == "error":
            raise EvaluationError(f"Model host error: {reply.get('message', '')}")
        if kind != "result":
            raise BridgeProtocolError(f"Unexpected reply type {kind!r}")
        outputs = reply.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != len(payload):
            raise BridgeProtocolError(
                f"Expected {len(payload)} outputs, got {outputs if not isinstance(outputs, list) else len(outputs)}")
        try:
            return [float(y) for y in outputs]
        except (TypeError, ValueError) as e:
            raise BridgeProtocolError(f"Non-numeric output from model host: {str(e)}") from e

    def close(self):
        if self.process.poll() is None:
            try:
                self.process.stdin.close()
                self.process.wait(timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired):
                logging.warning("Model host did not exit; killing it")
                self.process.kill()
                self.process.wait()


def bridge_open(command, space, mode="vector", timeout=30.0, cwd=None,
                batch_size=DEFAULT_BATCH_SIZE, encoder=None) -> BlackBox:
    """BlackBox whose evaluations run in an external model host."""
    client = BridgeClient(command, space.p, mode=mode, timeout=timeout, cwd=cwd)
    return BlackBox(
        space,
        client.evaluate,
        feed=mode,
        encoder=encoder,
        batch_size=batch_size,
        description=f"bridge:{' '.join(client.command)}",
        resource=client,
    )
