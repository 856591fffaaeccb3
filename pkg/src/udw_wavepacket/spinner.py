# src/udw_wavepacket/spinner.py
#
# Console spinner with a wall-clock readout, shown while a scenario
# stage is integrating. The elapsed time feeds the CLI summary line.

import threading
import time
from typing import Optional

from .logging_utils import CYAN, RESET


class Spinner:
    def __init__(self, message: str = "Integrating...", tag: str = "RUN", enabled: bool = True) -> None:
        self.message = message
        self.tag = tag
        self.enabled = enabled
        self.frames = ["-", "\\", "|", "/"]
        self.running = False
        self.started_at: Optional[float] = None
        self.stopped_at: Optional[float] = None
        self.thread: Optional[threading.Thread] = None

    @property
    def elapsed(self) -> float:
        """Seconds between start() and stop(), or until now while running."""
        if self.started_at is None:
            return 0.0
        end = self.stopped_at if self.stopped_at is not None else time.perf_counter()
        return end - self.started_at

    def start(self) -> None:
        if self.running:
            return
        self.running = True
        self.started_at = time.perf_counter()
        self.stopped_at = None
        if self.enabled:
            self.thread = threading.Thread(target=self._spin, daemon=True)
            self.thread.start()

    def _spin(self) -> None:
        idx = 0
        while self.running:
            print(
                f"\r{CYAN}[{self.tag}]{RESET} {self.message} {self.frames[idx]} {self.elapsed:6.1f} s",
                end="",
                flush=True,
            )
            idx = (idx + 1) % len(self.frames)
            time.sleep(0.1)

    def stop(self) -> None:
        if not self.running:
            return
        self.running = False
        self.stopped_at = time.perf_counter()
        if self.thread is not None:
            self.thread.join(timeout=0.5)
            self.thread = None
            print("\r", end="", flush=True)

    def __enter__(self) -> "Spinner":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()
