import datetime
import re
from pathlib import Path

ANSI_ESCAPE = re.compile(r"\x1B[@-_][0-?]*[ -/]*[@-~]")

RED = "\033[91m"
GREEN = "\033[92m"
YELLOW = "\033[93m"
BLUE = "\033[94m"
CYAN = "\033[96m"
RESET = "\033[0m"


def strip_ansi(text):
    return ANSI_ESCAPE.sub("", text)


class SessionLog:
    """Append-only timestamped run log, one file per session."""

    def __init__(self, log_dir, enabled=True):
        self.path = None
        self.file = None
        if enabled:
            log_dir = Path(log_dir)
            log_dir.mkdir(parents=True, exist_ok=True)
            timestamp = datetime.datetime.now().strftime("%Y-%m-%d-%H-%M-%S")
            self.path = log_dir / f"session_{timestamp}.log"
            self.file = open(self.path, "a")

    def log(self, text, module_name=None):
        if not self.file:
            return
        timestamp = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        for line in text.strip().splitlines():
            prefix = f"[{timestamp}]"
            if module_name:
                prefix += f" [{module_name}]"
            self.file.write(f"{prefix} {strip_ansi(line)}\n")
        self.file.flush()

    def close(self):
        if self.file:
            self.file.close()
            self.file = None
