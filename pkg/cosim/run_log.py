"""
Run Event Log
=============

Structured JSON-lines log of one run: start, committed events,
non-convergence and finish. One line per record, appended as they happen.
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

logger = logging.getLogger("cosim.run_log")

RUN_LOG_NAME = "run_log.jsonl"

_EMOJI = {
    "run_start": "🚀",
    "event": "🔀",
    "non_convergence": "❌",
    "run_finish": "✅",
}


class RunEventLogger:
    """Appends (timestamp, run id, kind, payload) records to <out>/run_log.jsonl"""

    def __init__(self, output_dir: Union[str, Path], run_id: Optional[str] = None):
        self.start_time = datetime.now()
        self.run_id = run_id or self.start_time.strftime('%Y%m%d_%H%M%S')
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.log_file = self.output_dir / RUN_LOG_NAME
        self.records: List[Dict[str, Any]] = []

    def log(self, kind: str, **payload: Any) -> Dict[str, Any]:
        record = {
            "timestamp": datetime.now().isoformat(),
            "run_id": self.run_id,
            "kind": kind,
            "payload": payload,
        }
        self.records.append(record)
        with open(self.log_file, 'a') as f:
            f.write(json.dumps(record, default=str) + "\n")
        logger.debug(f"{_EMOJI.get(kind, '🔄')} [{self.run_id}] {kind} {payload}")
        return record

    def kinds(self) -> List[str]:
        return [r["kind"] for r in self.records]


def read_run_log(path: Union[str, Path]) -> List[Dict[str, Any]]:
    path = Path(path)
    if path.is_dir():
        path = path / RUN_LOG_NAME
    with open(path, 'r') as f:
        return [json.loads(line) for line in f if line.strip()]
