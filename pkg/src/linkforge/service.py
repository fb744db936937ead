"""Embedded HTTP service hosting a tuning session and the review UI.

Single-analyst scale: a threading HTTP server with one coarse lock
around session state.  Label writes hit the append-only log (with
fsync) before they are acknowledged or applied in memory, so the
session directory can always be reloaded losslessly after a crash.
"""

import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import tuning
from .errors import SelectionError
from .similarity import FIELDS

DEFAULT_PAGE_SIZE = 50


def default_static_dir() -> Path | None:
    candidate = resources.files("linkforge").joinpath("_static")
    path = Path(str(candidate))
    return path if path.is_dir() else None


class TuningService:
    """Session state plus the operations the HTTP layer exposes."""

    def __init__(self, session, session_dir, static_dir=None, min_tpr: float = 0.85):
        self.session = session
        self.session_dir = Path(session_dir)
        self.static_dir = Path(static_dir) if static_dir else default_static_dir()
        self.min_tpr = min_tpr
        self.lock = threading.RLock()
        self.selected_config_id = self._load_selected()
        self.selection_event = threading.Event()
        if self.selected_config_id is not None:
            self.selection_event.set()
        s = self.session
        disagreement = 1.0 - np.abs(2.0 * s.classified_fraction - 1.0)
        self._disagreement_order = np.lexsort(
            (np.arange(s.n_pairs), -disagreement)).tolist()

    def _load_selected(self):
        chosen = self.session_dir / "chosen_config.json"
        if chosen.exists():
            return json.load(open(chosen, encoding="utf-8")).get("config_id")
        return None

    # -- session ---------------------------------------------------------

    def session_info(self) -> dict:
        with self.lock:
            s = self.session
            labeled = sum(1 for r in s.labels.values() if r["label"] != "unsure")
            return {
                "session_id": s.session_id,
                "community_id": s.community_id,
                "seed": s.seed,
                "n_pairs": s.n_pairs,
                "n_configs": s.n_configs,
                "quantile_grid": list(s.quantile_grid),
                "labeled": len(s.labels),
                "labeled_definite": labeled,
                "unsure": len(s.labels) - labeled,
                "progress": len(s.labels) / s.n_pairs if s.n_pairs else 0.0,
                "selected_config_id": self.selected_config_id,
                "warnings": s.warnings,
            }

    # -- pairs -----------------------------------------------------------

    def _pair_payload(self, idx: int) -> dict:
        s = self.session
        sims = {name: (None if math.isnan(s.sims[idx, i]) else float(s.sims[idx, i]))
                for i, name in enumerate(FIELDS)}
        mean = s.score_mean[idx]
        label_row = s.labels.get(s.pair_ids[idx])
        return {
            "pair_id": s.pair_ids[idx],
            "resident": s.records_view.get(s.pair_resident_ids[idx]),
            "contact": s.records_view.get(s.pair_contact_ids[idx]),
            "sims": sims,
            "score": None if math.isnan(mean) else float(mean),
            "classified_fraction": float(s.classified_fraction[idx]),
            "label": label_row["label"] if label_row else None,
        }

    def list_pairs(self, label_filter: str = "all", order: str = "disagreement",
                   offset: int = 0, limit: int = DEFAULT_PAGE_SIZE) -> dict:
        with self.lock:
            s = self.session
            if order == "disagreement":
                ordering = self._disagreement_order
            else:
                ordering = range(s.n_pairs)
            selected = []
            for idx in ordering:
                pid = s.pair_ids[idx]
                if label_filter == "unlabeled" and pid in s.labels:
                    continue
                if label_filter == "labeled" and pid not in s.labels:
                    continue
                selected.append(idx)
            window = selected[offset : offset + limit]
            return {
                "total": len(selected),
                "offset": offset,
                "pairs": [self._pair_payload(i) for i in window],
            }

    def get_pair(self, pair_id: str) -> dict | None:
        with self.lock:
            try:
                idx = self.session.pair_index(pair_id)
            except KeyError:
                return None
            return self._pair_payload(idx)

    def apply_label(self, pair_id: str, label: str, annotator: str) -> dict:
        """Durable log append first, then in-memory state, then ack."""
        with self.lock:
            self.session.pair_index(pair_id)  # raises KeyError when unknown
            row = {
                "pair_id": pair_id, "label": label, "annotator": annotator,
                "timestamp": __import__("time").time(),
            }
            if label not in tuning.LABELS:
                raise ValueError(f"label must be one of {tuning.LABELS}")
            tuning.append_label_row(self.session_dir, row)
            tuning.apply_label(self.session, pair_id, label, annotator, row["timestamp"])
            return row

    # -- configs ---------------------------------------------------------

    def configs_payload(self) -> dict:
        with self.lock:
            s = self.session
            has_labels = any(r["label"] != "unsure" for r in s.labels.values())
            metrics = tuning.config_metrics(s) if has_labels else None
            recommended = None
            warning = None
            if metrics is not None:
                try:
                    recommended, warning = tuning.select_config(metrics, s.configs,
                                                                self.min_tpr)
                except SelectionError:
                    recommended = None
            rows = []
            for i, cfg in enumerate(s.configs):
                row = {"config_id": i, "weights": list(cfg.weights),
                       "quantile": cfg.quantile}
                if metrics is not None:
                    row.update(metrics[i].to_dict())
                rows.append(row)
            return {
                "configs": rows,
                "recommended_config_id": recommended,
                "selection_warning": warning,
                "min_tpr": self.min_tpr,
                "selected_config_id": self.selected_config_id,
            }

    def select_config(self, config_id: int) -> dict:
        with self.lock:
            s = self.session
            if not isinstance(config_id, int) or not 0 <= config_id < s.n_configs:
                raise KeyError(f"unknown config {config_id!r}")
            if not s.labels:
                raise PermissionError("cannot select a config with zero labels")
            payload = tuning.chosen_config_payload(s, config_id)
            tmp = self.session_dir / "chosen_config.json.tmp"
            final = self.session_dir / "chosen_config.json"
            tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
            tmp.replace(final)
            self.selected_config_id = config_id
            self.selection_event.set()
            return {"ok": True, "config_id": config_id, "path": str(final)}

    def export_payload(self) -> dict:
        with self.lock:
            return {
                "session": self.session_info(),
                "configs": self.configs_payload()["configs"],
                "labels": list(self.session.label_log),
            }


class _Handler(BaseHTTPRequestHandler):
    service: TuningService  # set by serve()

    def log_message(self, *args):  # quiet by default
        pass

    def _json(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str) -> None:
        self._json(status, {"error": message})

    def _read_json_body(self):
        length = int(self.headers.get("Content-Length", 0))
        if length == 0:
            return None
        try:
            return json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            return None

    def _serve_static(self, path: str) -> None:
        static = self.service.static_dir
        if static is None:
            self._error(404, "no UI assets built")
            return
        name = "index.html" if path in ("/", "") else path.lstrip("/")
        target = (static / name).resolve()
        if not str(target).startswith(str(static.resolve())) or not target.is_file():
            self._error(404, f"not found: {path}")
            return
        types = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".map": "application/json",
                 ".svg": "image/svg+xml"}
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", types.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):  # noqa: N802 (http.server API)
        url = urlparse(self.path)
        query = parse_qs(url.query)
        try:
            if url.path == "/api/session":
                self._json(200, self.service.session_info())
            elif url.path == "/api/pairs":
                payload = self.service.list_pairs(
                    label_filter=query.get("filter", ["all"])[0],
                    order=query.get("order", ["disagreement"])[0],
                    offset=int(query.get("offset", ["0"])[0]),
                    limit=int(query.get("limit", [str(DEFAULT_PAGE_SIZE)])[0]),
                )
                self._json(200, payload)
            elif url.path.startswith("/api/pairs/"):
                pair = self.service.get_pair(url.path[len("/api/pairs/"):])
                if pair is None:
                    self._error(404, "unknown pair")
                else:
                    self._json(200, pair)
            elif url.path == "/api/configs":
                self._json(200, self.service.configs_payload())
            elif url.path == "/api/export":
                self._json(200, self.service.export_payload())
            elif url.path.startswith("/api/"):
                self._error(404, f"unknown endpoint {url.path}")
            else:
                self._serve_static(url.path)
        except ValueError as exc:
            self._error(400, str(exc))

    def do_POST(self):  # noqa: N802
        url = urlparse(self.path)
        body = self._read_json_body()
        try:
            if url.path.startswith("/api/pairs/") and url.path.endswith("/label"):
                pair_id = url.path[len("/api/pairs/"):-len("/label")]
                if not body or "label" not in body:
                    self._error(400, "body must be JSON with a 'label' field")
                    return
                row = self.service.apply_label(
                    pair_id, body["label"], body.get("annotator", "anonymous"))
                self._json(200, {"ok": True, "recorded": row})
            elif url.path == "/api/configs/select":
                if not body or "config_id" not in body:
                    self._error(400, "body must be JSON with a 'config_id' field")
                    return
                self._json(200, self.service.select_config(body["config_id"]))
            else:
                self._error(404, f"unknown endpoint {url.path}")
        except KeyError as exc:
            self._error(404, str(exc.args[0]) if exc.args else "not found")
        except PermissionError as exc:
            self._error(409, str(exc))
        except ValueError as exc:
            self._error(400, str(exc))


def serve(service: TuningService, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Start the HTTP server on a background thread; returns the server."""
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
