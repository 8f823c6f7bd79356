"""WebSocket session service.

Each connection owns one :class:`~digitpad.session.Session`.  Inbound client
messages and elapsed timers funnel through a single queue per connection, so
a session's events are processed strictly in order while separate sessions
run concurrently.  The trained model and the configuration are shared and
immutable.
"""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import bilstm, dataset
from .config import GlobalConfig
from .session import Session

logger = logging.getLogger(__name__)


def create_app(model: bilstm.BiLstmClassifier, config: GlobalConfig,
               static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="digitpad gateway")

    @app.get("/health")
    async def health():
        return {"status": "ok", "hidden_units": model.hidden,
                "parameters": model.parameter_count()}

    @app.get("/templates")
    async def templates():
        tpl = dataset.load_templates()
        return JSONResponse({
            "pad_mm": dataset.PAD_MM,
            "digits": {str(d): t.polyline.tolist() for d, t in tpl.items()},
            "duration_s": tpl[0].duration,
        })

    @app.get("/tasks")
    async def tasks():
        return {str(d): {"name": t.name, "motion_id": t.motion_id}
                for d, t in config.task_registry.tasks.items()}

    @app.websocket("/session")
    async def session_endpoint(ws: WebSocket):
        await ws.accept()
        session = Session(model, config)
        queue: asyncio.Queue = asyncio.Queue()
        timer_tasks: set = set()

        async def receiver():
            try:
                while True:
                    text = await ws.receive_text()
                    await queue.put(("msg", text))
            except WebSocketDisconnect:
                await queue.put(("closed", None))
            except Exception:
                await queue.put(("closed", None))

        def schedule_timers():
            for req in session.pop_timer_requests():
                async def fire(r=req):
                    await asyncio.sleep(r.duration)
                    await queue.put(("timer", r))
                task = asyncio.create_task(fire())
                timer_tasks.add(task)
                task.add_done_callback(timer_tasks.discard)

        recv_task = asyncio.create_task(receiver())
        try:
            while True:
                kind, payload = await queue.get()
                if kind == "closed":
                    break
                if kind == "msg":
                    outgoing = session.handle_text(payload)
                else:
                    outgoing = session.fire_timer(payload.timer_id, payload.generation)
                schedule_timers()
                for msg in outgoing:
                    await ws.send_text(json.dumps(msg))
        except WebSocketDisconnect:
            pass
        finally:
            recv_task.cancel()
            for task in timer_tasks:
                task.cancel()

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def ensure_model(config: GlobalConfig, log_every: int = 20) -> bilstm.BiLstmClassifier:
    """Load the configured model, training a synthetic demo model if missing."""
    path = Path(config.model_path)
    if path.exists():
        return bilstm.load(path)
    logger.warning("model %s not found; training a demo model on synthetic data", path)
    ds = dataset.make_synthetic_dataset(per_class=30, users=2, rng=0)
    train_ds, val_ds = dataset.split(ds, dataset.SplitConfig(seed=0))
    model, history = bilstm.train(train_ds, val_ds,
                                  bilstm.TrainConfig(epochs=60, seed=0, log_every=log_every))
    path.parent.mkdir(parents=True, exist_ok=True)
    bilstm.save(model, path)
    logger.info("demo model saved to %s (val accuracy %.4f)", path, history[-1]["val_acc"])
    return model


def serve(config: GlobalConfig, static_dir: Optional[str] = None) -> None:
    import uvicorn

    model = ensure_model(config)
    app = create_app(model, config, static_dir=static_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
