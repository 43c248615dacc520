"""HTTP try-on service.

Endpoints::

    GET  /health                   {"status", "bundle_version"}
    GET  /garments                 [{"id", "preview_url"}]
    GET  /garments/{id}/preview    image/png
    POST /tryon                    multipart request (image, garment_id,
                                   threshold?, feather?, return_intermediates?)
                                   -> image/png, or multipart/mixed with the
                                   per-person mask/crop/cloth intermediates

Status codes: 400 undecodable image, 404 unknown garment, 422 no person
found (when the fallback policy is "error"), 503 bundle not loaded.
Inference runs inside a bounded worker pool (serve.workers) so backend
concurrency contracts hold; identical requests against an immutable bundle
produce byte-identical responses.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import JSONResponse, Response

from .config import resolve_config
from .detect import DetectorConfig
from .imgbuf import decode_image, encode_png
from .pipeline import Bundle, NoPersonFound, PipelineConfig, UnknownGarment, load_bundle, tryon

_BOUNDARY = "vton-intermediates"


def _multipart_response(parts: list[tuple[str, bytes]]) -> Response:
    chunks = []
    for name, data in parts:
        chunks.append(
            (f"--{_BOUNDARY}\r\nContent-Type: image/png\r\nContent-ID: <{name}>\r\n\r\n").encode() + data + b"\r\n"
        )
    chunks.append(f"--{_BOUNDARY}--\r\n".encode())
    return Response(content=b"".join(chunks), media_type=f"multipart/mixed; boundary={_BOUNDARY}")


def create_app(bundle_source=None, cfg: dict | None = None) -> FastAPI:
    """Build the service; bundle_source is a bundle directory, a loaded
    Bundle, or None (service responds 503 until a bundle is present)."""
    cfg = cfg or resolve_config()
    bundle: Bundle | None
    if bundle_source is None:
        bundle = None
    elif isinstance(bundle_source, Bundle):
        bundle = bundle_source
    else:
        bundle = load_bundle(bundle_source)

    pl = cfg["pipeline"]
    base_pcfg = dict(
        detect=DetectorConfig(**cfg["detect"]),
        margin=pl["margin"],
        fallback=pl["fallback"],
    )
    pool = threading.Semaphore(int(cfg["serve"]["workers"]))
    app = FastAPI(title="vton")

    @app.get("/health")
    def health():
        return {"status": "ok" if bundle is not None else "no bundle", "bundle_version": getattr(bundle, "version", None)}

    @app.get("/garments")
    def garments():
        if bundle is None:
            return JSONResponse({"error": "bundle not loaded"}, status_code=503)
        return [{"id": gid, "preview_url": f"/garments/{gid}/preview"} for gid in bundle.garment_ids]

    @app.get("/garments/{garment_id}/preview")
    def preview(garment_id: str):
        if bundle is None:
            return JSONResponse({"error": "bundle not loaded"}, status_code=503)
        if garment_id not in bundle.garments:
            return JSONResponse({"error": "unknown garment"}, status_code=404)
        path = bundle.preview_path(garment_id)
        if not path.exists():
            return JSONResponse({"error": "preview missing"}, status_code=404)
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.post("/tryon")
    def handle_tryon(
        image: UploadFile = File(...),
        garment_id: str = Form(...),
        threshold: float | None = Form(None),
        feather: float | None = Form(None),
        return_intermediates: bool = Form(False),
    ):
        if bundle is None:
            return JSONResponse({"error": "bundle not loaded"}, status_code=503)
        if garment_id not in bundle.garments:
            return JSONResponse({"error": "unknown garment"}, status_code=404)
        raw = image.file.read()
        try:
            img = decode_image(raw)
        except Exception:
            return JSONResponse({"error": "undecodable image"}, status_code=400)

        pcfg = PipelineConfig(
            threshold=threshold if threshold is not None else pl["threshold"],
            feather=feather if feather is not None else pl["feather"],
            **base_pcfg,
        )
        try:
            with pool:
                result = tryon(img, garment_id, bundle, pcfg)
        except NoPersonFound:
            return JSONResponse({"error": "no person found"}, status_code=422)
        except UnknownGarment:
            return JSONResponse({"error": "unknown garment"}, status_code=404)

        result_png = encode_png(result.output)
        if not return_intermediates:
            return Response(content=result_png, media_type="image/png")
        parts = [("result", result_png)]
        for i, rec in enumerate(result.persons):
            x1, y1, x2, y2 = rec.source_box
            parts.append((f"crop_{i}", encode_png(img[y1:y2, x1:x2])))
            parts.append((f"mask_{i}", encode_png(rec.mask[:, :, None].repeat(3, axis=2))))
            parts.append((f"cloth_{i}", encode_png(rec.cloth)))
        return _multipart_response(parts)

    return app
