"""HTTP clients for the optional model-inference sidecar.

The sidecar exposes POST /embed, POST /aos, and GET /health over JSON. The
whole primary test suite runs without it; these clients exist so dense
retrieval and triplet extraction can be backed by real models when one is
mounted.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import requests

from .aoseval import AosTriplet, TripletExtractor
from .errors import BackendError, RetrievalError
from .retrieval import Embedder

_UNIT_NORM_TOLERANCE = 1e-6


class SidecarEmbedder(Embedder):
    """Embedder backed by the sidecar's /embed endpoint."""

    def __init__(self, base_url: str, timeout: float = 60.0,
                 session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()
        self._dimension: Optional[int] = None

    @property
    def dimension(self) -> int:
        if self._dimension is None:
            self.embed([])
        return self._dimension

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        try:
            response = self.session.post(f"{self.base_url}/embed",
                                         json={"texts": list(texts)}, timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
        except requests.RequestException as exc:
            raise RetrievalError(f"sidecar /embed failed: {exc}") from exc
        vectors = payload.get("vectors")
        dimension = payload.get("dimension")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise RetrievalError("sidecar /embed returned misaligned vectors")
        self._dimension = int(dimension)
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self._dimension,):
                raise RetrievalError("sidecar /embed returned a vector of wrong dimension")
            norm = float(np.linalg.norm(arr))
            if abs(norm - 1.0) > _UNIT_NORM_TOLERANCE:
                raise RetrievalError(f"sidecar /embed returned non-unit vector (norm {norm})")
            out.append(arr)
        return out


class SidecarTripletExtractor(TripletExtractor):
    """Triplet extractor backed by the sidecar's /aos endpoint."""

    def __init__(self, base_url: str, timeout: float = 60.0,
                 session: Optional[requests.Session] = None):
        self.descriptor = "sidecar"
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()

    def extract(self, sentences: Sequence[str]) -> list[list[AosTriplet]]:
        try:
            response = self.session.post(f"{self.base_url}/aos",
                                         json={"sentences": list(sentences)}, timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
        except requests.RequestException as exc:
            raise BackendError(f"sidecar /aos failed: {exc}") from exc
        triplet_lists = payload.get("triplets")
        if not isinstance(triplet_lists, list) or len(triplet_lists) != len(sentences):
            raise BackendError("sidecar /aos returned misaligned triplet lists")
        result = []
        for raw_list in triplet_lists:
            result.append([
                AosTriplet(aspect=t["aspect"], opinion=t["opinion"], sentiment=t["sentiment"])
                for t in raw_list
            ])
        return result


def sidecar_health(base_url: str, timeout: float = 10.0) -> dict:
    response = requests.get(f"{base_url.rstrip('/')}/health", timeout=timeout)
    response.raise_for_status()
    return response.json()
