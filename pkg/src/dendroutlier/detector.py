"""Experimental threshold-crossing event detector for raw series.

Only meant for demos on raw data; real use should supply annotated events.
An event is a maximal run of samples whose value exceeds
``mean + k * std`` of the series. Its features are the peak value, the mean
value over the run and the run duration.
"""

from __future__ import annotations

import numpy as np

from .similarity import Event, EventSeries


def detect_threshold_events(
    series_id: str, t: np.ndarray, values: np.ndarray, k: float = 2.0
) -> EventSeries:
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return EventSeries(series_id, (), 0)
    level = values.mean() + k * values.std()
    above = values > level
    edges = np.diff(above.astype(np.int8), prepend=0, append=0)
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)  # exclusive
    events = []
    for n, (a, b) in enumerate(zip(starts, stops)):
        run = values[a:b]
        start, end = float(t[a]), float(t[b - 1])
        events.append(
            Event(f"{series_id}-e{n}", series_id, start, end,
                  (float(run.max()), float(run.mean()), end - start))
        )
    return EventSeries(series_id, tuple(events), int(values.size))


def detect_all(raw: dict[str, tuple[np.ndarray, np.ndarray]], k: float = 2.0) -> list[EventSeries]:
    return [detect_threshold_events(sid, t, v, k) for sid, (t, v) in raw.items()]
