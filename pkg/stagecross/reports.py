"""Report emission: CSV, JSON or a fixed-width table, to a file or standard output."""

import json
import logging
import os
import sys

import pandas as pd

logger = logging.getLogger(__name__)


def _open_target(out):
    if out is None or out == "-":
        return sys.stdout, False
    directory = os.path.dirname(os.path.abspath(out))
    os.makedirs(directory, exist_ok=True)
    return open(out, "w", encoding="utf-8", newline=""), True


def render_frame(frame, fmt):
    if fmt == "csv":
        return frame.to_csv(index=False, lineterminator="\n")
    if fmt == "json":
        return frame.to_json(orient="records", indent=2, double_precision=15) + "\n"
    return frame.to_string(index=False) + "\n"


def render_record(record, fmt):
    if fmt == "json":
        return json.dumps(record, indent=2) + "\n"
    return render_frame(pd.DataFrame([record]), fmt)


def format_table1(frame):
    """Comparison table: EN and EM to one decimal, r to three significant digits, r(delta)/r in percent."""
    shown = pd.DataFrame({
        "d/c": frame["d_over_c"].map(lambda v: f"{v:g}"),
        "procedure": frame["procedure"],
        "EN": frame["EN"].map(lambda v: f"{v:.1f}"),
        "EM": frame["EM"].map(lambda v: f"{v:.1f}"),
        "r": frame["r"].map(lambda v: f"{v:.3g}"),
        "r(delta)/r (%)": frame["r_delta_pct"].map(lambda v: f"{v:.1f}"),
    })
    return shown.to_string(index=False) + "\n"


def write_text(text, out=None):
    handle, owned = _open_target(out)
    try:
        handle.write(text)
        handle.flush()
    finally:
        if owned:
            handle.close()
    if owned:
        logger.info("Report written to %s", out)


def write_frame(frame, out=None, fmt="csv"):
    write_text(render_frame(frame, fmt), out)


def write_record(record, out=None, fmt="json"):
    write_text(render_record(record, fmt), out)
