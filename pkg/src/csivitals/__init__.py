"""Respiration and body-motion tracking from WiFi channel state information.

The package contains a streaming processing pipeline that recovers per-second
breath rate, motion events, outage statistics and nightly sleep reports from
CSI traces, plus a synthetic multipath channel generator used as the source of
labeled test data.
"""

__version__ = "0.1.0"
