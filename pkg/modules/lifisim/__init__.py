"""
LIFISIM - Indoor Li-Fi Link Simulator
=====================================
Lambertian LOS channel, IM/DD modem, Monte Carlo BER engine and LED panel
placement planner, driven from the `lifisim` command line.
"""

from .cli import main

__all__ = ["main"]
