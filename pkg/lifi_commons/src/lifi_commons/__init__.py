"""
LIFI COMMONS - lifisim Shared Infrastructure
=============================================
Core components shared by the simulator and its tooling.

Modules:
- config: environment, paths, tunables and structlog setup
- seeding: splittable seeded random streams for reproducible Monte Carlo runs

Usage:
    from lifi_commons.config import configure_logging, get_config
    from lifi_commons.seeding import derive_seeds, make_rng
"""

__version__ = "0.1.0"
