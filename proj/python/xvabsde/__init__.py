"""Defaultable OTC derivative pricing with asymmetric funding, repo, and
collateral rates: price intervals, valuation-adjustment decompositions,
no-arbitrage checks, and replication diagnostics."""

from ._core import (  # noqa: F401
    ConfigError,
    DomainError,
    NumericError,
    RunConfig,
    __version__,
    check_noarb,
    classical_xva,
    girsanov,
    load_config,
    load_config_file,
    ordering,
    price,
    reference_config,
    replicate,
    set_max_workers,
    sweep,
    telescoping,
    validate,
    xva,
)
