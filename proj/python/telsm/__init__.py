"""Python access to the telsm engine and its cost model."""

from ._telsm import DB, TelsmError, cost_report, w_max


def _options(kwargs):
    return {k: str(v).lower() if isinstance(v, bool) else str(v) for k, v in kwargs.items()}


def open_db(data_dir, **options):
    """Open (or create) a store; options use the engine config key names."""
    return DB(_options(dict(options, data_dir=data_dir)))


def cost(**params):
    return cost_report({k: str(v) for k, v in params.items()})


__all__ = ["DB", "TelsmError", "open_db", "cost", "cost_report", "w_max"]
