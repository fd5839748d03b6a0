from uwsvd.modem.qam import (
    SUPPORTED_ORDERS,
    Constellation,
    SnrSpec,
    demodulate_hard,
    modulate,
    random_indices,
    symbol_error_rate,
    transmit,
)

__all__ = [
    "SUPPORTED_ORDERS",
    "Constellation",
    "SnrSpec",
    "demodulate_hard",
    "modulate",
    "random_indices",
    "symbol_error_rate",
    "transmit",
]
