from .zoo import (
    ARCH_IDS,
    DEEP4NET_CONFIG,
    EEGNET_CONFIG,
    SHALLOWNET_CONFIG,
    TCN_CONFIG,
    ModelGraph,
    ModelSpec,
    build,
    receptive_field,
)

__all__ = [
    "ARCH_IDS", "ModelSpec", "ModelGraph", "build", "receptive_field",
    "EEGNET_CONFIG", "SHALLOWNET_CONFIG", "DEEP4NET_CONFIG", "TCN_CONFIG",
]
