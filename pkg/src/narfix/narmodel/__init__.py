"""The NARRepair network, its two-stage decoding rules and the AR baseline."""
from narfix.narmodel.ar import ARRepairNet
from narfix.narmodel.config import ModelConfig
from narfix.narmodel.data import Batch, collate, expansion_map
from narfix.narmodel.decoding import DecodeTrace, consistency, merge_stages, retention_mask
from narfix.narmodel.model import Losses, NARRepairNet, Outputs

__all__ = [
    "ARRepairNet", "Batch", "DecodeTrace", "Losses", "ModelConfig", "NARRepairNet", "Outputs",
    "collate", "consistency", "expansion_map", "merge_stages", "retention_mask",
]
