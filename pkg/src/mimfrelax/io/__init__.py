"""File formats: free-format MPS and instance JSON."""
from .instance_json import SchemaError, dump_instance, instance_from_dict, instance_to_dict, load_instance
from .mps import MpsError, NameCollision, read_mps, sanitize, write_mps

__all__ = [
    "MpsError", "NameCollision", "SchemaError", "dump_instance", "instance_from_dict",
    "instance_to_dict", "load_instance", "read_mps", "sanitize", "write_mps",
]
