from .bundle import (ModelBundle, save_bundle, load_bundle, dumps_bundle,
                     loads_bundle, feature_schema_from_names)
from .api import create_app, BundleHolder

__all__ = [
    "ModelBundle", "save_bundle", "load_bundle", "dumps_bundle",
    "loads_bundle", "feature_schema_from_names", "create_app", "BundleHolder",
]
