"""Record format, ingestion, preprocessing, batching and synthetic data."""

from modred.datapipe.batching import Batch, batch_iter, batch_plan, negative_keys
from modred.datapipe.preprocess import (
    PreprocessConfig,
    crop_random,
    mean_normalize,
    preprocess,
    resample_linear,
    resample_window,
)
from modred.datapipe.records import (
    Manifest,
    ManifestEntry,
    SignalRecord,
    import_csv,
    load_manifest,
    read_dataset,
    read_record,
    write_dataset,
    write_record,
)
from modred.datapipe.synthetic import (
    LEAD_NAMES,
    SyntheticHeartConfig,
    check_einthoven,
    synth_generate,
)


__all__ = [
    "LEAD_NAMES",
    "Batch",
    "Manifest",
    "ManifestEntry",
    "PreprocessConfig",
    "SignalRecord",
    "SyntheticHeartConfig",
    "batch_iter",
    "batch_plan",
    "check_einthoven",
    "crop_random",
    "import_csv",
    "load_manifest",
    "mean_normalize",
    "negative_keys",
    "preprocess",
    "read_dataset",
    "read_record",
    "resample_linear",
    "resample_window",
    "synth_generate",
    "write_dataset",
    "write_record",
]
