"""climashift: distribution-shift evaluation harness for climate emulators.

Synthetic scenario data with a planted, fully known generative process;
baseline / time-shift / scenario-holdout split protocols; a small emulator
zoo (monthly climatology, least-squares pattern scaling, manual-backprop
MLP); latitude-weighted RMSE risks and percent-change shift reports.
Everything downstream of a (config, seed) pair is byte-reproducible.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .config import (ExperimentConfig, config_to_dict, default_config,
                     load_config, parse_config, with_overrides)
from .datasetio import (DatasetManifest, YearChunk, chunk_years, read_dataset,
                        read_manifest, write_dataset)
from .emulators import (ClimatologyEmulator, Emulator, MlpEmulator,
                        PatternScalingEmulator, TrainConfig,
                        emulator_from_dict, emulator_to_dict,
                        fit_climatology, fit_pattern_scaling, lr_schedule,
                        train, train_mlp)
from .errors import (ChecksumError, ClimashiftError, ConfigError,
                     ContractError, DataIntegrityError, DivergenceError,
                     IncompleteRecordsError, MissingFileError,
                     SingularDesignError, VersionError)
from .evaluation import (EvalRecord, ResultsTable, build_results_table,
                         domain_risk, percent_change, records_from_csv,
                         records_to_csv, table_to_csv, table_to_markdown,
                         table_to_text, worst_case_risk)
from .grid import (FORCING_VARIABLES, OUTPUT_VARIABLES, Field, GridSpec,
                   LatWeights, build_grid, lat_weights, weighted_mse,
                   weighted_rmse, weighted_spatial_mean,
                   weights_from_latitudes)
from .rng import Pcg32, derive_seed, fnv1a64_str, splitmix64
from .runner import ExperimentResult, ensure_dataset, run_experiment
from .splits import (ChunkKey, SplitPlan, baseline_split, chunk_universe,
                     read_plan, resolve_chunks, rotate_ssp_splits,
                     time_domain_split, verify_split, write_plan)
from .synth import (Dataset, GenerationConfig, OracleConfig, RampSpec,
                    ScenarioSeries, build_dataset, default_oracle_params,
                    default_ramps, forcing_trajectory, generate_series,
                    simulate_oracle)

__all__ = [name for name in dir() if not name.startswith("_")]
