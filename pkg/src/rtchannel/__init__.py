"""Ray-traced outdoor channel datasets and coefficient regression."""
from .channel import ComplexCoefficient, PruningConfig, los_set, narrowband_coefficient, path_powers, prune_paths
from .dataset import Dataset, SplitSpec, dataset_stats, generate_dataset, read_csv, split, write_csv
from .geo import GeodeticPoint, LocalPoint, UtmPoint, geodetic_to_utm, local_to_utm, utm_to_local
from .raytracer import C0, PropagationPath, TraceConfig, mirror_point, trace_many, trace_paths
from .scene import Building, Scene, ScenGenConfig, generate_synthetic_scene, load_scene, save_scene

__version__ = "0.1.0"
