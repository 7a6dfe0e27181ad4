"""Adversarial robustness laboratory for mmWave beamforming prediction."""

from .attacks import AttackConfig, AttackResult, attack_batch, bim, fgsm, mim, pgd
from .channel import (Dataset, PRESETS, ScenarioConfig, complex_to_real,
                      dft_codebook, export_dataset_csv, generate_scenario,
                      import_dataset_csv, real_to_complex, split_dataset)
from .config import ExperimentConfig, default_config, load_experiment_config
from .defenses import (AdvTrainConfig, DistillConfig, adversarial_train,
                       distill, softmax_with_temperature)
from .metrics import CorrelationResult, Histogram, histogram, mse, pearson
from .model import (MlpModel, ModelSpec, TrainConfig, init_model, load_model,
                    loss_gradient_wrt_input, predict, save_model, train)

__version__ = "0.1.0"
