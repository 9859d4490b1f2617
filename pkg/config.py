"""Configuration settings for centroid-encoder experiments."""
import os
from dotenv import load_dotenv

load_dotenv()

# Reproducibility
SEED = int(os.getenv('CE_SEED', 0))

# Output and execution
OUT_DIR = os.getenv('CE_OUT_DIR', 'runs')
THREADS = int(os.getenv('CE_THREADS', 1))
LOG_LEVEL = os.getenv('CE_LOG_LEVEL', 'INFO').upper()

# Training protocol
MAX_EPOCHS = int(os.getenv('CE_MAX_EPOCHS', 200))
PATIENCE = int(os.getenv('CE_PATIENCE', 10))
PRETRAIN_STAGE_EPOCHS = int(os.getenv('CE_PRETRAIN_STAGE_EPOCHS', 20))
VALIDATION_FRACTION = float(os.getenv('CE_VALIDATION_FRACTION', 0.1))

# Evaluation protocol
KNN_K = int(os.getenv('CE_KNN_K', 5))
TEST_FRACTION = float(os.getenv('CE_TEST_FRACTION', 0.3))
REPEATS = int(os.getenv('CE_REPEATS', 10))
FOLDS = int(os.getenv('CE_FOLDS', 10))

# Adam constants
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# Network topologies and hyper-parameters per benchmark dataset.
# Hidden widths list the encoder half only; the decoder mirrors it.
PRESETS = {
    'mnist': {
        'hidden': (1000, 500, 125), 'activation': 'tanh',
        'learning_rate': 0.0008, 'batch_size': 512, 'weight_decay': 2e-5,
    },
    'usps': {
        'hidden': (2000, 1000, 500), 'activation': 'relu',
        'learning_rate': 0.001, 'batch_size': 64, 'weight_decay': 2e-5,
    },
    'phoneme': {
        'hidden': (250, 150), 'activation': 'relu',
        'learning_rate': 0.01, 'batch_size': 50, 'weight_decay': 2e-5,
    },
    'letter': {
        'hidden': (250, 150), 'activation': 'relu',
        'learning_rate': 0.01, 'batch_size': 50, 'weight_decay': 5e-5,
    },
    'landsat': {
        'hidden': (250, 150), 'activation': 'relu',
        'learning_rate': 0.01, 'batch_size': 50, 'weight_decay': 5e-5,
    },
    'iris': {
        'hidden': (100,), 'activation': 'relu',
        'learning_rate': 0.001, 'batch_size': 16, 'weight_decay': 2e-5,
    },
    'sonar': {
        'hidden': (500, 250), 'activation': 'relu',
        'learning_rate': 0.001, 'batch_size': 16, 'weight_decay': 2e-5,
    },
}

# Hyper-parameter search grids
LEARNING_RATE_GRID = (0.1, 0.01, 0.001, 0.0001, 0.0002, 0.0004, 0.0008)
BATCH_SIZE_GRID = (16, 32, 50, 64, 128, 256, 512, 1024)
WEIGHT_DECAY_GRID = (0.001, 0.0001, 0.00001, 0.00002, 0.00004, 0.00008)

# Visualization
BOTTLENECK_WIDTH = 2
SVG_HASH_SALT = 'centroid-encoder'
