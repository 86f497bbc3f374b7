"""Constants for the contrastive texture learning package."""
DOMAIN = "ctl"

# Class labels in network output order
LABEL_MI = "MI"
LABEL_EP = "EP"
LABEL_CY = "CY"
LABEL_HSIL = "HSIL"
LABEL_CC = "CC"

CLASS_NAMES = (LABEL_MI, LABEL_EP, LABEL_CY, LABEL_HSIL, LABEL_CC)
NUM_CLASSES = len(CLASS_NAMES)

# Risk groups
RISK_LOW = "low_risk"
RISK_HIGH = "high_risk"

RISK_MAP = {
    LABEL_MI: RISK_LOW,
    LABEL_EP: RISK_LOW,
    LABEL_CY: RISK_LOW,
    LABEL_HSIL: RISK_HIGH,
    LABEL_CC: RISK_HIGH,
}

CLASS_INDEX_MAP = {name: index for index, name in enumerate(CLASS_NAMES)}
HIGH_RISK_INDICES = tuple(
    CLASS_INDEX_MAP[name] for name in CLASS_NAMES if RISK_MAP[name] == RISK_HIGH
)
LOW_RISK_INDICES = tuple(
    CLASS_INDEX_MAP[name] for name in CLASS_NAMES if RISK_MAP[name] == RISK_LOW
)

# LBP defaults
DEFAULT_LBP_P = 32
DEFAULT_LBP_R = 4.0
LBP_MIN_P = 4
LBP_MAX_P = 64
# Neighbor offsets are rounded so that quarter-turn symmetric samples coincide exactly
LBP_OFFSET_DECIMALS = 5

# Network defaults
DEFAULT_INPUT_CHANNELS = 1
DEFAULT_STEM_WIDTH = 16
DEFAULT_BLOCK_WIDTHS = (16, 32, 64)
DEFAULT_BLOCK_STRIDES = (1, 2, 2)
DEFAULT_PROJECTION_HIDDEN = 512
DEFAULT_PROJECTION_OUT = 128
HEAD_PROJECTION = "projection_mlp"
HEAD_GAP_LINEAR = "gap_linear"

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.1
PROBABILITY_FLOOR = 1e-12

# Optimizer defaults
OPTIMIZER_ADAM = "adam"
OPTIMIZER_SGD = "sgd_momentum"
ADAM_LR = 1e-2
ADAM_WEIGHT_DECAY = 1e-6
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8
SGD_LR = 5e-3
SGD_MOMENTUM = 0.9

# Training defaults
DEFAULT_BATCH_SIZE = 32
DEFAULT_TEMPERATURE = 0.5
DEFAULT_PRETRAIN_EPOCHS = 30
DEFAULT_FINETUNE_EPOCHS = 30
LABEL_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
INIT_CHECKPOINT = "from_checkpoint"
INIT_RANDOM = "random"

# Corpus defaults
DEFAULT_PATCH_SIZE = 64
DEFAULT_FRAME_WIDTH = 128
DEFAULT_PATIENTS_PER_CLASS = 15
DEFAULT_FRAMES_PER_VOLUME = 10
DEFAULT_SPLIT_RATIO = 0.8
DEFAULT_FOLDS = 10
DEFAULT_PRETRAIN_HOLDOUT = 0.2

# Voting defaults
DEFAULT_VOTE_THRESHOLD = 0.8
DEFAULT_RUN_LENGTH = 3
VERDICT_POSITIVE = "POSITIVE"
VERDICT_NEGATIVE = "NEGATIVE"

# Evaluation
TASK_BINARY = "binary"
TASK_FIVE_CLASS = "five"
DEFAULT_CONFIDENCE = 0.95
DEFAULT_BINARY_THRESHOLD = 0.5
WILCOXON_EXACT_LIMIT = 20
WILCOXON_MIN_PAIRS = 5

# Checkpoint file format
CHECKPOINT_MAGIC = b"CTLK"
CHECKPOINT_VERSION = 1
CHECKPOINT_META_BLOB = "__meta__"
CHECKPOINT_ROLE_PRETRAIN = "pretrain"
CHECKPOINT_ROLE_DOWNSTREAM = "downstream"

# Colormap stops on [0, 1]: blue, green, red
COLORMAP_STOPS = (
    (0.0, (0, 0, 255)),
    (0.5, (0, 255, 0)),
    (1.0, (255, 0, 0)),
)

# Sweep defaults
DEFAULT_SWEEP_R = (1.0, 2.0, 4.0)
DEFAULT_SWEEP_P = (8, 16, 32)
DEFAULT_SWEEP_EPOCHS = 10
