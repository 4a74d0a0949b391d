"""Bytecode layout shared by the priority-program compiler and both decoders."""

FEATURES = (
    "cost_rate",
    "p_min",
    "p_max",
    "min_up",
    "min_down",
    "demand",
    "residual_demand",
    "hours_in_state",
    "is_on",
    "t",
    "T",
    "N",
)
FEATURE_INDEX = {name: k for k, name in enumerate(FEATURES)}
N_FEATURES = len(FEATURES)

OP_CONST = 0
OP_FEAT = 1
OP_NEG = 2
OP_ADD = 3
OP_SUB = 4
OP_MUL = 5
OP_DIV = 6
OP_LT = 7
OP_LE = 8
OP_GT = 9
OP_GE = 10
OP_EQ = 11
OP_MIN = 12
OP_MAX = 13
OP_ABS = 14
OP_IF = 15

BINARY_OPS = {
    "+": OP_ADD,
    "-": OP_SUB,
    "*": OP_MUL,
    "/": OP_DIV,
    "<": OP_LT,
    "<=": OP_LE,
    ">": OP_GT,
    ">=": OP_GE,
    "==": OP_EQ,
}
CALL_OPS = {"min": OP_MIN, "max": OP_MAX, "abs": OP_ABS, "if": OP_IF}

# decoder status codes
STATUS_OK = 0
STATUS_DOMAIN = 1
STATUS_BUDGET = 2

SHORTFALL_TOL = 1e-9
