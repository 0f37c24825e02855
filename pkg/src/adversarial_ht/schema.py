"""JSON schemas for experiment configuration files, one per subcommand."""

CONFIG_VERSION = 1
COMMANDS = ("simulate", "regions", "exponents", "attack", "exact-pfn")

_DEFS = {
    "pmf": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2},
    "sequence": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
    "positive": {"type": "number", "exclusiveMinimum": 0},
    "distortion": {
        "type": "object",
        "properties": {
            "budget": {"type": "number", "minimum": 0},
            "cost": {
                "type": "array",
                "minItems": 2,
                "items": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2},
            },
        },
        "required": ["budget"],
        "additionalProperties": False,
    },
}

_COMMON = {
    "version": {"const": CONFIG_VERSION},
    "command": {"enum": list(COMMANDS)},
    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    "threshold_mode": {"enum": ["finite-n", "asymptotic"]},
}

_GAME = {
    "n": {"type": "integer", "minimum": 1},
    "lam": {"$ref": "#/$defs/positive"},
    "c": {"$ref": "#/$defs/positive"},
    "d_ratio": {"$ref": "#/$defs/positive"},
    "distortion": {"$ref": "#/$defs/distortion"},
    "game": {"enum": ["tr", "ks"]},
}

_SPECIFIC = {
    "simulate": (
        {
            **_GAME,
            "P_X": {"$ref": "#/$defs/pmf"},
            "P_Y": {"$ref": "#/$defs/pmf"},
            "trials": {"type": "integer", "minimum": 1},
            "game_version": {"enum": ["c", "a"]},
            "n_schedule": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "force_shared_training": {"type": "boolean"},
        },
        ["n", "lam", "distortion", "P_X", "P_Y", "trials"],
    ),
    "regions": (
        {
            "Q": {"$ref": "#/$defs/pmf"},
            "lam": {"$ref": "#/$defs/positive"},
            "c": {"$ref": "#/$defs/positive"},
            "distortion": {"$ref": "#/$defs/distortion"},
            "resolution": {"type": "integer", "minimum": 1},
        },
        ["Q", "lam", "distortion", "resolution"],
    ),
    "exponents": (
        {
            "P_X": {"$ref": "#/$defs/pmf"},
            "P_Y": {"$ref": "#/$defs/pmf"},
            "lam": {"$ref": "#/$defs/positive"},
            "c": {"$ref": "#/$defs/positive"},
            "d_ratio": {"$ref": "#/$defs/positive"},
            "distortion": {"$ref": "#/$defs/distortion"},
            "quantities": {
                "type": "array",
                "items": {"enum": ["ks", "tr", "tr_a"]},
                "minItems": 1,
                "uniqueItems": True,
            },
        },
        ["P_X", "P_Y", "lam", "distortion"],
    ),
    "attack": (
        {
            "alphabet_size": {"type": "integer", "minimum": 2},
            "lam": {"$ref": "#/$defs/positive"},
            "distortion": {"$ref": "#/$defs/distortion"},
            "game": {"enum": ["tr", "ks"]},
            "game_version": {"enum": ["c", "a"]},
            "y": {"$ref": "#/$defs/sequence"},
            "t": {"$ref": "#/$defs/sequence"},
            "t_A": {"$ref": "#/$defs/sequence"},
            "P_X": {"$ref": "#/$defs/pmf"},
            "brute_force": {"type": "boolean"},
        },
        ["lam", "distortion", "y"],
    ),
    "exact-pfn": (
        {
            **_GAME,
            "P_X": {"$ref": "#/$defs/pmf"},
            "P_Y": {"$ref": "#/$defs/pmf"},
            "game_version": {"enum": ["c", "a"]},
        },
        ["n", "lam", "distortion", "P_X", "P_Y"],
    ),
}


def config_schema(command: str) -> dict:
    props, required = _SPECIFIC[command]
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": f"adversarial-ht {command} configuration",
        "type": "object",
        "properties": {**_COMMON, **props},
        "required": ["version", *required],
        "additionalProperties": False,
        "$defs": _DEFS,
    }
