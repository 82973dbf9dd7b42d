"""Required fields and types of every emitted document.

JSON payloads are dictionaries checked field by field; CSV payloads are
checked for their exact column order.
"""

from core.errors import InvalidInputError

NUMBER = (int, float)
OPTIONAL_NUMBER = (int, float, type(None))

SCHEMAS = {
    "certificate": {
        "n": int,
        "lambda": int,
        "method": str,
        "status": str,
        "size": int,
        "lower_bound": int,
        "selected": list,
        "seed": (int, type(None)),
        "wall_time_ms": NUMBER,
    },
    "graph": {
        "n": int,
        "n_patterns": int,
        "n_covers": int,
        "identities": dict,
    },
    "audit": {
        "n": int,
        "max_J": int,
        "argmax_J": str,
        "max_C": int,
        "four_cover_pair_count": int,
        "adjacent_swap_iff_holds": bool,
        "readings": dict,
        "violations": list,
        "identities": dict,
    },
    "gap": {
        "n": int,
        "p": NUMBER,
        "trials": int,
        "master_seed": int,
        "K_nominal": OPTIONAL_NUMBER,
        "lambda_exact": NUMBER,
        "empirical_pmf": dict,
        "tv_to_poisson": NUMBER,
        "stein_chen_bound": OPTIONAL_NUMBER,
        "cover_probability": NUMBER,
        "warnings": list,
    },
}

COLUMNS = {
    "sweep": ("p", "covers", "trials", "phat", "ci_lo", "ci_hi", "lambda_exact"),
    "bounds": ("n", "lambda", "pigeonhole_lower", "thm2_upper", "thm3_upper", "best_known"),
}


def validate_payload(kind, payload):
    """Raise InvalidInputError when `payload` does not match the schema of `kind`."""
    if kind in COLUMNS:
        header = tuple(payload.get("columns", ()))
        if header != COLUMNS[kind]:
            raise InvalidInputError(f"{kind}: columns {header} != {COLUMNS[kind]}")
        width = len(header)
        for i, row in enumerate(payload.get("rows", [])):
            if len(row) != width:
                raise InvalidInputError(f"{kind}: row {i} has {len(row)} cells, expected {width}")
        return payload
    schema = SCHEMAS.get(kind)
    if schema is None:
        raise InvalidInputError(f"no schema for payload kind '{kind}'")
    if not isinstance(payload, dict):
        raise InvalidInputError(f"{kind}: payload must be an object")
    for key, types in schema.items():
        if key not in payload:
            raise InvalidInputError(f"{kind}: missing field '{key}'")
        value = payload[key]
        if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
            raise InvalidInputError(f"{kind}: field '{key}' must not be a boolean")
        if not isinstance(value, types):
            raise InvalidInputError(
                f"{kind}: field '{key}' has type {type(value).__name__}"
            )
    if kind == "gap" and any(not str(k).isdigit() for k in payload["empirical_pmf"]):
        raise InvalidInputError("gap: empirical_pmf keys must be non-negative integers")
    return payload
