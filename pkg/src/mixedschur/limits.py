import os

DEFAULT_DENSE_CAP = 4096
DEFAULT_ENUM_CAP = 10**6


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(float(raw))
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None


def dense_cap() -> int:
    """Largest dense matrix dimension we agree to build (SCHUR_CAP_DENSE)."""
    return _env_int("SCHUR_CAP_DENSE", DEFAULT_DENSE_CAP)


def enum_cap() -> int:
    """Maximum number of items a lazy enumerator may yield (SCHUR_CAP_ENUM)."""
    return _env_int("SCHUR_CAP_ENUM", DEFAULT_ENUM_CAP)
