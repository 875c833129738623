"""Key-value configuration files.

One ``key = value`` per line, ``#`` starts a comment.  Keys carry their unit::

    lambda_p_nm = 532
    n_p = 1.8          # refractive indices are required
    w_0_um = 50
    grid_n = 128
    grid_qmax = 0      # rad/m; 0 or absent picks 9 / w_0
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .channel import OpticalConfig
from .modes import DEFAULT_N, MomentumGrid

#: config key -> (OpticalConfig field, scale to SI)
OPTICAL_KEYS = {
    "lambda_p_nm": ("lambda_p", 1e-9),
    "lambda_a_nm": ("lambda_A", 1e-9),
    "lambda_b_nm": ("lambda_B", 1e-9),
    "lambda_c_nm": ("lambda_C", 1e-9),
    "n_p": ("n_p", 1.0),
    "n_a": ("n_A", 1.0),
    "n_b": ("n_B", 1.0),
    "n_c": ("n_C", 1.0),
    "l_p_mm": ("L_p", 1e-3),
    "l_d_mm": ("L_D", 1e-3),
    "poling_um": ("Lambda_pp", 1e-6),
    "w_p_um": ("w_p", 1e-6),
    "w_d_um": ("w_D", 1e-6),
    "w_0_um": ("w_0", 1e-6),
    "gamma_sinc": ("gamma_sinc", 1.0),
}
REQUIRED = ("n_p", "n_a", "n_b", "n_c")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Settings:
    config: OpticalConfig
    grid_n: int | None = None  # None: each computation picks its own default
    grid_qmax: float | None = None

    def grid(self) -> MomentumGrid:
        return MomentumGrid.for_waist(self.config.w_0, n=self.grid_n or DEFAULT_N, q_max=self.grid_qmax)


def parse_config(text: str) -> Settings:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().lower()
        if not sep or not val.strip():
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in OPTICAL_KEYS and key not in ("grid_n", "grid_qmax"):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = val.strip()
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    kwargs = {}
    try:
        for key, (name, scale) in OPTICAL_KEYS.items():
            if key in values:
                kwargs[name] = float(values[key]) * scale
        grid_n = int(values["grid_n"]) if "grid_n" in values else None
        qmax = float(values.get("grid_qmax", 0.0))
        cfg = OpticalConfig(**kwargs)
        settings = Settings(cfg, grid_n, qmax if qmax > 0 else None)
        settings.grid()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return settings


def load_config(path: str | Path) -> Settings:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def default_settings() -> Settings:
    return Settings(OpticalConfig.default())


def format_config(cfg: OpticalConfig) -> str:
    lines = []
    for key, (name, scale) in OPTICAL_KEYS.items():
        lines.append(f"{key} = {getattr(cfg, name) / scale:.12g}")
    return "\n".join(lines) + "\n"
