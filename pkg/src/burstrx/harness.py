"""Experiment orchestration: config, seeded sweeps, CSV output.

Monte-Carlo experiments are driven by a flat key/value config plus
command-line overrides. Every run writes a self-describing CSV and a
resolved-config sidecar next to it, and reruns with the same seed are
byte-identical regardless of worker count: per-frame seeds derive from
(master seed, grid index, frame index) and results reduce in frame
order, with early stopping applied to the ordered prefix only.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .air import estimate_air, sigma0_from_snr_db
from .middleton import MarkovMiddletonParams, average_powers, sample_noise
from .receivers import DESIGNS, turbo_decode
from .txchain import (
    ConvCodeSpec,
    apply_channel,
    conv_encode,
    differential_encode,
    interleave,
    make_interleaver,
    psk_map,
    psk_spec,
)

__all__ = [
    "ConfigError",
    "SimConfig",
    "SweepResult",
    "parse_config_file",
    "run_air_sweep",
    "run_ber_sweep",
    "complexity_count",
    "dump_noise",
]


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def _parse_list(raw: str, conv) -> tuple:
    return tuple(conv(tok.strip()) for tok in raw.split(",") if tok.strip())


@dataclass(frozen=True)
class SimConfig:
    """Resolved settings of one experiment run."""

    experiment: str = "air"
    seed: int = 1
    out: str | None = None
    threads: int = 1
    # channel
    A: float = 0.3
    Lambda: float = 10.0
    r: float = 0.9
    W: int = 4
    sigma0_sq: float = 1.0  # noise dumps only; air/ber derive it from SNR
    # receiver (None = matched)
    rx_A: float | None = None
    rx_Lambda: float | None = None
    rx_r: float | None = None
    rx_W: int | None = None
    # modulation and code
    M: int = 4
    code_memory: int = 2
    code_generators: tuple = (5, 7)
    # air
    snr_db: float = 3.0
    snr_grid: tuple = ()
    lambda_grid: tuple = ()
    T: int = 100000
    n_sequences: int = 10
    # ber
    K: int = 50000
    iterations: int = 10
    genie_iterations: int = 30
    designs: tuple = ("joint",)
    target_errors: int = 100
    max_frames: int = 50
    min_frames: int = 1

    _PARSERS = {
        "experiment": str,
        "seed": int,
        "out": str,
        "threads": int,
        "A": float,
        "Lambda": float,
        "r": float,
        "W": int,
        "sigma0_sq": float,
        "rx_A": float,
        "rx_Lambda": float,
        "rx_r": float,
        "rx_W": int,
        "M": int,
        "code_memory": int,
        "code_generators": lambda s: _parse_list(s, lambda t: int(t, 8)),
        "snr_db": float,
        "snr_grid": lambda s: _parse_list(s, float),
        "lambda_grid": lambda s: _parse_list(s, float),
        "T": int,
        "n_sequences": int,
        "K": int,
        "iterations": int,
        "genie_iterations": int,
        "designs": lambda s: _parse_list(s, str),
        "target_errors": int,
        "max_frames": int,
        "min_frames": int,
    }

    @classmethod
    def from_strings(cls, raw: dict, base: "SimConfig | None" = None) -> "SimConfig":
        """Apply string-valued settings (config file or CLI) over a base."""
        cfg = base if base is not None else cls()
        updates = {}
        for key, value in raw.items():
            if key not in cls._PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                updates[key] = cls._PARSERS[key](value)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
        return replace(cfg, **updates)

    def channel_params(self, sigma0_sq: float | None = None) -> MarkovMiddletonParams:
        try:
            return MarkovMiddletonParams(
                num_states=self.W,
                impulsive_index=self.A,
                power_ratio=self.Lambda,
                correlation=self.r,
                background_var=self.sigma0_sq if sigma0_sq is None else sigma0_sq,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def receiver_params(self, sigma0_sq: float | None = None) -> MarkovMiddletonParams:
        try:
            return MarkovMiddletonParams(
                num_states=self.rx_W if self.rx_W is not None else self.W,
                impulsive_index=self.rx_A if self.rx_A is not None else self.A,
                power_ratio=self.rx_Lambda if self.rx_Lambda is not None else self.Lambda,
                correlation=self.rx_r if self.rx_r is not None else self.r,
                background_var=self.sigma0_sq if sigma0_sq is None else sigma0_sq,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def code_spec(self) -> ConvCodeSpec:
        try:
            return ConvCodeSpec(memory=self.code_memory, generators=tuple(self.code_generators))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            val = getattr(self, f.name)
            if val is None:
                continue
            if f.name == "code_generators":
                val = ",".join(f"{g:o}" for g in val)
            elif isinstance(val, tuple):
                val = ",".join(str(v) for v in val)
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"


def parse_config_file(path: str) -> dict:
    """Read `key = value` lines; '#' starts a comment, blanks ignored."""
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = stripped.partition("=")
            raw[key.strip()] = value.strip()
    return raw


@dataclass
class SweepResult:
    """Tabular sweep output: ordered column names and one dict per row."""

    columns: tuple
    rows: list = field(default_factory=list)

    def add(self, **kwargs):
        missing = set(self.columns) - set(kwargs)
        if missing:
            raise ValueError(f"row missing columns {sorted(missing)}")
        self.rows.append({c: kwargs[c] for c in self.columns})

    def write_csv(self, path: str):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([row[c] for c in self.columns])


def _sidecar_path(out: str) -> str:
    stem = out[: -len(".csv")] if out.endswith(".csv") else out
    return stem + ".resolved.cfg"


def _write_outputs(result: SweepResult, config: SimConfig, extra_meta: list | None = None):
    if config.out is None:
        return
    result.write_csv(config.out)
    with open(_sidecar_path(config.out), "w", encoding="utf-8") as fh:
        fh.write(config.to_text())
        for line in extra_meta or []:
            fh.write(f"# {line}\n")


AIR_COLUMNS = (
    "A", "Lambda", "r", "W", "snr_db", "rx_A", "rx_Lambda", "rx_r", "rx_W",
    "air_bits", "std_err", "T", "n_seq", "seed",
)


def run_air_sweep(config: SimConfig) -> SweepResult:
    """Information-rate estimates over a power-ratio and/or SNR grid.

    Every grid point reuses the master seed, so curves across the grid
    share common random draws and a single-point sweep is bit-identical
    to a direct estimator call.
    """
    if config.T < 1 or config.n_sequences < 1:
        raise ConfigError("T and n_sequences must be >= 1")
    lambdas = config.lambda_grid or (config.Lambda,)
    snrs = config.snr_grid or (config.snr_db,)
    result = SweepResult(columns=AIR_COLUMNS)
    diagnostics = []
    for lam in lambdas:
        for snr in snrs:
            chan = replace(config.channel_params(), power_ratio=lam)
            rx = config.receiver_params()
            if config.rx_Lambda is None:
                rx = replace(rx, power_ratio=lam)
            est = estimate_air(
                chan,
                config.M,
                snr,
                config.T,
                config.n_sequences,
                config.seed,
                receiver=rx,
                threads=config.threads,
            )
            result.add(
                A=chan.impulsive_index, Lambda=chan.power_ratio, r=chan.correlation,
                W=chan.num_states, snr_db=snr,
                rx_A=rx.impulsive_index, rx_Lambda=rx.power_ratio, rx_r=rx.correlation,
                rx_W=rx.num_states,
                air_bits=est.air, std_err=est.std_error,
                T=config.T, n_seq=config.n_sequences, seed=config.seed,
            )
            sb, si = average_powers(replace(chan, background_var=sigma0_from_snr_db(snr)))
            diagnostics.append(
                f"power diag Lambda={lam} snr_db={snr}: sigma_B2={sb!r} sigma_I2={si!r}"
            )
    _write_outputs(result, config, diagnostics)
    return result


BER_COLUMNS = (
    "A", "Lambda", "r", "W", "rx_A", "rx_Lambda", "rx_r", "rx_W", "M", "K",
    "interleaver_depth", "snr_db", "design", "iteration", "n_frames", "n_bits",
    "n_errors", "ber", "low_confidence", "target_errors", "seed",
)


def _ber_frame(design, chan, rx, code, m_order, k_info, perm, iters, master_seed, point_key, frame_idx):
    labeling = psk_spec(m_order)
    bit_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(*point_key, frame_idx, 0))
    )
    bits = bit_rng.integers(0, 2, size=k_info)
    coded = conv_encode(bits, code)
    d = interleave(coded, perm)
    x = psk_map(d, labeling)
    tx_frame = x if design == "psk_baseline" else differential_encode(x)
    noise = sample_noise(
        chan,
        len(tx_frame),
        np.random.SeedSequence(entropy=master_seed, spawn_key=(*point_key, frame_idx, 1)),
    )
    y = apply_channel(tx_frame, noise)
    states = noise.states if design == "genie_csi" else None
    _, history = turbo_decode(y, design, rx, iters, perm, code, labeling, noise_states=states)
    errors = np.array(
        [int(np.sum((h[:, 1] > h[:, 0]).astype(np.int64) != bits)) for h in history],
        dtype=np.int64,
    )
    return errors


def run_ber_sweep(config: SimConfig) -> SweepResult:
    """Bit error rates per (SNR, design, iteration).

    Frames accumulate until the final-iteration error count reaches
    ``target_errors`` (but at least ``min_frames`` frames) or
    ``max_frames`` is hit; rows below the target are flagged
    ``low_confidence``. Frame seeds are shared across designs at the
    same SNR, so design comparisons ride on common noise.
    """
    if not config.designs:
        raise ConfigError("ber sweep needs at least one design")
    for d in config.designs:
        if d not in DESIGNS:
            raise ConfigError(f"unknown design {d!r}; expected one of {DESIGNS}")
    if config.K < 1:
        raise ConfigError("K must be >= 1")
    if config.max_frames < 1 or config.min_frames < 1 or config.target_errors < 1:
        raise ConfigError("frame and error counts must be >= 1")
    snrs = config.snr_grid or (config.snr_db,)
    code = config.code_spec()
    labeling = psk_spec(config.M)
    n_coded_info = config.K * len(code.generators)
    depth_total = (config.K + code.memory) * len(code.generators)
    if n_coded_info % labeling.bits_per_symbol or depth_total % labeling.bits_per_symbol:
        raise ConfigError("coded frame does not fill a whole number of symbols")
    # info-driven coded bits are interleaved; the tail's ride along in place
    perm = np.concatenate(
        [
            make_interleaver(n_coded_info, np.random.SeedSequence(entropy=config.seed, spawn_key=(0xE11,))),
            np.arange(n_coded_info, depth_total),
        ]
    )

    result = SweepResult(columns=BER_COLUMNS)
    pool = ProcessPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
    try:
        for snr_idx, snr in enumerate(snrs):
            sigma0 = sigma0_from_snr_db(snr)
            chan = config.channel_params(sigma0_sq=sigma0)
            rx = config.receiver_params(sigma0_sq=sigma0)
            for design in config.designs:
                iters = config.genie_iterations if design == "genie_csi" else config.iterations
                point_key = (snr_idx,)
                frame_args = lambda i: (
                    design, chan, rx, code, config.M, config.K, perm, iters,
                    config.seed, point_key, i,
                )
                per_frame = []
                next_frame = 0
                while True:
                    # sequential stopping semantics: decide on the ordered prefix
                    done = len(per_frame)
                    final_errs = sum(e[-1] for e in per_frame)
                    if done >= config.min_frames and final_errs >= config.target_errors:
                        break
                    if done >= config.max_frames:
                        break
                    wave = min(
                        max(config.threads, 1), config.max_frames - next_frame
                    )
                    batch = range(next_frame, next_frame + wave)
                    if pool is not None:
                        futs = [pool.submit(_ber_frame, *frame_args(i)) for i in batch]
                        per_frame.extend(f.result() for f in futs)
                    else:
                        per_frame.extend(_ber_frame(*frame_args(i)) for i in batch)
                    next_frame += wave
                # truncate to the exact sequential stopping point
                used = len(per_frame)
                cum = 0
                for idx, errs in enumerate(per_frame):
                    cum += errs[-1]
                    if idx + 1 >= config.min_frames and cum >= config.target_errors:
                        used = idx + 1
                        break
                per_frame = per_frame[:used]

                totals = np.sum(np.stack(per_frame), axis=0)
                n_bits = used * config.K
                for it, errs in enumerate(totals):
                    result.add(
                        A=config.A, Lambda=config.Lambda, r=config.r, W=config.W,
                        rx_A=rx.impulsive_index, rx_Lambda=rx.power_ratio,
                        rx_r=rx.correlation, rx_W=rx.num_states,
                        M=config.M, K=config.K, interleaver_depth=n_coded_info,
                        snr_db=snr, design=design, iteration=it,
                        n_frames=used, n_bits=n_bits, n_errors=int(errs),
                        ber=int(errs) / n_bits,
                        low_confidence=int(errs) < config.target_errors,
                        target_errors=config.target_errors, seed=config.seed,
                    )
    finally:
        if pool is not None:
            pool.shutdown()
    _write_outputs(result, config)
    return result


def complexity_count(m_order: int, w_states: int, memory: int, iterations: int, design: str) -> int:
    """Multiplications per transmitted symbol for a whole turbo receive.

    Counts forward+backward multiplications of every constituent BCJR
    pass: the joint design re-runs its (M*W)^2-transition super-trellis
    and the M^(2L)-transition decoder each iteration; the separate design
    pays the detector once and iterates only the M-state differential
    demapper and the decoder.
    """
    if m_order < 1 or w_states < 1 or memory < 1 or iterations < 0:
        raise ValueError("complexity arguments must be positive (iterations >= 0)")
    mw2 = (m_order * w_states) ** 2
    dec = m_order ** (2 * memory)
    if design == "joint":
        return 2 * (iterations + 1) * (mw2 + dec)
    if design == "separate":
        return 2 * (mw2 + (iterations + 1) * (m_order**2 + dec))
    raise ValueError(f"unknown design {design!r}; expected 'joint' or 'separate'")


NOISE_COLUMNS = ("t", "state", "re", "im")


def dump_noise(config: SimConfig) -> SweepResult:
    """One seeded noise realization as (t, state, re, im) rows."""
    if config.T < 1:
        raise ConfigError("T must be >= 1")
    realization = sample_noise(config.channel_params(), config.T, config.seed)
    result = SweepResult(columns=NOISE_COLUMNS)
    for t in range(config.T):
        result.add(
            t=t,
            state=int(realization.states[t]),
            re=float(realization.samples[t].real),
            im=float(realization.samples[t].imag),
        )
    _write_outputs(result, config)
    return result
