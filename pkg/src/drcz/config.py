"""Device configuration files for the simulation and analysis tools.

A :class:`DeviceConfig` bundles everything the experiments need: Hamiltonian
rates, coherence times, single-qubit pulse durations, readout confusion
rates for one- and two-round erasure checks, short-depth benchmark error
rates, and the quantities entering the coherence-limit scalings.

On disk a config is INI-style ``key = value`` text with one section per
parameter group; the unit is spelled in each key name (``_mhz``, ``_khz``,
``_us``, ``_ns``) so a value can never be read in the wrong unit silently.
A JSON document with the same section/key nesting is accepted anywhere a
config path is expected.  Parsing is strict: unknown sections or keys,
missing keys, and out-of-range values raise :class:`ConfigError` naming
the offending field; serialize/parse round-trips are exact.
"""

from __future__ import annotations

import configparser
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .benchmarking import NativeGateNoise
from .error_channels import ChannelRates, ReadoutModel
from .gate import SystemParams

__all__ = ["ConfigError", "DeviceConfig"]

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """A device-config file is malformed or out of range."""


def _require(table: dict[str, str], section: str, key: str) -> str:
    if key not in table:
        raise ConfigError(f"[{section}] is missing required key {key!r}")
    return table.pop(key)


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] {key}: must be finite, got {raw!r}")
    return value


def _get_float(table: dict[str, str], section: str, key: str, *,
               low: float | None = None, high: float | None = None,
               low_open: bool = False, nonzero: bool = False) -> float:
    value = _parse_float(section, key, _require(table, section, key))
    if low is not None and (value < low or (low_open and value == low)):
        bound = f"> {low}" if low_open else f">= {low}"
        raise ConfigError(f"[{section}] {key}: must be {bound}, got {value}")
    if high is not None and value > high:
        raise ConfigError(f"[{section}] {key}: must be <= {high}, got {value}")
    if nonzero and value == 0.0:
        raise ConfigError(f"[{section}] {key}: must be nonzero")
    return value


def _get_choice(table: dict[str, str], section: str, key: str,
                options: tuple[str, ...]) -> str:
    value = _require(table, section, key).strip().lower()
    if value not in options:
        raise ConfigError(f"[{section}] {key}: expected one of {options}, got {value!r}")
    return value


def _get_floats(table: dict[str, str], section: str, key: str, count: int) -> tuple[float, ...]:
    raw = _require(table, section, key)
    parts = [s for s in raw.replace(",", " ").split() if s]
    if len(parts) != count:
        raise ConfigError(f"[{section}] {key}: expected {count} values, got {len(parts)}")
    values = tuple(_parse_float(section, key, s) for s in parts)
    for v in values:
        if v <= 0:
            raise ConfigError(f"[{section}] {key}: entries must be positive, got {v}")
    return values


def _fmt(value: float) -> str:
    return repr(float(value))


_READOUT_KEYS = ("control_misassignment", "target_misassignment",
                 "control_leak_detection_error", "target_leak_detection_error",
                 "control_erasure_assignment", "target_erasure_assignment")


@dataclass(frozen=True)
class DeviceConfig:
    """Validated device parameters, grouped the way the config file is.

    ``cavity_t1_us`` lists the four measured dual-rail cavity lifetimes in
    file order; ``t1_order`` says how they map onto rails ("listed" keeps
    the file order as (a1, a2, b1, b2), "swapped" exchanges each pair).
    ``dephasing_rail`` says how the measured echo dephasing time of each
    dual-rail qubit, which constrains only the sum of the two rail rates,
    divides across the pair: "split" shares it evenly, "inner" puts it
    all on the coupler-adjacent rail, "outer" on the far rail.  Both
    assignments are physical conventions the measurements do not pin
    down, so they stay explicit config keys rather than baked-in choices.
    """

    # [hamiltonian]
    chi_bc_mhz: float
    chi_ac_mhz: float
    chi_ab_khz: float
    g_ac_mhz: float
    # [coherence]
    cavity_t1_us: tuple[float, float, float, float]
    t1_order: str
    coupler_t1_us: float
    coupler_tphi_echo_us: float
    control_dephasing_echo_us: float
    target_dephasing_echo_us: float
    dephasing_rail: str
    control_ramsey_us: float
    target_ramsey_us: float
    # [single_qubit_gates]
    control_x90_ns: float
    target_x90_ns: float
    # [readout_one_round] / [readout_two_round], (control, target) pairs
    one_round_misassignment: tuple[float, float]
    one_round_leak_detection_error: tuple[float, float]
    one_round_erasure_assignment: tuple[float, float]
    two_round_misassignment: tuple[float, float]
    two_round_leak_detection_error: tuple[float, float]
    two_round_erasure_assignment: tuple[float, float]
    # [short_depth_rates]
    cz_leak_control: float
    cz_leak_target: float
    cz_z_control: float
    cz_z_target: float
    cz_zz: float
    # [limits]
    hybridization: float
    coupler_anharmonicity_mhz: float

    # --- construction -----------------------------------------------------

    @classmethod
    def default(cls) -> "DeviceConfig":
        """The measured device tables, with the listed/split conventions."""
        single = ReadoutModel.single_round()
        double = ReadoutModel.two_round()
        cz = ChannelRates.benchmark_fit()
        return cls(
            chi_bc_mhz=-1.51, chi_ac_mhz=-1.26, chi_ab_khz=-6.64, g_ac_mhz=4.23,
            cavity_t1_us=(231.0, 411.0, 652.0, 342.0), t1_order="listed",
            coupler_t1_us=70.0, coupler_tphi_echo_us=1001.0,
            control_dephasing_echo_us=4000.0, target_dephasing_echo_us=4800.0,
            dephasing_rail="split",
            control_ramsey_us=3100.0, target_ramsey_us=1500.0,
            control_x90_ns=208.0, target_x90_ns=136.0,
            one_round_misassignment=single.misassignment,
            one_round_leak_detection_error=single.leak_detection_error,
            one_round_erasure_assignment=single.erasure_assignment,
            two_round_misassignment=double.misassignment,
            two_round_leak_detection_error=double.leak_detection_error,
            two_round_erasure_assignment=double.erasure_assignment,
            cz_leak_control=cz.p_leak_control, cz_leak_target=cz.p_leak_target,
            cz_z_control=cz.p_z_control, cz_z_target=cz.p_z_target, cz_zz=cz.p_zz,
            hybridization=1.0, coupler_anharmonicity_mhz=150.0,
        )

    @classmethod
    def from_text(cls, text: str) -> "DeviceConfig":
        """Parse INI-style text (or JSON if the text starts with '{')."""
        if text.lstrip().startswith("{"):
            return cls.from_json_text(text)
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        sections = {name: dict(parser.items(name)) for name in parser.sections()}
        if parser.defaults():
            raise ConfigError("values outside any [section] are not allowed")
        return cls._from_sections(sections)

    @classmethod
    def from_json_text(cls, text: str) -> "DeviceConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config: {exc}") from None
        if not isinstance(doc, dict) or not all(isinstance(v, dict) for v in doc.values()):
            raise ConfigError("JSON config must be an object of section objects")
        sections: dict[str, dict[str, str]] = {}
        for name, body in doc.items():
            flat = {}
            for key, value in body.items():
                if isinstance(value, (list, tuple)):
                    flat[str(key)] = " ".join(repr(float(v)) for v in value)
                elif isinstance(value, bool):
                    raise ConfigError(f"[{name}] {key}: booleans are not valid values")
                elif isinstance(value, (int, float, str)):
                    flat[str(key)] = str(value)
                else:
                    raise ConfigError(f"[{name}] {key}: unsupported value type")
            sections[str(name)] = flat
        return cls._from_sections(sections)

    @classmethod
    def from_file(cls, path: str | Path) -> "DeviceConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text)

    @classmethod
    def _from_sections(cls, sections: dict[str, dict[str, str]]) -> "DeviceConfig":
        known = ("hamiltonian", "coherence", "single_qubit_gates",
                 "readout_one_round", "readout_two_round",
                 "short_depth_rates", "limits")
        for name in sections:
            if name not in known:
                raise ConfigError(f"unknown section [{name}]")
        for name in known:
            if name not in sections:
                raise ConfigError(f"missing section [{name}]")

        ham = sections["hamiltonian"]
        coh = sections["coherence"]
        gates = sections["single_qubit_gates"]
        sdr = sections["short_depth_rates"]
        lim = sections["limits"]

        def _readout(name: str) -> tuple[tuple[float, float], ...]:
            body = sections[name]
            vals = [_get_float(body, name, k, low=0.0, high=1.0) for k in _READOUT_KEYS]
            _reject_leftovers(name, body)
            return ((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5]))

        kwargs = dict(
            chi_bc_mhz=_get_float(ham, "hamiltonian", "chi_bc_mhz", nonzero=True),
            chi_ac_mhz=_get_float(ham, "hamiltonian", "chi_ac_mhz"),
            chi_ab_khz=_get_float(ham, "hamiltonian", "chi_ab_khz"),
            g_ac_mhz=_get_float(ham, "hamiltonian", "g_ac_mhz", low=0.0, low_open=True),
            cavity_t1_us=_get_floats(coh, "coherence", "cavity_t1_us", 4),
            t1_order=_get_choice(coh, "coherence", "t1_order", ("listed", "swapped")),
            coupler_t1_us=_get_float(coh, "coherence", "coupler_t1_us", low=0.0, low_open=True),
            coupler_tphi_echo_us=_get_float(coh, "coherence", "coupler_tphi_echo_us",
                                            low=0.0, low_open=True),
            control_dephasing_echo_us=_get_float(coh, "coherence", "control_dephasing_echo_us",
                                                 low=0.0, low_open=True),
            target_dephasing_echo_us=_get_float(coh, "coherence", "target_dephasing_echo_us",
                                                low=0.0, low_open=True),
            dephasing_rail=_get_choice(coh, "coherence", "dephasing_rail",
                                        ("split", "inner", "outer")),
            control_ramsey_us=_get_float(coh, "coherence", "control_ramsey_us",
                                         low=0.0, low_open=True),
            target_ramsey_us=_get_float(coh, "coherence", "target_ramsey_us",
                                        low=0.0, low_open=True),
            control_x90_ns=_get_float(gates, "single_qubit_gates", "control_x90_ns",
                                      low=0.0, low_open=True),
            target_x90_ns=_get_float(gates, "single_qubit_gates", "target_x90_ns",
                                     low=0.0, low_open=True),
            cz_leak_control=_get_float(sdr, "short_depth_rates", "control_leak", low=0.0, high=1.0),
            cz_leak_target=_get_float(sdr, "short_depth_rates", "target_leak", low=0.0, high=1.0),
            cz_z_control=_get_float(sdr, "short_depth_rates", "control_z", low=0.0, high=1.0),
            cz_z_target=_get_float(sdr, "short_depth_rates", "target_z", low=0.0, high=1.0),
            cz_zz=_get_float(sdr, "short_depth_rates", "zz", low=0.0, high=1.0),
            hybridization=_get_float(lim, "limits", "hybridization",
                                     low=0.0, low_open=True, high=1.0),
            coupler_anharmonicity_mhz=_get_float(lim, "limits", "coupler_anharmonicity_mhz",
                                                 low=0.0, low_open=True),
        )
        one = _readout("readout_one_round")
        two = _readout("readout_two_round")
        kwargs.update(one_round_misassignment=one[0], one_round_leak_detection_error=one[1],
                      one_round_erasure_assignment=one[2],
                      two_round_misassignment=two[0], two_round_leak_detection_error=two[1],
                      two_round_erasure_assignment=two[2])
        for name in ("hamiltonian", "coherence", "single_qubit_gates",
                     "short_depth_rates", "limits"):
            _reject_leftovers(name, sections[name])
        return cls(**kwargs)

    # --- serialization ------------------------------------------------------

    def _sections(self) -> dict[str, dict[str, str]]:
        return {
            "hamiltonian": {
                "chi_bc_mhz": _fmt(self.chi_bc_mhz),
                "chi_ac_mhz": _fmt(self.chi_ac_mhz),
                "chi_ab_khz": _fmt(self.chi_ab_khz),
                "g_ac_mhz": _fmt(self.g_ac_mhz),
            },
            "coherence": {
                "cavity_t1_us": ", ".join(_fmt(v) for v in self.cavity_t1_us),
                "t1_order": self.t1_order,
                "coupler_t1_us": _fmt(self.coupler_t1_us),
                "coupler_tphi_echo_us": _fmt(self.coupler_tphi_echo_us),
                "control_dephasing_echo_us": _fmt(self.control_dephasing_echo_us),
                "target_dephasing_echo_us": _fmt(self.target_dephasing_echo_us),
                "dephasing_rail": self.dephasing_rail,
                "control_ramsey_us": _fmt(self.control_ramsey_us),
                "target_ramsey_us": _fmt(self.target_ramsey_us),
            },
            "single_qubit_gates": {
                "control_x90_ns": _fmt(self.control_x90_ns),
                "target_x90_ns": _fmt(self.target_x90_ns),
            },
            "readout_one_round": dict(zip(_READOUT_KEYS, (
                _fmt(self.one_round_misassignment[0]), _fmt(self.one_round_misassignment[1]),
                _fmt(self.one_round_leak_detection_error[0]),
                _fmt(self.one_round_leak_detection_error[1]),
                _fmt(self.one_round_erasure_assignment[0]),
                _fmt(self.one_round_erasure_assignment[1])))),
            "readout_two_round": dict(zip(_READOUT_KEYS, (
                _fmt(self.two_round_misassignment[0]), _fmt(self.two_round_misassignment[1]),
                _fmt(self.two_round_leak_detection_error[0]),
                _fmt(self.two_round_leak_detection_error[1]),
                _fmt(self.two_round_erasure_assignment[0]),
                _fmt(self.two_round_erasure_assignment[1])))),
            "short_depth_rates": {
                "control_leak": _fmt(self.cz_leak_control),
                "target_leak": _fmt(self.cz_leak_target),
                "control_z": _fmt(self.cz_z_control),
                "target_z": _fmt(self.cz_z_target),
                "zz": _fmt(self.cz_zz),
            },
            "limits": {
                "hybridization": _fmt(self.hybridization),
                "coupler_anharmonicity_mhz": _fmt(self.coupler_anharmonicity_mhz),
            },
        }

    def to_text(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        for name, body in self._sections().items():
            parser[name] = body
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def to_json(self) -> str:
        doc: dict[str, dict[str, object]] = {}
        for name, body in self._sections().items():
            out: dict[str, object] = {}
            for key, raw in body.items():
                if key in ("t1_order", "dephasing_rail"):
                    out[key] = raw
                elif key == "cavity_t1_us":
                    out[key] = list(self.cavity_t1_us)
                else:
                    out[key] = float(raw)
            doc[name] = out
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        text = self.to_json() if path.suffix == ".json" else self.to_text()
        path.write_text(text)
        return path

    # --- model builders -----------------------------------------------------

    def rail_t1_us(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Cavity lifetimes as ((a1, a2), (b1, b2)) after the order choice."""
        a1, a2, b1, b2 = self.cavity_t1_us
        if self.t1_order == "swapped":
            a1, a2, b1, b2 = a2, a1, b2, b1
        return ((a1, a2), (b1, b2))

    def system_params(self) -> SystemParams:
        (a1, a2), (b1, b2) = self.rail_t1_us()
        t1 = {"a1": a1, "a2": a2, "b1": b1, "b2": b2, "c": self.coupler_t1_us}
        if self.dephasing_rail == "split":
            tphi = {"a1": 2.0 * self.control_dephasing_echo_us,
                    "a2": 2.0 * self.control_dephasing_echo_us,
                    "b1": 2.0 * self.target_dephasing_echo_us,
                    "b2": 2.0 * self.target_dephasing_echo_us}
        elif self.dephasing_rail == "inner":
            tphi = {"a2": self.control_dephasing_echo_us, "b1": self.target_dephasing_echo_us}
        else:
            tphi = {"a1": self.control_dephasing_echo_us, "b2": self.target_dephasing_echo_us}
        tphi["c"] = self.coupler_tphi_echo_us
        return SystemParams.from_mhz(chi_bc=self.chi_bc_mhz, chi_ac=self.chi_ac_mhz,
                                     chi_ab=self.chi_ab_khz * 1e-3, g_ac=self.g_ac_mhz,
                                     t1=t1, tphi=tphi)

    def readout(self, rounds: int) -> ReadoutModel:
        if rounds == 1:
            return ReadoutModel(misassignment=self.one_round_misassignment,
                                leak_detection_error=self.one_round_leak_detection_error,
                                erasure_assignment=self.one_round_erasure_assignment)
        if rounds == 2:
            return ReadoutModel(misassignment=self.two_round_misassignment,
                                leak_detection_error=self.two_round_leak_detection_error,
                                erasure_assignment=self.two_round_erasure_assignment)
        raise ConfigError(f"readout rounds must be 1 or 2, got {rounds}")

    def channel_rates(self) -> ChannelRates:
        return ChannelRates(p_leak_control=self.cz_leak_control,
                            p_leak_target=self.cz_leak_target,
                            p_z_control=self.cz_z_control,
                            p_z_target=self.cz_z_target,
                            p_zz=self.cz_zz)

    def native_noise(self, *, include_cross_kerr: bool = True) -> NativeGateNoise:
        return NativeGateNoise.coherence_limited(
            self.channel_rates(),
            x90_durations_us=(self.control_x90_ns * 1e-3, self.target_x90_ns * 1e-3),
            rail_t1_us=self.rail_t1_us(),
            ramsey_tphi_us=(self.control_ramsey_us, self.target_ramsey_us),
            cross_kerr=TWO_PI * self.chi_ab_khz * 1e-3,
            include_cross_kerr=include_cross_kerr)


def _reject_leftovers(section: str, body: dict[str, str]) -> None:
    if body:
        key = sorted(body)[0]
        raise ConfigError(f"unknown key {key!r} in [{section}]")
